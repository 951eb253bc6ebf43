#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ttb/dataset.hpp"
#include "ttb/evaluator.hpp"
#include "ttb/trainer.hpp"

namespace ttb {

// Strict config parsing: unknown keys are rejected by name so typos cannot
// silently fall back to defaults.
void check_allowed_keys(const Json& obj, const std::vector<std::string>& allowed,
                        const std::string& context);

Json load_config_file(const std::filesystem::path& path);

GenConfig gen_config_from_json(const Json& j);
Json gen_config_to_json(const GenConfig& c);

struct TrainSetup {
  PolicyConfig policy;
  TrainConfig train;
};
TrainSetup train_setup_from_json(const Json& j);  // vocab_size filled by caller
Json train_setup_to_json(const TrainSetup& s);

EvalConfig eval_config_from_json(const Json& j);
Json eval_config_to_json(const EvalConfig& c);

}  // namespace ttb
