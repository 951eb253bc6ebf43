#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttb/perturb.hpp"
#include "ttb/policy.hpp"
#include "ttb/tasks.hpp"
#include "ttb/trainer.hpp"

namespace ttb {

enum class BudgetMode { Lenient, Strict };
const char* budget_mode_name(BudgetMode m);
BudgetMode budget_mode_from_name(const std::string& s);

struct EvalConfig {
  int episodes_per_cell = 200;
  BudgetMode budget = BudgetMode::Lenient;
  std::vector<PerturbKind> perturbations = {PerturbKind::None};
  std::vector<Level> levels = {Level::L1};
  std::vector<Difficulty> difficulties = {Difficulty::Default};
  std::vector<TaskId> tasks = training_tasks();
  uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct EpisodeResult {
  EpisodeStatus::Outcome outcome = EpisodeStatus::Outcome::Failure;
  int steps = 0;
  int min_actions = 0;
  bool error = false;
  std::string error_message;
};

struct CellKey {
  TaskId task = TaskId::T1;
  Level level = Level::L1;
  Difficulty difficulty = Difficulty::Default;
  PerturbKind perturbation = PerturbKind::None;
  BudgetMode budget = BudgetMode::Lenient;

  std::string label() const;
  bool operator==(const CellKey&) const = default;
};

struct CellResult {
  int episodes = 0;
  int successes = 0;
  int errors = 0;
  double mean_steps = 0.0;
  double mean_min_actions = 0.0;
  double mean_random_chance = 0.0;
  bool skipped = false;
  std::string skip_reason;

  double rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
};

struct EvalReport {
  uint64_t seed = 0;
  int episodes_per_cell = 0;
  PolicyConfig policy;
  std::vector<std::pair<CellKey, CellResult>> cells;

  std::string to_csv() const;
  Json to_json() const;
  static EvalReport from_json(const Json& j);
};

// Per-action random baseline 1/800 = 0.125% (one of 800 bins summed over
// the 14 coordinates), extended to t i.i.d. steps as 0.00125^t.
double random_chance(int t);

// Prompt after the instruction-side part of a perturbation: the tokenized
// units plus features for any surviving referent slots.
struct PreparedPrompt {
  TokenizedPrompt tp;
  std::vector<ReferentFeature> slots;
};
PreparedPrompt prepare_prompt(const TaskInstance& instance, const TemplateLibrary& library,
                              const Vocabulary& vocab, const PerturbationSpec& spec);

// Reasons a perturbation cannot run for a task/architecture, if any.
std::optional<std::string> perturbation_incompatibility(PerturbKind kind, TaskId task,
                                                        const PolicyConfig& cfg);

EpisodeResult run_episode(const Policy& policy, const TaskInstance& instance,
                          const TemplateLibrary& library, const Vocabulary& vocab,
                          const PerturbationSpec& spec, BudgetMode mode);

// Uniform-random-bins agent under the same episode protocol.
EpisodeResult run_random_episode(const TaskInstance& instance, BudgetMode mode, uint64_t seed);

EvalReport evaluate(const Policy& policy, const EvalConfig& config, const TemplateLibrary& library,
                    const Vocabulary& vocab, const AssetPartition& partition);

}  // namespace ttb
