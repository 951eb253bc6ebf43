#include "ttb/config.hpp"

#include <algorithm>
#include <fstream>

namespace ttb {

void check_allowed_keys(const Json& obj, const std::vector<std::string>& allowed,
                        const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw std::runtime_error("unknown config key in " + context + ": \"" + it.key() + "\"");
  }
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config file: " + path.string());
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
  }
}

GenConfig gen_config_from_json(const Json& j) {
  check_allowed_keys(j, {"per_task", "seed", "holdout_fraction", "tasks"}, "gen-data config");
  GenConfig c;
  if (j.contains("per_task")) c.per_task = j.at("per_task").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("holdout_fraction")) c.holdout_fraction = j.at("holdout_fraction").get<double>();
  if (j.contains("tasks")) {
    c.tasks.clear();
    for (const auto& t : j.at("tasks")) c.tasks.push_back(task_from_name(t.get<std::string>()));
  }
  return c;
}

Json gen_config_to_json(const GenConfig& c) {
  Json tasks = Json::array();
  for (TaskId t : c.tasks) tasks.push_back(task_name(t));
  return Json{{"per_task", c.per_task},
              {"seed", c.seed},
              {"holdout_fraction", c.holdout_fraction},
              {"tasks", tasks}};
}

TrainSetup train_setup_from_json(const Json& j) {
  check_allowed_keys(j, {"policy", "train"}, "train config");
  TrainSetup s;
  if (j.contains("policy")) {
    const Json& p = j.at("policy");
    check_allowed_keys(p,
                       {"visual", "conditioning", "d_model", "heads", "enc_layers", "dec_layers",
                        "ffn_mult", "dropout", "patch", "max_prompt", "max_seq", "train_shuffle",
                        "vocab_size"},
                       "train config: policy");
    if (p.contains("visual")) s.policy.visual = visual_mode_from_name(p.at("visual"));
    if (p.contains("conditioning"))
      s.policy.conditioning = conditioning_from_name(p.at("conditioning"));
    if (p.contains("d_model")) s.policy.d_model = p.at("d_model").get<int>();
    if (p.contains("heads")) s.policy.heads = p.at("heads").get<int>();
    if (p.contains("enc_layers")) s.policy.enc_layers = p.at("enc_layers").get<int>();
    if (p.contains("dec_layers")) s.policy.dec_layers = p.at("dec_layers").get<int>();
    if (p.contains("ffn_mult")) s.policy.ffn_mult = p.at("ffn_mult").get<int>();
    if (p.contains("dropout")) s.policy.dropout = p.at("dropout").get<double>();
    if (p.contains("patch")) s.policy.patch = p.at("patch").get<int>();
    if (p.contains("max_prompt")) s.policy.max_prompt = p.at("max_prompt").get<int>();
    if (p.contains("max_seq")) s.policy.max_seq = p.at("max_seq").get<int>();
    if (p.contains("train_shuffle")) s.policy.train_shuffle = p.at("train_shuffle").get<bool>();
    if (p.contains("vocab_size")) s.policy.vocab_size = p.at("vocab_size").get<int>();
  }
  if (j.contains("train")) {
    const Json& t = j.at("train");
    check_allowed_keys(t,
                       {"max_lr", "min_lr", "warmup_steps", "total_steps", "weight_decay",
                        "clip_norm", "batch_size", "epochs", "seed"},
                       "train config: train");
    if (t.contains("max_lr")) s.train.max_lr = t.at("max_lr").get<double>();
    if (t.contains("min_lr")) s.train.min_lr = t.at("min_lr").get<double>();
    if (t.contains("warmup_steps")) s.train.warmup_steps = t.at("warmup_steps").get<int>();
    if (t.contains("total_steps")) s.train.total_steps = t.at("total_steps").get<int>();
    if (t.contains("weight_decay")) s.train.weight_decay = t.at("weight_decay").get<double>();
    if (t.contains("clip_norm")) s.train.clip_norm = t.at("clip_norm").get<double>();
    if (t.contains("batch_size")) s.train.batch_size = t.at("batch_size").get<int>();
    if (t.contains("epochs")) s.train.epochs = t.at("epochs").get<int>();
    if (t.contains("seed")) s.train.seed = t.at("seed").get<uint64_t>();
  }
  return s;
}

Json train_setup_to_json(const TrainSetup& s) {
  return Json{{"policy", Json{{"visual", visual_mode_name(s.policy.visual)},
                              {"conditioning", conditioning_name(s.policy.conditioning)},
                              {"d_model", s.policy.d_model},
                              {"heads", s.policy.heads},
                              {"enc_layers", s.policy.enc_layers},
                              {"dec_layers", s.policy.dec_layers},
                              {"ffn_mult", s.policy.ffn_mult},
                              {"dropout", s.policy.dropout},
                              {"patch", s.policy.patch},
                              {"max_prompt", s.policy.max_prompt},
                              {"max_seq", s.policy.max_seq},
                              {"train_shuffle", s.policy.train_shuffle},
                              {"vocab_size", s.policy.vocab_size}}},
              {"train", Json{{"max_lr", s.train.max_lr},
                             {"min_lr", s.train.min_lr},
                             {"warmup_steps", s.train.warmup_steps},
                             {"total_steps", s.train.total_steps},
                             {"weight_decay", s.train.weight_decay},
                             {"clip_norm", s.train.clip_norm},
                             {"batch_size", s.train.batch_size},
                             {"epochs", s.train.epochs},
                             {"seed", s.train.seed}}}};
}

EvalConfig eval_config_from_json(const Json& j) {
  check_allowed_keys(j,
                     {"episodes_per_cell", "budget_mode", "perturbations", "levels", "difficulties",
                      "tasks", "seed", "jobs"},
                     "eval config");
  EvalConfig c;
  if (j.contains("episodes_per_cell")) c.episodes_per_cell = j.at("episodes_per_cell").get<int>();
  if (j.contains("budget_mode")) c.budget = budget_mode_from_name(j.at("budget_mode"));
  if (j.contains("perturbations")) {
    c.perturbations.clear();
    for (const auto& p : j.at("perturbations"))
      c.perturbations.push_back(perturb_from_name(p.get<std::string>()));
  }
  if (j.contains("levels")) {
    c.levels.clear();
    for (const auto& l : j.at("levels")) c.levels.push_back(level_from_name(l.get<std::string>()));
  }
  if (j.contains("difficulties")) {
    c.difficulties.clear();
    for (const auto& d : j.at("difficulties"))
      c.difficulties.push_back(difficulty_from_name(d.get<std::string>()));
  }
  if (j.contains("tasks")) {
    c.tasks.clear();
    for (const auto& t : j.at("tasks")) c.tasks.push_back(task_from_name(t.get<std::string>()));
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  return c;
}

Json eval_config_to_json(const EvalConfig& c) {
  Json perturbations = Json::array(), levels = Json::array(), difficulties = Json::array(),
       tasks = Json::array();
  for (auto p : c.perturbations) perturbations.push_back(perturb_name(p));
  for (auto l : c.levels) levels.push_back(level_name(l));
  for (auto d : c.difficulties) difficulties.push_back(difficulty_name(d));
  for (auto t : c.tasks) tasks.push_back(task_name(t));
  return Json{{"episodes_per_cell", c.episodes_per_cell},
              {"budget_mode", budget_mode_name(c.budget)},
              {"perturbations", perturbations},
              {"levels", levels},
              {"difficulties", difficulties},
              {"tasks", tasks},
              {"seed", c.seed},
              {"jobs", c.jobs}};
}

}  // namespace ttb
