// Command-line entry points for the tabletop benchmark: dataset generation,
// behaviour-cloning training, perturbation-grid evaluation, prompt
// perturbation previews, and report merging.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ttb/config.hpp"
#include "ttb/report.hpp"

namespace {

using namespace ttb;

void log_resolved_config(const Json& resolved, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream f(out_dir / "resolved_config.json");
  f << resolved.dump(2) << '\n';
  std::cout << "resolved config: " << resolved.dump() << "\n";
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, int jobs,
                 int64_t seed_override) {
  GenConfig cfg;
  if (!config_path.empty()) cfg = gen_config_from_json(load_config_file(config_path));
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  log_resolved_config(gen_config_to_json(cfg), out_dir);
  generate_dataset(cfg, out_dir, jobs);
  std::cout << "wrote " << cfg.per_task << " demos per task to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, int64_t seed_override) {
  TrainSetup setup;
  if (!config_path.empty()) setup = train_setup_from_json(load_config_file(config_path));
  if (seed_override >= 0) setup.train.seed = static_cast<uint64_t>(seed_override);

  TemplateLibrary library = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(library.vocab_corpus());
  setup.policy.vocab_size = vocab.size();
  log_resolved_config(train_setup_to_json(setup), out_dir);

  Dataset ds = load_dataset(data_dir);
  auto [train_recs, valid_recs] = split_records(ds);
  std::cout << "preprocessing " << train_recs.size() << " train / " << valid_recs.size()
            << " valid records\n";
  std::vector<PreppedTrajectory> train_set, valid_set;
  for (const Record* r : train_recs) train_set.push_back(preprocess(*r, vocab, library));
  for (const Record* r : valid_recs) valid_set.push_back(preprocess(*r, vocab, library));

  Policy policy(setup.policy, setup.train.seed);
  TrainResult result = train(policy, train_set, valid_set, setup.train, out_dir);
  std::cout << "trained " << result.total_steps << " steps, final valid loss "
            << result.final_valid_loss << "\n";
  std::cout << "checkpoint: " << (std::filesystem::path(out_dir) / "policy_final.bin") << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& config_path,
             const std::string& data_dir, const std::string& out_dir, int jobs,
             int64_t seed_override) {
  EvalConfig cfg;
  if (!config_path.empty()) cfg = eval_config_from_json(load_config_file(config_path));
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  if (jobs > 0) cfg.jobs = jobs;
  log_resolved_config(eval_config_to_json(cfg), out_dir);

  TemplateLibrary library = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(library.vocab_corpus());
  Policy policy = Policy::load(ckpt_path);
  if (policy.config().vocab_size != vocab.size())
    throw std::runtime_error("checkpoint vocabulary size " +
                             std::to_string(policy.config().vocab_size) +
                             " does not match current vocabulary " + std::to_string(vocab.size()));

  AssetPartition partition;
  if (!data_dir.empty()) {
    partition = load_dataset(data_dir).manifest.partition;
  } else {
    partition = partition_assets(cfg.seed);
    std::cout << "note: no --data given; deriving asset partition from the eval seed\n";
  }

  EvalReport report = evaluate(policy, cfg, library, vocab, partition);
  std::filesystem::path dir(out_dir);
  write_text_file(dir / "report.csv", report.to_csv());
  write_text_file(dir / "report.json", report.to_json().dump(2) + "\n");
  std::cout << report.to_csv();
  std::cout << "wrote " << (dir / "report.csv") << " and report.json\n";
  return 0;
}

int cmd_perturb_preview(const std::string& task_str, const std::string& perturb_str, uint64_t seed,
                        const std::string& level_str, const std::string& difficulty_str) {
  TaskId task = task_from_name(task_str);
  PerturbKind kind = perturb_from_name(perturb_str);
  Level level = level_from_name(level_str);
  Difficulty difficulty = difficulty_from_name(difficulty_str);

  TemplateLibrary library = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(library.vocab_corpus());
  AssetPartition partition = partition_assets(seed);
  TaskInstance instance = sample_instance(task, level, difficulty, partition, seed);

  MultimodalPrompt before = instance_prompt(instance, library, PromptVariant::original());
  TokenizedPrompt before_tp = vocab.tokenize_prompt(before);

  if (kind == PerturbKind::ShuffleObjects) {
    ObjectCentricObs obs = object_tokens(instance.initial);
    Rng rng(Rng::derive(seed, Rng::hash_label("preview-shuffle")));
    ObjectCentricObs after = shuffle_objects(obs, rng);
    auto dump = [](const ObjectCentricObs& o) {
      std::string s;
      for (const auto& t : o.tokens)
        s += std::string(s.empty() ? "" : " ") + texture_word(t.texture) + "-" +
             shape_word(t.shape) + "#" + std::to_string(t.object_id);
      return s;
    };
    std::cout << "before: " << dump(obs) << "\n";
    std::cout << "after:  " << dump(after) << "\n";
    return 0;
  }

  PreparedPrompt prepared = prepare_prompt(instance, library, vocab, {kind, seed});
  auto unit_dump = [&](const TokenizedPrompt& tp) {
    std::string s;
    for (const auto& u : tp.units) {
      if (!s.empty()) s += ' ';
      s += u.is_token() ? vocab.token_of(u.token_id()) : "<" + u.slot().id + ">";
    }
    return s;
  };
  std::cout << "before: " << before.to_string() << "\n";
  std::cout << "before tokens (" << before_tp.size() << "): " << unit_dump(before_tp) << "\n";
  std::cout << "after tokens  (" << prepared.tp.size() << "): " << unit_dump(prepared.tp) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  std::vector<EvalReport> reports;
  for (const auto& path : inputs) reports.push_back(load_report_json(path));
  EvalReport merged = merge_reports(reports);
  write_report_bundle(merged, out_dir);
  std::cout << "merged " << reports.size() << " reports into " << out_dir << " ("
            << merged.cells.size() << " cells)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Tabletop multimodal-instruction benchmark: data generation, behaviour cloning, and "
      "perturbation-grid evaluation. Template data directory resolves from TTB_DATA_DIR when "
      "set."};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", data_dir, ckpt_path;
  int jobs = 0;
  int64_t seed = -1;

  auto* gen = app.add_subcommand("gen-data", "Generate oracle demonstration records");
  gen->add_option("--config", config_path, "JSON config file");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--jobs", jobs, "Parallel workers");
  gen->add_option("--seed", seed, "Override the config seed");

  auto* train = app.add_subcommand("train", "Behaviour-clone a policy on generated data");
  train->add_option("--config", config_path, "JSON config file (policy + train sections)");
  train->add_option("--data", data_dir, "Dataset directory from gen-data")->required();
  train->add_option("--out", out_dir, "Checkpoint/metrics output directory")->required();
  train->add_option("--seed", seed, "Override the training seed");

  auto* eval = app.add_subcommand("eval", "Run the evaluation grid for a checkpoint");
  eval->add_option("--ckpt", ckpt_path, "Policy checkpoint")->required();
  eval->add_option("--config", config_path, "JSON eval config");
  eval->add_option("--data", data_dir, "Dataset directory (for the asset partition)");
  eval->add_option("--out", out_dir, "Report output directory")->required();
  eval->add_option("--jobs", jobs, "Parallel episode workers");
  eval->add_option("--seed", seed, "Override the eval seed");

  std::string task_str = "T1", perturb_str = "gdg_tokens", level_str = "L1",
              difficulty_str = "default";
  uint64_t preview_seed = 1;
  auto* preview = app.add_subcommand("perturb-preview", "Show a prompt before/after a perturbation");
  preview->add_option("--task", task_str, "Task id (T1, T2, T3, T4, T7, T14)");
  preview->add_option("--perturbation", perturb_str, "Perturbation kind");
  preview->add_option("--seed", preview_seed, "Instance + perturbation seed");
  preview->add_option("--level", level_str, "Generalisation level");
  preview->add_option("--difficulty", difficulty_str, "Difficulty level");

  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Merge eval reports into tables and charts");
  report->add_option("inputs", report_inputs, "report.json files")->required();
  report->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, jobs, seed);
    if (train->parsed()) return cmd_train(config_path, data_dir, out_dir, seed);
    if (eval->parsed()) return cmd_eval(ckpt_path, config_path, data_dir, out_dir, jobs, seed);
    if (preview->parsed())
      return cmd_perturb_preview(task_str, perturb_str, preview_seed, level_str, difficulty_str);
    if (report->parsed()) return cmd_report(report_inputs, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
