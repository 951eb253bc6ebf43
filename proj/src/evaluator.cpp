#include "ttb/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "ttb/parallel.hpp"

namespace ttb {

const char* budget_mode_name(BudgetMode m) { return m == BudgetMode::Lenient ? "lenient" : "strict"; }

BudgetMode budget_mode_from_name(const std::string& s) {
  if (s == "lenient") return BudgetMode::Lenient;
  if (s == "strict") return BudgetMode::Strict;
  throw std::runtime_error("unknown budget mode: " + s);
}

void EvalConfig::validate() const {
  if (episodes_per_cell < 1) throw std::invalid_argument("episodes_per_cell must be >= 1");
  if (tasks.empty() || levels.empty() || difficulties.empty() || perturbations.empty())
    throw std::invalid_argument("eval config has an empty grid axis");
}

std::string CellKey::label() const {
  return std::string(task_name(task)) + "|" + level_name(level) + "|" +
         difficulty_name(difficulty) + "|" + perturb_name(perturbation) + "|" +
         budget_mode_name(budget);
}

double random_chance(int t) {
  if (t < 1) throw std::invalid_argument("random_chance needs t >= 1");
  double p = 1.0;
  for (int i = 0; i < t; ++i) p *= 0.00125;
  return p;
}

PreparedPrompt prepare_prompt(const TaskInstance& instance, const TemplateLibrary& library,
                              const Vocabulary& vocab, const PerturbationSpec& spec) {
  Rng rng(Rng::derive(spec.seed, Rng::hash_label("perturb")));

  PromptVariant variant = PromptVariant::original();
  if (spec.kind == PerturbKind::Paraphrase) {
    size_t count = library.at(instance.task).paraphrase_count();
    variant = PromptVariant::paraphrase_index(static_cast<int>(rng.uniform_u64(count)));
  }
  MultimodalPrompt prompt = instance_prompt(instance, library, variant);

  switch (spec.kind) {
    case PerturbKind::GdgWords:
      prompt = gdg_words(prompt, rng);
      break;
    case PerturbKind::ReferentToText:
      prompt = referent_to_text(prompt, instance.scene_table());
      break;
    case PerturbKind::NoInstruction:
      prompt = no_instruction(prompt);
      break;
    default:
      break;
  }

  TokenizedPrompt tp = vocab.tokenize_prompt(prompt);
  switch (spec.kind) {
    case PerturbKind::GdgTokens:
      tp = gdg_tokens(tp, vocab, rng);
      break;
    case PerturbKind::MaskLanguage:
      tp = mask_modality(tp, Modality::Language);
      break;
    case PerturbKind::MaskVisual:
      tp = mask_modality(tp, Modality::Visual);
      break;
    default:
      break;
  }

  std::vector<ReferentFeature> slots = referent_features(tp, instance);
  return {std::move(tp), std::move(slots)};
}

std::optional<std::string> perturbation_incompatibility(PerturbKind kind, TaskId task,
                                                        const PolicyConfig& cfg) {
  if (kind == PerturbKind::ShuffleObjects && cfg.visual != VisualMode::ObjectCentric)
    return "shuffle undefined for patch encoding";
  if (kind == PerturbKind::ReferentToText && (task == TaskId::T2 || task == TaskId::T4))
    return "frame referent not substitutable";
  return std::nullopt;
}

EpisodeResult run_episode(const Policy& policy, const TaskInstance& instance,
                          const TemplateLibrary& library, const Vocabulary& vocab,
                          const PerturbationSpec& spec, BudgetMode mode) {
  if (auto why = perturbation_incompatibility(spec.kind, instance.task, policy.config()))
    throw std::runtime_error(*why);

  EpisodeResult result;
  result.min_actions = min_actions(instance);
  const int budget = mode == BudgetMode::Strict ? result.min_actions : kDefaultBudget;

  PreparedPrompt prepared = prepare_prompt(instance, library, vocab, spec);
  PolicyRollout rollout(policy, prepared.tp, prepared.slots);

  Rng shuffle_base(Rng::derive(spec.seed, Rng::hash_label("shuffle")));
  const auto& bins_cfg = ActionBinsConfig::standard();
  Episode episode(instance.initial, instance.goal, budget);
  int step = 0;
  while (!episode.status().terminal()) {
    DiscreteAction bins;
    if (policy.config().visual == VisualMode::ObjectCentric) {
      ObjectCentricObs obs = object_tokens(episode.state());
      if (spec.kind == PerturbKind::ShuffleObjects) {
        Rng step_rng = shuffle_base.child(static_cast<uint64_t>(step));
        obs = shuffle_objects(obs, step_rng);
      }
      bins = rollout.act(obs);
    } else {
      bins = rollout.act(render_topdown(episode.state(), policy.config().obs_h,
                                        policy.config().obs_w));
    }
    episode.step(bins_cfg.undiscretize(bins));
    ++step;
  }
  result.outcome = episode.status().outcome;
  result.steps = episode.status().steps_taken;
  return result;
}

EpisodeResult run_random_episode(const TaskInstance& instance, BudgetMode mode, uint64_t seed) {
  EpisodeResult result;
  result.min_actions = min_actions(instance);
  const int budget = mode == BudgetMode::Strict ? result.min_actions : kDefaultBudget;

  Rng rng(Rng::derive(seed, Rng::hash_label("random-policy")));
  const auto& bins_cfg = ActionBinsConfig::standard();
  Episode episode(instance.initial, instance.goal, budget);
  while (!episode.status().terminal()) {
    DiscreteAction bins;
    for (int c = 0; c < 14; ++c)
      bins.bins[static_cast<size_t>(c)] =
          rng.uniform_int(bins_cfg.coords()[static_cast<size_t>(c)].bins);
    episode.step(bins_cfg.undiscretize(bins));
  }
  result.outcome = episode.status().outcome;
  result.steps = episode.status().steps_taken;
  return result;
}

EvalReport evaluate(const Policy& policy, const EvalConfig& config, const TemplateLibrary& library,
                    const Vocabulary& vocab, const AssetPartition& partition) {
  config.validate();
  EvalReport report;
  report.seed = config.seed;
  report.episodes_per_cell = config.episodes_per_cell;
  report.policy = policy.config();

  for (TaskId task : config.tasks) {
    for (Level level : config.levels) {
      if (!task_admissible(task, level)) continue;
      for (Difficulty difficulty : config.difficulties) {
        for (PerturbKind kind : config.perturbations) {
          CellKey key{task, level, difficulty, kind, config.budget};
          CellResult cell;
          if (auto why = perturbation_incompatibility(kind, task, policy.config())) {
            cell.skipped = true;
            cell.skip_reason = *why;
            report.cells.push_back({key, cell});
            continue;
          }

          uint64_t cell_seed = Rng::derive(config.seed, Rng::hash_label(key.label()));
          std::vector<EpisodeResult> episodes(static_cast<size_t>(config.episodes_per_cell));
          parallel_for(config.episodes_per_cell, config.jobs, [&](int i) {
            uint64_t instance_seed = Rng::derive(cell_seed, 2 * static_cast<uint64_t>(i));
            uint64_t perturb_seed = Rng::derive(cell_seed, 2 * static_cast<uint64_t>(i) + 1);
            EpisodeResult& r = episodes[static_cast<size_t>(i)];
            try {
              TaskInstance instance =
                  sample_instance(task, level, difficulty, partition, instance_seed);
              r = run_episode(policy, instance, library, vocab, {kind, perturb_seed},
                              config.budget);
            } catch (const std::exception& e) {
              r.error = true;
              r.error_message = e.what();
            }
          });

          double steps_sum = 0.0, chance_sum = 0.0, min_sum = 0.0;
          for (const auto& r : episodes) {
            cell.episodes += 1;
            if (r.error) {
              cell.errors += 1;
              continue;
            }
            if (r.outcome == EpisodeStatus::Outcome::Success) cell.successes += 1;
            steps_sum += r.steps;
            chance_sum += random_chance(std::max(1, r.min_actions));
            min_sum += r.min_actions;
          }
          int ok = cell.episodes - cell.errors;
          if (ok > 0) {
            cell.mean_steps = steps_sum / ok;
            cell.mean_random_chance = chance_sum / ok;
            cell.mean_min_actions = min_sum / ok;
          }
          report.cells.push_back({key, cell});
        }
      }
    }
  }

  std::stable_sort(report.cells.begin(), report.cells.end(),
                   [](const auto& a, const auto& b) { return a.first.label() < b.first.label(); });
  return report;
}

std::string EvalReport::to_csv() const {
  std::string out =
      "task,level,difficulty,perturbation,budget_mode,episodes,successes,rate,mean_steps,"
      "random_chance,errors,skipped,skip_reason\n";
  char buf[320];
  for (const auto& [key, cell] : cells) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%s,%d,%d,%.6f,%.4f,%.8g,%d,%d,%s\n",
                  task_name(key.task), level_name(key.level), difficulty_name(key.difficulty),
                  perturb_name(key.perturbation), budget_mode_name(key.budget), cell.episodes,
                  cell.successes, cell.rate(), cell.mean_steps, cell.mean_random_chance,
                  cell.errors, cell.skipped ? 1 : 0, cell.skip_reason.c_str());
    out += buf;
  }
  return out;
}

Json EvalReport::to_json() const {
  Json cells_json = Json::array();
  for (const auto& [key, cell] : cells) {
    cells_json.push_back(Json{{"task", task_name(key.task)},
                              {"level", level_name(key.level)},
                              {"difficulty", difficulty_name(key.difficulty)},
                              {"perturbation", perturb_name(key.perturbation)},
                              {"budget_mode", budget_mode_name(key.budget)},
                              {"episodes", cell.episodes},
                              {"successes", cell.successes},
                              {"rate", cell.rate()},
                              {"mean_steps", cell.mean_steps},
                              {"mean_min_actions", cell.mean_min_actions},
                              {"random_chance", cell.mean_random_chance},
                              {"errors", cell.errors},
                              {"skipped", cell.skipped},
                              {"skip_reason", cell.skip_reason}});
  }
  return Json{{"seed", seed},
              {"episodes_per_cell", episodes_per_cell},
              {"policy", Json{{"visual", visual_mode_name(policy.visual)},
                              {"conditioning", conditioning_name(policy.conditioning)},
                              {"d_model", policy.d_model}}},
              {"cells", std::move(cells_json)}};
}

EvalReport EvalReport::from_json(const Json& j) {
  EvalReport r;
  r.seed = j.at("seed").get<uint64_t>();
  r.episodes_per_cell = j.at("episodes_per_cell").get<int>();
  r.policy.visual = visual_mode_from_name(j.at("policy").at("visual").get<std::string>());
  r.policy.conditioning =
      conditioning_from_name(j.at("policy").at("conditioning").get<std::string>());
  r.policy.d_model = j.at("policy").at("d_model").get<int>();
  r.policy.vocab_size = Vocabulary::kNumReserved;  // placeholder; not used by reports
  for (const auto& cj : j.at("cells")) {
    CellKey key;
    key.task = task_from_name(cj.at("task").get<std::string>());
    key.level = level_from_name(cj.at("level").get<std::string>());
    key.difficulty = difficulty_from_name(cj.at("difficulty").get<std::string>());
    key.perturbation = perturb_from_name(cj.at("perturbation").get<std::string>());
    key.budget = budget_mode_from_name(cj.at("budget_mode").get<std::string>());
    CellResult cell;
    cell.episodes = cj.at("episodes").get<int>();
    cell.successes = cj.at("successes").get<int>();
    cell.errors = cj.at("errors").get<int>();
    cell.mean_steps = cj.at("mean_steps").get<double>();
    cell.mean_min_actions = cj.at("mean_min_actions").get<double>();
    cell.mean_random_chance = cj.at("random_chance").get<double>();
    cell.skipped = cj.at("skipped").get<bool>();
    cell.skip_reason = cj.at("skip_reason").get<std::string>();
    r.cells.push_back({key, cell});
  }
  return r;
}

}  // namespace ttb
