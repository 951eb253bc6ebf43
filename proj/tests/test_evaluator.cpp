#include <doctest.h>

#include <cmath>

#include "ttb/evaluator.hpp"

using namespace ttb;

namespace {

struct EvalFixture {
  TemplateLibrary lib = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(lib.vocab_corpus());
  AssetPartition part = partition_assets(0);

  Policy tiny_policy(VisualMode v, Conditioning c, uint64_t seed = 1) {
    PolicyConfig cfg;
    cfg.visual = v;
    cfg.conditioning = c;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.enc_layers = 1;
    cfg.dec_layers = 1;
    cfg.ffn_mult = 2;
    cfg.vocab_size = vocab.size();
    return Policy(cfg, seed);
  }
};

}  // namespace

TEST_CASE("random chance follows the paper's formula") {
  CHECK(random_chance(1) == 0.00125);
  CHECK(random_chance(2) == doctest::Approx(1.5625e-6).epsilon(1e-15));
  CHECK(random_chance(3) == doctest::Approx(0.00125 * 0.00125 * 0.00125).epsilon(1e-15));
  CHECK_THROWS(random_chance(0));
}

TEST_CASE("oracle actions as a policy succeed in exactly min_actions steps") {
  EvalFixture f;
  for (TaskId task : training_tasks()) {
    auto inst = sample_instance(task, Level::L1, Difficulty::Default, f.part, 400);
    auto actions = oracle_actions(inst);
    Episode ep(inst.initial, inst.goal, static_cast<int>(actions.size()));  // strict budget
    for (const auto& a : actions) ep.step(a);
    CHECK(ep.status().outcome == EpisodeStatus::Outcome::Success);
    CHECK(ep.status().steps_taken == min_actions(inst));
  }
}

TEST_CASE("random episodes respect both budget modes") {
  EvalFixture f;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    auto inst = sample_instance(TaskId::T1, Level::L1, Difficulty::Default, f.part, 500 + seed);
    EpisodeResult lenient = run_random_episode(inst, BudgetMode::Lenient, seed);
    CHECK(lenient.steps <= kDefaultBudget);
    EpisodeResult strict = run_random_episode(inst, BudgetMode::Strict, seed);
    CHECK(strict.steps <= strict.min_actions);
  }
}

TEST_CASE("run_episode rejects incompatible perturbations") {
  EvalFixture f;
  Policy patches = f.tiny_policy(VisualMode::Patches, Conditioning::CrossAttention);
  auto inst = sample_instance(TaskId::T1, Level::L1, Difficulty::Default, f.part, 9);
  CHECK_THROWS_WITH_AS(run_episode(patches, inst, f.lib, f.vocab,
                                   {PerturbKind::ShuffleObjects, 1}, BudgetMode::Lenient),
                       doctest::Contains("shuffle undefined"), std::runtime_error);

  Policy objects = f.tiny_policy(VisualMode::ObjectCentric, Conditioning::CrossAttention);
  auto t4 = sample_instance(TaskId::T4, Level::L1, Difficulty::Default, f.part, 9);
  CHECK_THROWS_WITH_AS(run_episode(objects, t4, f.lib, f.vocab,
                                   {PerturbKind::ReferentToText, 1}, BudgetMode::Lenient),
                       doctest::Contains("frame referent"), std::runtime_error);
}

TEST_CASE("prepared prompts honor each perturbation contract") {
  EvalFixture f;
  auto inst = sample_instance(TaskId::T1, Level::L1, Difficulty::Default, f.part, 21);
  MultimodalPrompt original = instance_prompt(inst, f.lib, PromptVariant::original());
  TokenizedPrompt base = f.vocab.tokenize_prompt(original);

  auto none = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::None, 3});
  CHECK(none.tp == base);

  auto gdg_t = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::GdgTokens, 3});
  CHECK(gdg_t.tp.size() == base.size());
  CHECK(gdg_t.tp.slot_count() == base.slot_count());

  auto gdg_w = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::GdgWords, 3});
  CHECK(gdg_w.tp.slot_count() == base.slot_count());

  auto masked = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::MaskLanguage, 3});
  for (const auto& u : masked.tp.units)
    if (u.is_token()) CHECK(u.token_id() == Vocabulary::kMaskId);

  auto vis = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::MaskVisual, 3});
  CHECK(vis.tp.slot_count() == 0);
  CHECK(vis.slots.empty());
  CHECK(vis.tp.size() == base.size());

  auto no_instr = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::NoInstruction, 3});
  CHECK(no_instr.tp.empty());

  auto as_text = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::ReferentToText, 3});
  CHECK(as_text.tp.slot_count() == 0);
  CHECK(as_text.tp.token_count() > base.token_count());

  auto para = prepare_prompt(inst, f.lib, f.vocab, {PerturbKind::Paraphrase, 3});
  CHECK(para.tp.slot_count() == base.slot_count());
}

TEST_CASE("grid arithmetic and determinism") {
  EvalFixture f;
  Policy policy = f.tiny_policy(VisualMode::ObjectCentric, Conditioning::CrossAttention);
  EvalConfig cfg;
  cfg.episodes_per_cell = 10;
  cfg.tasks = {TaskId::T1, TaskId::T3};
  cfg.levels = {Level::L1, Level::L2};
  cfg.difficulties = {Difficulty::Default};
  cfg.perturbations = {PerturbKind::None};
  cfg.seed = 99;

  EvalReport a = evaluate(policy, cfg, f.lib, f.vocab, f.part);
  CHECK(a.cells.size() == 4);
  int total = 0;
  for (const auto& [key, cell] : a.cells) {
    total += cell.episodes;
    CHECK(cell.errors == 0);
    CHECK(cell.successes <= cell.episodes);
  }
  CHECK(total == 40);

  EvalReport b = evaluate(policy, cfg, f.lib, f.vocab, f.part);
  CHECK(a.to_csv() == b.to_csv());

  cfg.jobs = 4;
  EvalReport c = evaluate(policy, cfg, f.lib, f.vocab, f.part);
  CHECK(a.to_csv() == c.to_csv());
}

TEST_CASE("evaluate marks incompatible cells as skipped, not errors") {
  EvalFixture f;
  Policy patches = f.tiny_policy(VisualMode::Patches, Conditioning::Concatenate);
  EvalConfig cfg;
  cfg.episodes_per_cell = 2;
  cfg.tasks = {TaskId::T1, TaskId::T2};
  cfg.perturbations = {PerturbKind::ShuffleObjects, PerturbKind::ReferentToText};
  cfg.seed = 5;

  EvalReport report = evaluate(patches, cfg, f.lib, f.vocab, f.part);
  REQUIRE(report.cells.size() == 4);
  int skipped = 0;
  for (const auto& [key, cell] : report.cells) {
    CHECK(cell.errors == 0);
    if (cell.skipped) {
      ++skipped;
      CHECK_FALSE(cell.skip_reason.empty());
      CHECK(cell.episodes == 0);
    }
  }
  CHECK(skipped == 3);  // shuffle x2 tasks + referent_to_text on T2
}

TEST_CASE("inadmissible task/level pairs are not part of the grid") {
  EvalFixture f;
  Policy policy = f.tiny_policy(VisualMode::ObjectCentric, Conditioning::Concatenate);
  EvalConfig cfg;
  cfg.episodes_per_cell = 2;
  cfg.tasks = {TaskId::T1, TaskId::T14};
  cfg.levels = {Level::L1, Level::L4};
  cfg.seed = 1;
  EvalReport report = evaluate(policy, cfg, f.lib, f.vocab, f.part);
  CHECK(report.cells.size() == 2);  // T1@L1 and T14@L4 only
}

TEST_CASE("report json round trip") {
  EvalFixture f;
  Policy policy = f.tiny_policy(VisualMode::ObjectCentric, Conditioning::CrossAttention);
  EvalConfig cfg;
  cfg.episodes_per_cell = 3;
  cfg.tasks = {TaskId::T3};
  cfg.seed = 7;
  EvalReport report = evaluate(policy, cfg, f.lib, f.vocab, f.part);
  EvalReport back = EvalReport::from_json(report.to_json());
  CHECK(back.to_csv() == report.to_csv());
}

TEST_CASE("episode determinism for a fixed triple") {
  EvalFixture f;
  Policy policy = f.tiny_policy(VisualMode::ObjectCentric, Conditioning::CrossAttention, 77);
  auto inst = sample_instance(TaskId::T1, Level::L1, Difficulty::Default, f.part, 123);
  EpisodeResult a =
      run_episode(policy, inst, f.lib, f.vocab, {PerturbKind::GdgTokens, 55}, BudgetMode::Lenient);
  EpisodeResult b =
      run_episode(policy, inst, f.lib, f.vocab, {PerturbKind::GdgTokens, 55}, BudgetMode::Lenient);
  CHECK(a.outcome == b.outcome);
  CHECK(a.steps == b.steps);
}
