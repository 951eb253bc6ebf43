#include <doctest.h>

#include <fstream>
#include <set>

#include "ttb/dataset.hpp"

using namespace ttb;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

GenConfig small_config() {
  GenConfig cfg;
  cfg.per_task = 12;
  cfg.seed = 11;
  cfg.holdout_fraction = 0.25;
  cfg.tasks = {TaskId::T1, TaskId::T3};
  return cfg;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("generation is deterministic byte for byte") {
  auto dir_a = temp_dir("ttb_ds_a"), dir_b = temp_dir("ttb_ds_b");
  generate_dataset(small_config(), dir_a);
  generate_dataset(small_config(), dir_b);
  CHECK(read_file(dir_a / "records.bin") == read_file(dir_b / "records.bin"));
  CHECK(read_file(dir_a / "records.jsonl") == read_file(dir_b / "records.jsonl"));
  CHECK(read_file(dir_a / "manifest.json") == read_file(dir_b / "manifest.json"));
  CHECK(read_file(dir_a / "vocab.txt") == read_file(dir_b / "vocab.txt"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("all generated records replay to success") {
  auto dir = temp_dir("ttb_ds_c");
  generate_dataset(small_config(), dir);
  Dataset ds = load_dataset(dir);
  REQUIRE(ds.records.size() == 24);
  for (const auto& rec : ds.records) {
    CHECK(rec.success);
    Episode ep(rec.instance.initial, rec.instance.goal, kDefaultBudget);
    for (const auto& a : rec.actions) ep.step(a);
    CHECK(ep.status().outcome == EpisodeStatus::Outcome::Success);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("per_task below 10 is rejected") {
  GenConfig cfg = small_config();
  cfg.per_task = 5;
  CHECK_THROWS(generate_dataset(cfg, temp_dir("ttb_ds_tiny")));
}

TEST_CASE("split fractions validate and stratify") {
  CHECK_THROWS(split_valid_indices(100, 0.0, 1, TaskId::T1));
  CHECK_THROWS(split_valid_indices(100, 0.5, 1, TaskId::T1));

  auto idx = split_valid_indices(1000, 0.075, 7, TaskId::T1);
  CHECK(idx.size() == 75);  // round(1000 * 0.075)
  auto again = split_valid_indices(1000, 0.075, 7, TaskId::T1);
  CHECK(idx == again);
  auto other_task = split_valid_indices(1000, 0.075, 7, TaskId::T2);
  CHECK(idx != other_task);
}

TEST_CASE("train and valid partition the records") {
  auto dir = temp_dir("ttb_ds_d");
  generate_dataset(small_config(), dir);
  Dataset ds = load_dataset(dir);
  auto [train, valid] = split_records(ds);
  CHECK(train.size() + valid.size() == ds.records.size());
  CHECK(valid.size() == 6);  // 2 tasks * round(12 * 0.25)
  std::set<const Record*> seen;
  for (auto* r : train) seen.insert(r);
  for (auto* r : valid) CHECK(seen.count(r) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("record JSON round trip preserves replay") {
  AssetPartition part = partition_assets(3);
  Record rec;
  rec.instance = sample_instance(TaskId::T4, Level::L1, Difficulty::Extreme, part, 5);
  rec.actions = oracle_actions(rec.instance);
  rec.success = true;

  Record back = record_from_json(record_to_json(rec));
  CHECK(snapshot_text(back.instance.initial) == snapshot_text(rec.instance.initial));
  CHECK(back.actions.size() == rec.actions.size());
  Episode ep(back.instance.initial, back.instance.goal, kDefaultBudget);
  for (const auto& a : back.actions) ep.step(a);
  CHECK(ep.status().outcome == EpisodeStatus::Outcome::Success);
}

TEST_CASE("preprocess tokenizes, discretizes, and binds referents") {
  TemplateLibrary lib = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(lib.vocab_corpus());
  AssetPartition part = partition_assets(3);

  Record rec;
  rec.instance = sample_instance(TaskId::T3, Level::L1, Difficulty::Default, part, 5);
  rec.actions = oracle_actions(rec.instance);
  rec.success = true;

  PreppedTrajectory pt = preprocess(rec, vocab, lib);
  CHECK(pt.steps.size() == rec.actions.size());
  for (const auto& step : pt.steps) {
    for (int c = 0; c < 14; ++c) {
      CHECK(step.bins.bins[static_cast<size_t>(c)] >= 0);
      CHECK(step.bins.bins[static_cast<size_t>(c)] <
            ActionBinsConfig::standard().coords()[static_cast<size_t>(c)].bins);
    }
    CHECK(step.image.height == kObsHeight);
  }
  // prompt token count matches tokenize_prompt on the rendered prompt
  MultimodalPrompt p = instance_prompt(rec.instance, lib, PromptVariant::original());
  CHECK(pt.tp.size() == vocab.tokenize_prompt(p).size());
  CHECK(pt.slots.size() == pt.tp.slot_count());
  // discretization is lossless up to half a bin width
  const auto& cfg = ActionBinsConfig::standard();
  auto vals = action_values(rec.actions[0]);
  auto back = action_values(cfg.undiscretize(pt.steps[0].bins));
  for (int c = 0; c < 14; ++c)
    CHECK(std::abs(vals[static_cast<size_t>(c)] - back[static_cast<size_t>(c)]) <=
          cfg.coords()[static_cast<size_t>(c)].width() / 2 + 1e-12);
}

TEST_CASE("preprocessed golden record is stable") {
  TemplateLibrary lib = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(lib.vocab_corpus());
  AssetPartition part = partition_assets(0);

  Record rec;
  rec.instance = sample_instance(TaskId::T1, Level::L1, Difficulty::Default, part, 1);
  rec.actions = oracle_actions(rec.instance);
  rec.success = true;
  std::string got = prepped_to_json(preprocess(rec, vocab, lib)).dump(2) + "\n";

  auto golden_path = std::filesystem::path(TTB_TEST_DATA_DIR) / "prepped_t1_seed1.json";
  if (!std::filesystem::exists(golden_path)) {
    std::filesystem::create_directories(golden_path.parent_path());
    std::ofstream f(golden_path);
    f << got;
    MESSAGE("golden file frozen on first run: ", golden_path.string());
  }
  std::ifstream f(golden_path);
  std::string want(std::istreambuf_iterator<char>(f), {});
  CHECK(got == want);
}
