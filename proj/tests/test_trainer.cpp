#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ttb/trainer.hpp"

using namespace ttb;

namespace {

TrainConfig resolved_config() {
  TrainConfig cfg;
  cfg.warmup_steps = 100;
  cfg.total_steps = 1000;
  return cfg;
}

struct TrainFixture {
  TemplateLibrary lib = TemplateLibrary::load_default();
  Vocabulary vocab = Vocabulary::build(lib.vocab_corpus());
  AssetPartition part = partition_assets(0);

  std::vector<PreppedTrajectory> make_set(TaskId task, int n, uint64_t seed0) {
    std::vector<PreppedTrajectory> out;
    for (int i = 0; i < n; ++i) {
      Record rec;
      rec.instance = sample_instance(task, Level::L1, Difficulty::Default, part, seed0 + i);
      rec.actions = oracle_actions(rec.instance);
      rec.success = true;
      out.push_back(preprocess(rec, vocab, lib));
    }
    return out;
  }

  Policy small_policy(uint64_t seed, bool shuffle = false) {
    PolicyConfig cfg;
    cfg.d_model = 16;
    cfg.heads = 2;
    cfg.vocab_size = vocab.size();
    cfg.train_shuffle = shuffle;
    return Policy(cfg, seed);
  }
};

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("lr schedule endpoints and clamping") {
  TrainConfig cfg = resolved_config();
  CHECK(lr_at(0, cfg) == 0.0);
  CHECK(lr_at(100, cfg) == doctest::Approx(1e-4));
  CHECK(lr_at(1000, cfg) == doctest::Approx(1e-7));
  CHECK(lr_at(5000, cfg) == doctest::Approx(1e-7));
}

TEST_CASE("lr schedule is continuous at the warmup boundary") {
  TrainConfig cfg = resolved_config();
  double before = lr_at(99, cfg), at = lr_at(100, cfg), after = lr_at(101, cfg);
  CHECK(std::abs(at - before) < 2e-6);
  CHECK(std::abs(after - at) < 2e-6);
  CHECK(after <= at);
}

TEST_CASE("warmup is linear") {
  TrainConfig cfg = resolved_config();
  CHECK(lr_at(50, cfg) == doctest::Approx(5e-5));
  CHECK(lr_at(25, cfg) == doctest::Approx(2.5e-5));
}

TEST_CASE("adamw single step matches the reference formula") {
  nn::ParamStore store;
  store.zeros("p", 1, 1);
  nn::Tensor& p = store.at("p");
  p.values()[0] = 1.0;
  p.grads() = {0.5};

  AdamW opt;
  opt.step(store, 0.1, 0.0);
  // bias-corrected m-hat = g, v-hat = g^2 -> update = lr * g/(|g|+eps)
  double expected = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8));
  CHECK(p.values()[0] == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("decoupled weight decay shrinks weights before the adam step") {
  nn::ParamStore a_store, b_store;
  a_store.zeros("p", 1, 1);
  b_store.zeros("p", 1, 1);
  a_store.at("p").values()[0] = 2.0;
  b_store.at("p").values()[0] = 2.0;
  a_store.at("p").grads() = {0.0};
  b_store.at("p").grads() = {0.0};

  AdamW a, b;
  a.step(a_store, 0.1, 0.0);
  b.step(b_store, 0.1, 0.5);
  CHECK(a_store.at("p").values()[0] == doctest::Approx(2.0));       // zero grad, zero decay
  CHECK(b_store.at("p").values()[0] == doctest::Approx(2.0 * 0.95));  // lr*wd*p removed
}

TEST_CASE("gradient clipping caps the global norm") {
  nn::ParamStore store;
  store.zeros("p", 1, 3);
  store.at("p").grads() = {30.0, 40.0, 0.0};
  double norm = clip_grad_norm(store, 1.0);
  CHECK(norm == doctest::Approx(50.0));
  CHECK(store.grad_global_norm() <= 1.0 + 1e-9);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  TrainFixture f;
  auto train_set = f.make_set(TaskId::T1, 4, 1000);
  Policy policy = f.small_policy(1);
  auto before = policy.params().all().at("tok_emb").values();

  TrainConfig cfg;
  cfg.max_lr = 0.0;
  cfg.min_lr = 0.0;
  cfg.batch_size = 2;
  cfg.epochs = 1;
  auto dir = temp_dir("ttb_train_zero");
  train(policy, train_set, {}, cfg, dir);
  CHECK(policy.params().all().at("tok_emb").values() == before);
  std::filesystem::remove_all(dir);
}

TEST_CASE("training is deterministic and reduces the loss") {
  TrainFixture f;
  auto train_set = f.make_set(TaskId::T1, 16, 2000);
  auto valid_set = f.make_set(TaskId::T1, 4, 3000);

  TrainConfig cfg;
  cfg.max_lr = 3e-3;
  cfg.min_lr = 1e-5;
  cfg.batch_size = 8;
  cfg.epochs = 8;
  cfg.seed = 5;

  Policy p1 = f.small_policy(9);
  double initial = mean_loss(p1, valid_set);
  auto dir1 = temp_dir("ttb_train_a");
  TrainResult r1 = train(p1, train_set, valid_set, cfg, dir1);
  CHECK(r1.final_valid_loss < initial);
  CHECK(std::filesystem::exists(dir1 / "policy_final.bin"));
  CHECK(std::filesystem::exists(dir1 / "ckpt_epoch_8.bin"));
  CHECK(std::filesystem::exists(dir1 / "metrics.csv"));

  Policy p2 = f.small_policy(9);
  auto dir2 = temp_dir("ttb_train_b");
  TrainResult r2 = train(p2, train_set, valid_set, cfg, dir2);
  REQUIRE(r1.log.size() == r2.log.size());
  for (size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].train_loss == r2.log[i].train_loss);
    CHECK(r1.log[i].lr == r2.log[i].lr);
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("train_shuffle augmentation changes the metrics stream") {
  TrainFixture f;
  auto train_set = f.make_set(TaskId::T1, 8, 4000);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 5;

  Policy plain = f.small_policy(10, false);
  Policy shuffled = f.small_policy(10, true);
  auto dir1 = temp_dir("ttb_train_c"), dir2 = temp_dir("ttb_train_d");
  TrainResult r1 = train(plain, train_set, {}, cfg, dir1);
  TrainResult r2 = train(shuffled, train_set, {}, cfg, dir2);
  bool any_diff = false;
  for (size_t i = 0; i < r1.log.size(); ++i)
    any_diff = any_diff || r1.log[i].train_loss != r2.log[i].train_loss;
  CHECK(any_diff);
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("invalid train configs are rejected") {
  TrainConfig cfg;
  cfg.warmup_steps = 10;
  cfg.total_steps = 5;
  CHECK_THROWS(cfg.validate());
  TrainConfig cfg2;
  cfg2.clip_norm = 0.0;
  CHECK_THROWS(cfg2.validate());
}
