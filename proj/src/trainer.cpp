#include "ttb/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ttb/perturb.hpp"

namespace ttb {

void TrainConfig::validate() const {
  if (total_steps > 0 && warmup_steps >= total_steps)
    throw std::invalid_argument("warmup_steps must be < total_steps");
  if (clip_norm <= 0.0) throw std::invalid_argument("clip_norm must be > 0");
  if (batch_size < 1 || epochs < 1) throw std::invalid_argument("bad batch_size/epochs");
}

double lr_at(int step, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("negative step");
  if (cfg.warmup_steps < 0 || cfg.total_steps <= 0)
    throw std::invalid_argument("lr_at needs resolved warmup/total steps");
  if (step <= cfg.warmup_steps)
    return cfg.warmup_steps == 0 ? cfg.max_lr
                                 : cfg.max_lr * static_cast<double>(step) / cfg.warmup_steps;
  if (step >= cfg.total_steps) return cfg.min_lr;
  double progress =
      static_cast<double>(step - cfg.warmup_steps) / (cfg.total_steps - cfg.warmup_steps);
  return cfg.min_lr + (cfg.max_lr - cfg.min_lr) * 0.5 * (1.0 + std::cos(M_PI * progress));
}

void AdamW::step(nn::ParamStore& params, double lr, double weight_decay) {
  t_ += 1;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto& [name, tensor] : params.all()) {
    auto& [m, v] = moments_[name];
    auto& vals = tensor.values();
    auto& grads = tensor.grads();
    if (m.size() != vals.size()) m.assign(vals.size(), 0.0);
    if (v.size() != vals.size()) v.assign(vals.size(), 0.0);
    for (size_t i = 0; i < vals.size(); ++i) {
      // Decoupled decay: applied directly to the weights, not the gradient.
      vals[i] -= lr * weight_decay * vals[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grads[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grads[i] * grads[i];
      vals[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

double clip_grad_norm(nn::ParamStore& params, double max_norm) {
  double norm = params.grad_global_norm();
  if (norm > max_norm && norm > 0.0) params.scale_grads(max_norm / norm);
  return norm;
}

double mean_loss(const Policy& policy, const std::vector<PreppedTrajectory>& set) {
  if (set.empty()) throw std::invalid_argument("mean_loss on empty set");
  nn::NoGradGuard guard;
  double total = 0.0;
  for (const auto& pt : set) total += policy.trajectory_loss(pt, nn::ForwardCtx{}).item();
  return total / static_cast<double>(set.size());
}

namespace {

// Optional training-time object-order augmentation (train_shuffle).
PreppedTrajectory shuffled_copy(const PreppedTrajectory& pt, Rng& rng) {
  PreppedTrajectory out = pt;
  for (auto& step : out.steps) step.obs = shuffle_objects(step.obs, rng);
  return out;
}

}  // namespace

TrainResult train(Policy& policy, const std::vector<PreppedTrajectory>& train_set,
                  const std::vector<PreppedTrajectory>& valid_set, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir) {
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  TrainConfig resolved = cfg;
  const int steps_per_epoch =
      static_cast<int>((train_set.size() + cfg.batch_size - 1) / cfg.batch_size);
  if (resolved.total_steps <= 0) resolved.total_steps = steps_per_epoch * cfg.epochs;
  if (resolved.warmup_steps < 0)
    resolved.warmup_steps = std::max(1, static_cast<int>(std::lround(0.05 * resolved.total_steps)));
  resolved.validate();

  const bool shuffle_objects_augment =
      policy.config().train_shuffle && policy.config().visual == VisualMode::ObjectCentric;

  AdamW optimizer;
  Rng shuffle_rng(Rng::derive(cfg.seed, Rng::hash_label("train-shuffle")));
  Rng dropout_rng(Rng::derive(cfg.seed, Rng::hash_label("train-dropout")));
  Rng augment_rng(Rng::derive(cfg.seed, Rng::hash_label("train-augment")));

  TrainResult result;
  result.resolved = resolved;
  int global_step = 0;

  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t b = 0; b < order.size(); b += static_cast<size_t>(cfg.batch_size)) {
      size_t b_end = std::min(order.size(), b + static_cast<size_t>(cfg.batch_size));
      global_step += 1;
      double lr = lr_at(global_step, resolved);

      policy.params().zero_grads();
      nn::ForwardCtx ctx{true, policy.config().dropout, &dropout_rng};
      nn::Tensor batch_loss;
      for (size_t k = b; k < b_end; ++k) {
        const PreppedTrajectory* pt = &train_set[order[k]];
        PreppedTrajectory scratch;
        if (shuffle_objects_augment) {
          scratch = shuffled_copy(*pt, augment_rng);
          pt = &scratch;
        }
        nn::Tensor loss = policy.trajectory_loss(*pt, ctx);
        batch_loss = k == b ? loss : nn::add(batch_loss, loss);
      }
      batch_loss = nn::scale(batch_loss, 1.0 / static_cast<double>(b_end - b));
      double loss_value = batch_loss.item();
      if (!std::isfinite(loss_value))
        throw std::runtime_error("non-finite loss at step " + std::to_string(global_step) +
                                 " (seed " + std::to_string(cfg.seed) + ", epoch " +
                                 std::to_string(epoch) + ")");
      nn::backward(batch_loss);
      clip_grad_norm(policy.params(), cfg.clip_norm);
      optimizer.step(policy.params(), lr, cfg.weight_decay);

      result.log.push_back({global_step, lr, loss_value, -1.0});
    }

    double valid_loss = valid_set.empty() ? -1.0 : mean_loss(policy, valid_set);
    if (!result.log.empty()) result.log.back().valid_loss = valid_loss;
    policy.save(out_dir / ("ckpt_epoch_" + std::to_string(epoch + 1) + ".bin"));
  }

  policy.save(out_dir / "policy_final.bin");
  result.final_valid_loss = valid_set.empty() ? -1.0 : mean_loss(policy, valid_set);
  result.total_steps = global_step;
  write_metrics_csv(out_dir / "metrics.csv", result.log);
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write metrics: " + path.string());
  f << "step,lr,train_loss,valid_loss\n";
  char buf[160];
  for (const auto& row : log) {
    if (row.valid_loss >= 0.0)
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", row.step, row.lr, row.train_loss,
                    row.valid_loss);
    else
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,\n", row.step, row.lr, row.train_loss);
    f << buf;
  }
}

}  // namespace ttb
