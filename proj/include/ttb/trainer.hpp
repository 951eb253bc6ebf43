#pragma once

#include <filesystem>
#include <vector>

#include "ttb/policy.hpp"

namespace ttb {

struct TrainConfig {
  double max_lr = 1e-4;
  double min_lr = 1e-7;
  int warmup_steps = -1;  // -1: resolved to 5% of total steps
  int total_steps = -1;   // -1: resolved to epochs * steps-per-epoch
  double weight_decay = 0.0;
  double clip_norm = 1.0;
  int batch_size = 32;
  int epochs = 10;
  uint64_t seed = 0;

  void validate() const;
};

// Linear warmup from 0 to max_lr, then cosine annealing down to min_lr at
// total_steps. Steps beyond total clamp to min_lr.
double lr_at(int step, const TrainConfig& cfg);

// Adam with decoupled weight decay. Moment estimates keyed by parameter
// name; betas 0.9/0.999, eps 1e-8.
class AdamW {
 public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(nn::ParamStore& params, double lr, double weight_decay);

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

// Scales all gradients so the global norm is at most max_norm; returns the
// pre-clip norm.
double clip_grad_norm(nn::ParamStore& params, double max_norm);

struct MetricsRow {
  int step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = -1.0;  // < 0 when not measured at this step
};

struct TrainResult {
  std::vector<MetricsRow> log;
  double final_valid_loss = 0.0;
  int total_steps = 0;
  TrainConfig resolved;
};

// Behaviour cloning: seeded shuffling per epoch, gradient clipping, AdamW,
// per-epoch validation loss and checkpoints under out_dir.
TrainResult train(Policy& policy, const std::vector<PreppedTrajectory>& train_set,
                  const std::vector<PreppedTrajectory>& valid_set, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir);

double mean_loss(const Policy& policy, const std::vector<PreppedTrajectory>& set);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& log);

}  // namespace ttb
