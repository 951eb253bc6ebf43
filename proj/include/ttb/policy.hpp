#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ttb/dataset.hpp"
#include "ttb/nn.hpp"

namespace ttb {

enum class VisualMode { ObjectCentric, Patches };
enum class Conditioning { CrossAttention, Concatenate };

const char* visual_mode_name(VisualMode m);
VisualMode visual_mode_from_name(const std::string& s);
const char* conditioning_name(Conditioning c);
Conditioning conditioning_from_name(const std::string& s);

struct PolicyConfig {
  VisualMode visual = VisualMode::ObjectCentric;
  Conditioning conditioning = Conditioning::CrossAttention;
  int d_model = 64;
  int heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ffn_mult = 4;
  double dropout = 0.1;
  int patch = 8;
  int max_prompt = 96;
  int max_seq = 512;
  bool train_shuffle = false;
  int vocab_size = 0;
  int obs_h = kObsHeight;
  int obs_w = kObsWidth;

  void validate() const;
  int patches_per_image() const { return (obs_h / patch) * (obs_w / patch); }
  bool operator==(const PolicyConfig&) const = default;
};

// Object token featurization: raw bbox, centre/half-extent, a fixed
// sinusoidal expansion of the centre (8 octaves; finer than the 100-bin y
// grid) so bin-level positions are linearly decodable, and the two one-hots.
constexpr int kPositionOctaves = 8;
constexpr int kObjectFeatureDim = 4 + 4 + 4 * kPositionOctaves + kShapeCount + kTextureCount;

// The behaviour-cloned action policy. Four variants share one implementation:
// observations enter as object tokens or image patches, and the prompt
// conditions the decoder through cross-attention or by concatenation.
class Policy {
 public:
  Policy(PolicyConfig cfg, uint64_t init_seed);

  const PolicyConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Prompt memory [units, d]; empty prompts give a 0-row memory.
  nn::Tensor encode_prompt(const TokenizedPrompt& tp, const std::vector<ReferentFeature>& slots,
                           const nn::ForwardCtx& ctx) const;

  nn::Tensor encode_object_obs(const ObjectCentricObs& obs) const;
  nn::Tensor encode_patch_obs(const Image& image) const;

  std::array<nn::Tensor, 14> trajectory_logits(const PreppedTrajectory& pt,
                                               const nn::ForwardCtx& ctx) const;

  // Eq-style objective: mean over steps and over the 14 coordinates of the
  // negative log-likelihood of the oracle bins. step_repeats duplicates a
  // step's supervision record without changing its history.
  nn::Tensor trajectory_loss(const PreppedTrajectory& pt, const nn::ForwardCtx& ctx,
                             const std::vector<int>& step_repeats = {}) const;

  void save(const std::filesystem::path& path) const;
  static Policy load(const std::filesystem::path& path);

 private:
  friend class PolicyRollout;

  nn::Tensor object_features(const std::vector<ObjectToken>& tokens) const;
  nn::Tensor project_objects(const nn::Tensor& features) const;
  nn::Tensor action_token(const DiscreteAction& bins) const;
  nn::Tensor referent_embedding(const ReferentFeature& f) const;
  nn::Tensor decode(const nn::Tensor& memory, const std::vector<nn::Tensor>& rows,
                    const nn::ForwardCtx& ctx, int* prompt_offset) const;

  PolicyConfig cfg_;
  nn::ParamStore params_;

  nn::Tensor tok_emb_, prompt_pos_, dec_pos_;
  nn::Linear obj_proj1_, obj_proj2_, patch_proj_;
  nn::Tensor patch_pos_;
  std::vector<nn::EncoderLayer> encoder_;
  nn::LayerNorm enc_ln_;
  std::vector<nn::DecoderLayer> decoder_;
  nn::LayerNorm dec_ln_;
  std::array<nn::Tensor, 14> act_emb_;
  std::array<nn::Linear, 14> heads_;
};

// Incremental greedy decoding for one episode. Observations are appended
// step by step; act() returns the per-coordinate argmax bins.
class PolicyRollout {
 public:
  PolicyRollout(const Policy& policy, const TokenizedPrompt& tp,
                const std::vector<ReferentFeature>& slots);

  DiscreteAction act(const ObjectCentricObs& obs);
  DiscreteAction act(const Image& image);

 private:
  DiscreteAction act_encoded(nn::Tensor obs_rows);

  const Policy& policy_;
  nn::Tensor memory_;
  std::vector<nn::Tensor> rows_;
  int last_readout_ = -1;
};

}  // namespace ttb
