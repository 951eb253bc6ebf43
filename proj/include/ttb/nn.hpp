#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttb/rng.hpp"
#include "ttb/tensor.hpp"

namespace ttb::nn {

// Named parameter registry. Iteration is in name order so optimizer updates
// and checkpoint layout are reproducible. Initialization is scaled-uniform:
// U(-sqrt(1/fan_in), +sqrt(1/fan_in)) for matrices, U(-0.05, 0.05) for
// embedding tables, zeros for biases, ones for layernorm gains.
class ParamStore {
 public:
  Tensor matrix(const std::string& name, int fan_in, int fan_out, Rng& rng);
  Tensor embedding(const std::string& name, int rows, int cols, Rng& rng);
  Tensor zeros(const std::string& name, int rows, int cols);
  Tensor ones(const std::string& name, int rows, int cols);

  Tensor& at(const std::string& name);
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::map<std::string, Tensor>& all() { return params_; }
  size_t count() const { return params_.size(); }

  void zero_grads();
  double grad_global_norm() const;
  void scale_grads(double factor);

 private:
  Tensor insert(const std::string& name, Tensor t);
  std::map<std::string, Tensor> params_;
};

// Per-forward-pass context: dropout is active only while training.
struct ForwardCtx {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Tensor maybe_dropout(const Tensor& x) const {
    if (!training || dropout <= 0.0) return x;
    return nn::dropout(x, dropout, *rng);
  }
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [1, out]

  static Linear create(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return add_rowvec(matmul(x, weight), bias); }
};

struct LayerNorm {
  Tensor gamma, beta;

  static LayerNorm create(ParamStore& store, const std::string& prefix, int dim);
  Tensor operator()(const Tensor& x) const { return layernorm_rows(x, gamma, beta); }
};

// Multi-head scaled dot-product attention. Self-attention passes the same
// tensor for queries and keys/values; cross-attention passes the prompt
// memory as kv. An empty kv sequence contributes exactly zero.
struct MultiHeadAttention {
  Linear q, k, v, out;
  int heads = 1;

  static MultiHeadAttention create(ParamStore& store, const std::string& prefix, int d_model,
                                   int heads, Rng& rng);
  Tensor operator()(const Tensor& queries, const Tensor& kv, bool causal,
                    const ForwardCtx& ctx) const;
};

struct FeedForward {
  Linear inner, outer;

  static FeedForward create(ParamStore& store, const std::string& prefix, int d_model, int hidden,
                            Rng& rng);
  Tensor operator()(const Tensor& x, const ForwardCtx& ctx) const;
};

// Pre-norm transformer encoder layer (self-attention + feed-forward).
struct EncoderLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  FeedForward ffn;

  static EncoderLayer create(ParamStore& store, const std::string& prefix, int d_model, int heads,
                             int hidden, Rng& rng);
  Tensor operator()(const Tensor& x, const ForwardCtx& ctx) const;
};

// Pre-norm decoder layer: causal self-attention, optional cross-attention
// into a memory sequence, feed-forward.
struct DecoderLayer {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;
  bool has_cross = false;

  static DecoderLayer create(ParamStore& store, const std::string& prefix, int d_model, int heads,
                             int hidden, bool with_cross, Rng& rng);
  Tensor operator()(const Tensor& x, const std::optional<Tensor>& memory,
                    const ForwardCtx& ctx) const;
};

}  // namespace ttb::nn
