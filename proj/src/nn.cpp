#include "ttb/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ttb::nn {

Tensor ParamStore::insert(const std::string& name, Tensor t) {
  if (!params_.emplace(name, t).second)
    throw std::logic_error("duplicate parameter name: " + name);
  return t;
}

Tensor ParamStore::matrix(const std::string& name, int fan_in, int fan_out, Rng& rng) {
  double bound = std::sqrt(1.0 / fan_in);
  std::vector<double> vals(static_cast<size_t>(fan_in) * fan_out);
  for (auto& v : vals) v = rng.uniform_range(-bound, bound);
  return insert(name, Tensor::parameter(fan_in, fan_out, std::move(vals)));
}

Tensor ParamStore::embedding(const std::string& name, int rows, int cols, Rng& rng) {
  std::vector<double> vals(static_cast<size_t>(rows) * cols);
  for (auto& v : vals) v = rng.uniform_range(-0.05, 0.05);
  return insert(name, Tensor::parameter(rows, cols, std::move(vals)));
}

Tensor ParamStore::zeros(const std::string& name, int rows, int cols) {
  return insert(name, Tensor::parameter(rows, cols,
                                        std::vector<double>(static_cast<size_t>(rows) * cols, 0.0)));
}

Tensor ParamStore::ones(const std::string& name, int rows, int cols) {
  return insert(name, Tensor::parameter(rows, cols,
                                        std::vector<double>(static_cast<size_t>(rows) * cols, 1.0)));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) {
    auto& g = t.grads();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

double ParamStore::grad_global_norm() const {
  double sum = 0.0;
  for (const auto& [name, t] : params_) {
    const auto& node = *t.node();
    for (double g : node.grad) sum += g * g;
  }
  return std::sqrt(sum);
}

void ParamStore::scale_grads(double factor) {
  for (auto& [name, t] : params_) {
    auto& g = t.grads();
    for (auto& v : g) v *= factor;
  }
}

Linear Linear::create(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng) {
  Linear l;
  l.weight = store.matrix(prefix + ".weight", in, out, rng);
  l.bias = store.zeros(prefix + ".bias", 1, out);
  return l;
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& prefix, int dim) {
  LayerNorm ln;
  ln.gamma = store.ones(prefix + ".gamma", 1, dim);
  ln.beta = store.zeros(prefix + ".beta", 1, dim);
  return ln;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& prefix,
                                              int d_model, int heads, Rng& rng) {
  if (d_model % heads != 0)
    throw std::invalid_argument("d_model " + std::to_string(d_model) + " not divisible by " +
                                std::to_string(heads) + " heads");
  MultiHeadAttention a;
  a.q = Linear::create(store, prefix + ".q", d_model, d_model, rng);
  a.k = Linear::create(store, prefix + ".k", d_model, d_model, rng);
  a.v = Linear::create(store, prefix + ".v", d_model, d_model, rng);
  a.out = Linear::create(store, prefix + ".out", d_model, d_model, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& queries, const Tensor& kv, bool causal,
                                      const ForwardCtx& ctx) const {
  const int d_model = q.weight.cols();
  if (kv.rows() == 0) return Tensor::zeros(queries.rows(), d_model);

  const int dh = d_model / heads;
  Tensor Q = q(queries), K = k(kv), V = v(kv);

  // One shared additive causal mask; built without grad.
  Tensor mask;
  if (causal) {
    std::vector<double> m(static_cast<size_t>(Q.rows()) * K.rows(), 0.0);
    for (int i = 0; i < Q.rows(); ++i)
      for (int j = i + 1; j < K.rows(); ++j) m[static_cast<size_t>(i) * K.rows() + j] = -1e30;
    mask = Tensor::from_values(Q.rows(), K.rows(), std::move(m));
  }

  std::vector<Tensor> head_outputs;
  for (int h = 0; h < heads; ++h) {
    Tensor Qh = slice_cols(Q, h * dh, (h + 1) * dh);
    Tensor Kh = slice_cols(K, h * dh, (h + 1) * dh);
    Tensor Vh = slice_cols(V, h * dh, (h + 1) * dh);
    Tensor scores = scale(matmul(Qh, transpose(Kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    if (causal) scores = add(scores, mask);
    Tensor probs = softmax_rows(scores);
    head_outputs.push_back(matmul(probs, Vh));
  }
  Tensor merged = heads == 1 ? head_outputs.front() : concat_cols(head_outputs);
  return ctx.maybe_dropout(out(merged));
}

FeedForward FeedForward::create(ParamStore& store, const std::string& prefix, int d_model,
                                int hidden, Rng& rng) {
  FeedForward f;
  f.inner = Linear::create(store, prefix + ".inner", d_model, hidden, rng);
  f.outer = Linear::create(store, prefix + ".outer", hidden, d_model, rng);
  return f;
}

Tensor FeedForward::operator()(const Tensor& x, const ForwardCtx& ctx) const {
  return ctx.maybe_dropout(outer(gelu(inner(x))));
}

EncoderLayer EncoderLayer::create(ParamStore& store, const std::string& prefix, int d_model,
                                  int heads, int hidden, Rng& rng) {
  EncoderLayer e;
  e.ln1 = LayerNorm::create(store, prefix + ".ln1", d_model);
  e.ln2 = LayerNorm::create(store, prefix + ".ln2", d_model);
  e.attn = MultiHeadAttention::create(store, prefix + ".attn", d_model, heads, rng);
  e.ffn = FeedForward::create(store, prefix + ".ffn", d_model, hidden, rng);
  return e;
}

Tensor EncoderLayer::operator()(const Tensor& x, const ForwardCtx& ctx) const {
  Tensor h = ln1(x);
  Tensor y = add(x, attn(h, h, /*causal=*/false, ctx));
  return add(y, ffn(ln2(y), ctx));
}

DecoderLayer DecoderLayer::create(ParamStore& store, const std::string& prefix, int d_model,
                                  int heads, int hidden, bool with_cross, Rng& rng) {
  DecoderLayer d;
  d.ln1 = LayerNorm::create(store, prefix + ".ln1", d_model);
  d.self_attn = MultiHeadAttention::create(store, prefix + ".self", d_model, heads, rng);
  d.has_cross = with_cross;
  if (with_cross) {
    d.ln3 = LayerNorm::create(store, prefix + ".ln3", d_model);
    d.cross_attn = MultiHeadAttention::create(store, prefix + ".cross", d_model, heads, rng);
  }
  d.ln2 = LayerNorm::create(store, prefix + ".ln2", d_model);
  d.ffn = FeedForward::create(store, prefix + ".ffn", d_model, hidden, rng);
  return d;
}

Tensor DecoderLayer::operator()(const Tensor& x, const std::optional<Tensor>& memory,
                                const ForwardCtx& ctx) const {
  Tensor h = ln1(x);
  Tensor y = add(x, self_attn(h, h, /*causal=*/true, ctx));
  if (has_cross) {
    if (!memory) throw std::logic_error("cross-attention layer needs a memory sequence");
    y = add(y, cross_attn(ln3(y), *memory, /*causal=*/false, ctx));
  }
  return add(y, ffn(ln2(y), ctx));
}

}  // namespace ttb::nn
