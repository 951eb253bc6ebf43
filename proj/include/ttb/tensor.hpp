#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ttb/rng.hpp"

namespace ttb::nn {

// Reverse-mode autodiff over dense row-major 64-bit float matrices. Each op
// records its parents and a pullback; backward() walks the graph once in
// reverse topological order. Everything is single-threaded and deterministic.
struct TensorNode {
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backprop;

  size_t size() const { return value.size(); }
  double& at(int r, int c) { return value[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return value[static_cast<size_t>(r) * cols + c]; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor zeros(int rows, int cols);
  static Tensor constant(int rows, int cols, double value);
  static Tensor from_values(int rows, int cols, std::vector<double> values);
  // Leaf with requires_grad set; the unit optimizers update.
  static Tensor parameter(int rows, int cols, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  size_t size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }

  double item() const;
  double at(int r, int c) const { return node_->at(r, c); }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& grads() { return node_->ensure_grad(), node_->grad; }

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Autograd recording is on by default; disable for inference.
bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool previous;
};

// --- ops -----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);          // same shape
Tensor add_rowvec(const Tensor& x, const Tensor& b);   // b is [1, cols]
Tensor mul(const Tensor& a, const Tensor& b);          // elementwise
Tensor scale(const Tensor& a, double s);
Tensor transpose(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int row0, int row1);
Tensor slice_cols(const Tensor& a, int col0, int col1);
Tensor gather_rows(const Tensor& a, const std::vector<int>& indices);
Tensor mean_rows(const Tensor& a);  // [m,n] -> [1,n]
Tensor softmax_rows(const Tensor& a);
Tensor layernorm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      double eps = 1e-12);
Tensor gelu(const Tensor& a);
Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids);
Tensor dropout(const Tensor& a, double p, Rng& rng);
Tensor mean_all(const Tensor& a);

// Mean negative log-likelihood over rows, with optional per-row integer
// repeat counts (mean over the expanded multiset of rows).
Tensor cross_entropy_mean(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<int>& repeats = {});

// Seeds d(loss)=1 and accumulates gradients into every reachable parameter.
void backward(const Tensor& loss);

}  // namespace ttb::nn
