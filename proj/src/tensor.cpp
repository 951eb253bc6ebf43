#include "ttb/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace ttb::nn {

namespace {

thread_local bool g_grad_enabled = true;

std::shared_ptr<TensorNode> make_node(int rows, int cols) {
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), 0.0);
  return n;
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch [" + std::to_string(a.rows()) +
                              "," + std::to_string(a.cols()) + "] vs [" + std::to_string(b.rows()) +
                              "," + std::to_string(b.cols()) + "]");
}

// Wires parents + pullback when recording is on and any parent needs grads.
Tensor finish(std::shared_ptr<TensorNode> out, std::vector<Tensor> parents,
              std::function<void()> backprop) {
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  if (g_grad_enabled && needs_grad) {
    out->requires_grad = true;
    for (auto& p : parents) out->parents.push_back(p.node());
    out->backprop = std::move(backprop);
  }
  return Tensor(std::move(out));
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous; }

Tensor Tensor::zeros(int rows, int cols) { return Tensor(make_node(rows, cols)); }

Tensor Tensor::constant(int rows, int cols, double value) {
  auto n = make_node(rows, cols);
  std::fill(n->value.begin(), n->value.end(), value);
  return Tensor(std::move(n));
}

Tensor Tensor::from_values(int rows, int cols, std::vector<double> values) {
  if (values.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
    throw std::invalid_argument("from_values: data size does not match shape");
  auto n = make_node(rows, cols);
  n->value = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(int rows, int cols, std::vector<double> values) {
  Tensor t = from_values(rows, cols, std::move(values));
  t.node()->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw std::invalid_argument("item: tensor is not scalar, shape [" + std::to_string(rows()) +
                                "," + std::to_string(cols()) + "]");
  return node_->value[0];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const int m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node(m, n);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* ov = out->value.data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      if (s == 0.0) continue;
      const double* brow = bv + p * n;
      double* orow = ov + i * n;
      for (int j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  auto an = a.node(), bn = b.node();
  auto on = out.get();
  return finish(out, {a, b}, [an, bn, on]() {
    const int m = an->rows, k = an->cols, n = bn->cols;
    const double* g = on->grad.data();
    if (an->requires_grad) {
      an->ensure_grad();
      // dA = dC * B^T
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = g + i * n;
          const double* brow = bn->value.data() + p * n;
          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
          an->grad[static_cast<size_t>(i) * k + p] += acc;
        }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      // dB = A^T * dC
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < m; ++i) {
          const double s = an->value[static_cast<size_t>(i) * k + p];
          if (s == 0.0) continue;
          const double* grow = g + i * n;
          double* brow = bn->grad.data() + p * n;
          for (int j = 0; j < n; ++j) brow[j] += s * grow[j];
        }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_defined(a, "add");
  check_defined(b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] + b.values()[i];
  auto an = a.node(), bn = b.node();
  auto on = out.get();
  return finish(out, {a, b}, [an, bn, on]() {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] += on->grad[i];
    }
  });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  check_defined(x, "add_rowvec");
  check_defined(b, "add_rowvec");
  if (b.rows() != 1 || b.cols() != x.cols()) shape_error("add_rowvec", x, b);
  auto out = make_node(x.rows(), x.cols());
  const int n = x.cols();
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < n; ++j)
      out->at(i, j) = x.at(i, j) + b.at(0, j);
  auto xn = x.node(), bn = b.node();
  auto on = out.get();
  return finish(out, {x, b}, [xn, bn, on]() {
    const int n = on->cols;
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < on->rows; ++i)
        for (int j = 0; j < n; ++j) bn->grad[static_cast<size_t>(j)] += on->grad[static_cast<size_t>(i) * n + j];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_defined(a, "mul");
  check_defined(b, "mul");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] * b.values()[i];
  auto an = a.node(), bn = b.node();
  auto on = out.get();
  return finish(out, {a, b}, [an, bn, on]() {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] += on->grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  check_defined(a, "scale");
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] * s;
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on, s]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i] * s;
  });
}

Tensor transpose(const Tensor& a) {
  check_defined(a, "transpose");
  auto out = make_node(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out->at(j, i) = a.at(i, j);
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < on->rows; ++i)
      for (int j = 0; j < on->cols; ++j)
        an->grad[static_cast<size_t>(j) * an->cols + i] += on->grad[static_cast<size_t>(i) * on->cols + j];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  int cols = parts.front().cols(), rows = 0;
  for (const auto& p : parts) {
    check_defined(p, "concat_rows");
    if (p.cols() != cols) shape_error("concat_rows", parts.front(), p);
    rows += p.rows();
  }
  auto out = make_node(rows, cols);
  size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(), out->value.begin() + offset);
    offset += p.size();
  }
  auto on = out.get();
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return finish(out, parts, [nodes, on]() {
    size_t offset = 0;
    for (auto& n : nodes) {
      if (n->requires_grad) {
        n->ensure_grad();
        for (size_t i = 0; i < n->value.size(); ++i) n->grad[i] += on->grad[offset + i];
      }
      offset += n->value.size();
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  int rows = parts.front().rows(), cols = 0;
  for (const auto& p : parts) {
    check_defined(p, "concat_cols");
    if (p.rows() != rows) shape_error("concat_cols", parts.front(), p);
    cols += p.cols();
  }
  auto out = make_node(rows, cols);
  int col0 = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < p.cols(); ++j) out->at(i, col0 + j) = p.at(i, j);
    col0 += p.cols();
  }
  auto on = out.get();
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return finish(out, parts, [nodes, on]() {
    int col0 = 0;
    for (auto& n : nodes) {
      if (n->requires_grad) {
        n->ensure_grad();
        for (int i = 0; i < n->rows; ++i)
          for (int j = 0; j < n->cols; ++j)
            n->grad[static_cast<size_t>(i) * n->cols + j] +=
                on->grad[static_cast<size_t>(i) * on->cols + col0 + j];
      }
      col0 += n->cols;
    }
  });
}

Tensor slice_rows(const Tensor& a, int row0, int row1) {
  check_defined(a, "slice_rows");
  if (row0 < 0 || row1 > a.rows() || row0 > row1)
    throw std::out_of_range("slice_rows: bad range [" + std::to_string(row0) + "," +
                            std::to_string(row1) + ") for " + std::to_string(a.rows()) + " rows");
  auto out = make_node(row1 - row0, a.cols());
  std::copy(a.values().begin() + static_cast<size_t>(row0) * a.cols(),
            a.values().begin() + static_cast<size_t>(row1) * a.cols(), out->value.begin());
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on, row0]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    size_t base = static_cast<size_t>(row0) * an->cols;
    for (size_t i = 0; i < on->grad.size(); ++i) an->grad[base + i] += on->grad[i];
  });
}

Tensor slice_cols(const Tensor& a, int col0, int col1) {
  check_defined(a, "slice_cols");
  if (col0 < 0 || col1 > a.cols() || col0 > col1)
    throw std::out_of_range("slice_cols: bad range [" + std::to_string(col0) + "," +
                            std::to_string(col1) + ") for " + std::to_string(a.cols()) + " cols");
  auto out = make_node(a.rows(), col1 - col0);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = col0; j < col1; ++j) out->at(i, j - col0) = a.at(i, j);
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on, col0]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < on->rows; ++i)
      for (int j = 0; j < on->cols; ++j)
        an->grad[static_cast<size_t>(i) * an->cols + col0 + j] +=
            on->grad[static_cast<size_t>(i) * on->cols + j];
  });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& indices) {
  check_defined(a, "gather_rows");
  for (int idx : indices)
    if (idx < 0 || idx >= a.rows())
      throw std::out_of_range("gather_rows: index " + std::to_string(idx) + " out of " +
                              std::to_string(a.rows()) + " rows");
  auto out = make_node(static_cast<int>(indices.size()), a.cols());
  for (size_t i = 0; i < indices.size(); ++i)
    std::copy(a.values().begin() + static_cast<size_t>(indices[i]) * a.cols(),
              a.values().begin() + static_cast<size_t>(indices[i] + 1) * a.cols(),
              out->value.begin() + i * static_cast<size_t>(a.cols()));
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on, indices]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < indices.size(); ++i)
      for (int j = 0; j < on->cols; ++j)
        an->grad[static_cast<size_t>(indices[i]) * an->cols + j] +=
            on->grad[i * static_cast<size_t>(on->cols) + j];
  });
}

Tensor mean_rows(const Tensor& a) {
  check_defined(a, "mean_rows");
  if (a.rows() == 0) throw std::invalid_argument("mean_rows: empty tensor");
  auto out = make_node(1, a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out->value[static_cast<size_t>(j)] += a.at(i, j);
  for (auto& v : out->value) v /= a.rows();
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    double inv = 1.0 / an->rows;
    for (int i = 0; i < an->rows; ++i)
      for (int j = 0; j < an->cols; ++j)
        an->grad[static_cast<size_t>(i) * an->cols + j] += on->grad[static_cast<size_t>(j)] * inv;
  });
}

Tensor softmax_rows(const Tensor& a) {
  check_defined(a, "softmax_rows");
  auto out = make_node(a.rows(), a.cols());
  const int n = a.cols();
  for (int i = 0; i < a.rows(); ++i) {
    double mx = -1e300;
    for (int j = 0; j < n; ++j) mx = std::max(mx, a.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(a.at(i, j) - mx);
      out->at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out->at(i, j) /= sum;
  }
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const int n = on->cols;
    for (int i = 0; i < on->rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j)
        dot += on->grad[static_cast<size_t>(i) * n + j] * on->value[static_cast<size_t>(i) * n + j];
      for (int j = 0; j < n; ++j) {
        double y = on->value[static_cast<size_t>(i) * n + j];
        an->grad[static_cast<size_t>(i) * n + j] +=
            y * (on->grad[static_cast<size_t>(i) * n + j] - dot);
      }
    }
  });
}

Tensor layernorm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  check_defined(x, "layernorm");
  if (gamma.rows() != 1 || gamma.cols() != x.cols()) shape_error("layernorm gamma", x, gamma);
  if (beta.rows() != 1 || beta.cols() != x.cols()) shape_error("layernorm beta", x, beta);
  const int n = x.cols();
  auto out = make_node(x.rows(), n);
  // Cache per-row mean and inverse stddev for the pullback.
  auto stats = std::make_shared<std::vector<double>>(static_cast<size_t>(x.rows()) * 2);
  for (int i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x.at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    double inv = 1.0 / std::sqrt(var + eps);
    (*stats)[static_cast<size_t>(i) * 2] = mean;
    (*stats)[static_cast<size_t>(i) * 2 + 1] = inv;
    for (int j = 0; j < n; ++j)
      out->at(i, j) = (x.at(i, j) - mean) * inv * gamma.at(0, j) + beta.at(0, j);
  }
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  auto on = out.get();
  return finish(out, {x, gamma, beta}, [xn, gn, bn, on, stats]() {
    const int n = on->cols;
    for (int i = 0; i < on->rows; ++i) {
      double mean = (*stats)[static_cast<size_t>(i) * 2];
      double inv = (*stats)[static_cast<size_t>(i) * 2 + 1];
      // xhat and gradient terms
      double sum_gy = 0.0, sum_gyx = 0.0;
      for (int j = 0; j < n; ++j) {
        double xhat = (xn->value[static_cast<size_t>(i) * n + j] - mean) * inv;
        double gy = on->grad[static_cast<size_t>(i) * n + j] * gn->value[static_cast<size_t>(j)];
        sum_gy += gy;
        sum_gyx += gy * xhat;
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (int j = 0; j < n; ++j) {
          double xhat = (xn->value[static_cast<size_t>(i) * n + j] - mean) * inv;
          double gy = on->grad[static_cast<size_t>(i) * n + j] * gn->value[static_cast<size_t>(j)];
          xn->grad[static_cast<size_t>(i) * n + j] +=
              inv * (gy - sum_gy / n - xhat * sum_gyx / n);
        }
      }
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (int j = 0; j < n; ++j) {
          double xhat = (xn->value[static_cast<size_t>(i) * n + j] - mean) * inv;
          gn->grad[static_cast<size_t>(j)] += on->grad[static_cast<size_t>(i) * n + j] * xhat;
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int j = 0; j < n; ++j)
          bn->grad[static_cast<size_t>(j)] += on->grad[static_cast<size_t>(i) * n + j];
      }
    }
  });
}

Tensor gelu(const Tensor& a) {
  check_defined(a, "gelu");
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) {
    double x = a.values()[i];
    out->value[i] = 0.5 * x * (1.0 + std::erf(x / M_SQRT2));
  }
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const double inv_sqrt_2pi = 0.3989422804014327;
    for (size_t i = 0; i < on->grad.size(); ++i) {
      double x = an->value[i];
      double phi = 0.5 * (1.0 + std::erf(x / M_SQRT2));
      double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      an->grad[i] += on->grad[i] * (phi + x * pdf);
    }
  });
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  return gather_rows(table, ids);
}

Tensor dropout(const Tensor& a, double p, Rng& rng) {
  check_defined(a, "dropout");
  if (p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  auto mask = std::make_shared<std::vector<double>>(a.size());
  const double keep = 1.0 - p;
  for (auto& m : *mask) m = rng.uniform_real() < p ? 0.0 : 1.0 / keep;
  auto out = make_node(a.rows(), a.cols());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] * (*mask)[i];
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on, mask]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i] * (*mask)[i];
  });
}

Tensor mean_all(const Tensor& a) {
  check_defined(a, "mean_all");
  if (a.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  auto out = make_node(1, 1);
  double sum = 0.0;
  for (double v : a.values()) sum += v;
  out->value[0] = sum / static_cast<double>(a.size());
  auto an = a.node();
  auto on = out.get();
  return finish(out, {a}, [an, on]() {
    if (!an->requires_grad) return;
    an->ensure_grad();
    double g = on->grad[0] / static_cast<double>(an->value.size());
    for (auto& v : an->grad) v += g;
  });
}

Tensor cross_entropy_mean(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<int>& repeats) {
  check_defined(logits, "cross_entropy");
  if (static_cast<int>(targets.size()) != logits.rows())
    throw std::invalid_argument("cross_entropy: target count " + std::to_string(targets.size()) +
                                " does not match " + std::to_string(logits.rows()) + " rows");
  if (!repeats.empty() && repeats.size() != targets.size())
    throw std::invalid_argument("cross_entropy: repeats size mismatch");
  const int n = logits.cols();
  for (int t : targets)
    if (t < 0 || t >= n)
      throw std::out_of_range("cross_entropy: bin index " + std::to_string(t) + " out of " +
                              std::to_string(n));

  double total_weight = 0.0;
  auto probs = std::make_shared<std::vector<double>>(logits.size());
  auto weights = std::make_shared<std::vector<double>>(targets.size());
  double loss = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    double w = repeats.empty() ? 1.0 : static_cast<double>(repeats[static_cast<size_t>(i)]);
    (*weights)[static_cast<size_t>(i)] = w;
    total_weight += w;
    double mx = -1e300;
    for (int j = 0; j < n; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(logits.at(i, j) - mx);
      (*probs)[static_cast<size_t>(i) * n + j] = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) (*probs)[static_cast<size_t>(i) * n + j] /= sum;
    double log_p = logits.at(i, targets[static_cast<size_t>(i)]) - mx - std::log(sum);
    loss += -log_p * w;
  }
  if (total_weight <= 0.0) throw std::invalid_argument("cross_entropy: zero total weight");
  auto out = make_node(1, 1);
  out->value[0] = loss / total_weight;

  auto ln = logits.node();
  auto on = out.get();
  return finish(out, {logits}, [ln, on, probs, weights, targets, total_weight]() {
    if (!ln->requires_grad) return;
    ln->ensure_grad();
    const int n = ln->cols;
    double g = on->grad[0] / total_weight;
    for (int i = 0; i < ln->rows; ++i) {
      double w = (*weights)[static_cast<size_t>(i)];
      for (int j = 0; j < n; ++j) {
        double p = (*probs)[static_cast<size_t>(i) * n + j];
        double onehot = j == targets[static_cast<size_t>(i)] ? 1.0 : 0.0;
        ln->grad[static_cast<size_t>(i) * n + j] += g * w * (p - onehot);
      }
    }
  });
}

void backward(const Tensor& loss) {
  check_defined(loss, "backward");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("backward: loss must be scalar, shape [" +
                                std::to_string(loss.rows()) + "," + std::to_string(loss.cols()) +
                                "]");
  if (!loss.requires_grad()) return;  // constant loss: every gradient is zero

  // Iterative DFS topological order over grad-requiring nodes.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.push_back({loss.node().get(), 0});
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    bool descended = false;
    while (next_child < node->parents.size()) {
      TensorNode* p = node->parents[next_child++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    node->ensure_grad();
    if (node->backprop) node->backprop();
  }
}

}  // namespace ttb::nn
