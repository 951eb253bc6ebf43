#include <doctest.h>

#include <cmath>

#include "ttb/tensor.hpp"

using namespace ttb;
using namespace ttb::nn;

namespace {

// Central finite differences on a scalar-valued function of one parameter.
double fd_grad(Tensor& param, size_t index, const std::function<Tensor()>& forward,
               double h = 1e-6) {
  double original = param.values()[index];
  param.values()[index] = original + h;
  double up = forward().item();
  param.values()[index] = original - h;
  double down = forward().item();
  param.values()[index] = original;
  return (up - down) / (2 * h);
}

void check_grads(Tensor& param, const std::function<Tensor()>& forward, double tol = 1e-6) {
  auto& grads = param.grads();
  std::fill(grads.begin(), grads.end(), 0.0);
  Tensor loss = forward();
  backward(loss);
  for (size_t i = 0; i < param.size(); ++i) {
    double analytic = param.grads()[i];
    double numeric = fd_grad(param, i, forward);
    CHECK(std::abs(analytic - numeric) <=
          tol * std::max({1.0, std::abs(analytic), std::abs(numeric)}));
  }
}

Tensor random_param(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(rows) * cols);
  for (auto& x : v) x = rng.uniform_range(-1.0, 1.0);
  return Tensor::parameter(rows, cols, std::move(v));
}

}  // namespace

TEST_CASE("matmul against a hand-computed product") {
  Tensor a = Tensor::from_values(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_values(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c.at(0, 0) == 58);
  CHECK(c.at(0, 1) == 64);
  CHECK(c.at(1, 0) == 139);
  CHECK(c.at(1, 1) == 154);
}

TEST_CASE("shape mismatches name both shapes") {
  Tensor a = Tensor::zeros(2, 3), b = Tensor::zeros(2, 3);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(add(a, Tensor::zeros(3, 2)), doctest::Contains("shape mismatch"),
                       std::invalid_argument);
}

TEST_CASE("d(x*x)/dx at 3 is 6") {
  Tensor x = Tensor::parameter(1, 1, {3.0});
  Tensor loss = mul(x, x);
  backward(loss);
  CHECK(x.grads()[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient of a constant graph is zero") {
  Tensor x = Tensor::parameter(1, 1, {3.0});
  Tensor c = Tensor::constant(1, 1, 5.0);
  backward(c);  // no-op: nothing requires grad
  CHECK(x.grads()[0] == 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor x = random_param(2, 2, 1);
  CHECK_THROWS_WITH_AS(backward(add(x, x)), doctest::Contains("scalar"), std::invalid_argument);
}

TEST_CASE("softmax of uniform logits is uniform") {
  Tensor x = Tensor::constant(1, 5, 0.3);
  Tensor s = softmax_rows(x);
  for (int j = 0; j < 5; ++j) CHECK(s.at(0, j) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("layernorm rows have mean 0 and variance 1 pre-affine") {
  Tensor x = random_param(4, 16, 9);
  Tensor gamma = Tensor::constant(1, 16, 1.0);
  Tensor beta = Tensor::constant(1, 16, 0.0);
  Tensor y = layernorm_rows(x, gamma, beta);
  for (int i = 0; i < 4; ++i) {
    double mean = 0.0, var = 0.0;
    for (int j = 0; j < 16; ++j) mean += y.at(i, j);
    mean /= 16;
    for (int j = 0; j < 16; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
    var /= 16;
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(var - 1.0) <= 1e-9);
  }
}

TEST_CASE("dropout trains with scaling and is disabled at p=0") {
  Rng rng(5);
  Tensor x = Tensor::constant(10, 10, 1.0);
  Tensor y = dropout(x, 0.5, rng);
  int zeros = 0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));
    zeros += v == 0.0 ? 1 : 0;
  }
  CHECK(zeros > 10);
  CHECK(zeros < 90);
  Rng rng2(5);
  CHECK(dropout(x, 0.0, rng2).values() == x.values());
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x = random_param(2, 2, 3);
  NoGradGuard guard;
  Tensor y = mul(x, x);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("gradcheck: elementwise and reduction ops") {
  Tensor x = random_param(3, 4, 11);
  check_grads(x, [&]() { return mean_all(gelu(x)); });
  check_grads(x, [&]() { return mean_all(softmax_rows(x)); });
  check_grads(x, [&]() { return mean_all(mul(x, x)); });
  check_grads(x, [&]() { return mean_all(scale(transpose(x), 1.7)); });
  check_grads(x, [&]() { return mean_all(mean_rows(x)); });
}

TEST_CASE("gradcheck: matmul, slicing, concatenation, gathering") {
  Tensor a = random_param(3, 4, 21);
  Tensor b = random_param(4, 2, 22);
  check_grads(a, [&]() { return mean_all(matmul(a, b)); });
  check_grads(b, [&]() { return mean_all(matmul(a, b)); });
  check_grads(a, [&]() { return mean_all(slice_rows(a, 1, 3)); });
  check_grads(a, [&]() { return mean_all(slice_cols(a, 0, 2)); });
  check_grads(a, [&]() { return mean_all(concat_rows({a, scale(a, 2.0)})); });
  check_grads(a, [&]() { return mean_all(concat_cols({a, a})); });
  check_grads(a, [&]() { return mean_all(gather_rows(a, {2, 0, 2})); });
}

TEST_CASE("gradcheck: layernorm and cross entropy") {
  Tensor x = random_param(3, 8, 31);
  Tensor gamma = random_param(1, 8, 32);
  Tensor beta = random_param(1, 8, 33);
  check_grads(x, [&]() { return mean_all(layernorm_rows(x, gamma, beta)); });
  check_grads(gamma, [&]() { return mean_all(layernorm_rows(x, gamma, beta)); });
  check_grads(beta, [&]() { return mean_all(layernorm_rows(x, gamma, beta)); });

  std::vector<int> targets{1, 5, 0};
  check_grads(x, [&]() { return cross_entropy_mean(x, targets); });
  std::vector<int> repeats{3, 1, 2};
  check_grads(x, [&]() { return cross_entropy_mean(x, targets, repeats); });
}

TEST_CASE("gradcheck: embedding gather accumulates over repeated ids") {
  Tensor table = random_param(6, 3, 41);
  check_grads(table, [&]() { return mean_all(embedding_rows(table, {0, 2, 0, 5})); });
}

TEST_CASE("cross entropy validates targets") {
  Tensor x = random_param(2, 4, 51);
  CHECK_THROWS_WITH_AS(cross_entropy_mean(x, {0, 9}), doctest::Contains("bin index"),
                       std::out_of_range);
  CHECK_THROWS(cross_entropy_mean(x, {0}));
}
