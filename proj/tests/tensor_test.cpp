// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "test_util.hpp"

namespace rocoft {
namespace {

using OpFn = std::function<Var(Tape&, const std::vector<Var>&)>;

Tensor random_tensor(Shape s, std::mt19937_64& rng) { return Tensor::randn(std::move(s), rng); }

// Scalar probe: sum of op(inputs) weighted by a fixed random tensor.
Var probe(Tape& tape, Var y, const Tensor& weights) {
  const std::size_t m = y.value().rows(), n = y.value().cols();
  Var w = tape.constant(weights.reshaped(y.shape()));
  Var prod = ops::multiply(y, w);
  if (prod.value().size() == 1) return prod;
  Var left = tape.constant(Tensor({1, m}, 1.0));
  Var right = tape.constant(Tensor({n, 1}, 1.0));
  return ops::matmul(ops::matmul(left, prod), right);
}

// Tape gradient vs central differences for every input scalar.
void check_op(const OpFn& op, std::vector<Tensor> inputs, std::uint64_t seed = 5, double tol = 1e-5) {
  Tensor weights;
  {
    Tape t;
    std::vector<Var> vs;
    for (std::size_t i = 0; i < inputs.size(); ++i) vs.push_back(t.param("p" + std::to_string(i), inputs[i]));
    std::mt19937_64 rng(seed);
    const Tensor y = op(t, vs).value();
    weights = Tensor::randn({y.size()}, rng);
  }
  Tape tape;
  std::vector<Var> vars;
  std::set<std::string> names;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    names.insert("p" + std::to_string(i));
    vars.push_back(tape.param("p" + std::to_string(i), inputs[i]));
  }
  const GradientMap g = grad(probe(tape, op(tape, vars), weights), names);

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto f = [&](std::span<const double> theta) {
      std::vector<Tensor> in = inputs;
      in[k] = Tensor(inputs[k].shape(), std::vector<double>(theta.begin(), theta.end()));
      Tape t;
      std::vector<Var> vs;
      for (std::size_t i = 0; i < in.size(); ++i) vs.push_back(t.param("p" + std::to_string(i), in[i]));
      return probe(t, op(t, vs), weights).value().item();
    };
    const auto fd = finite_difference_gradient(f, inputs[k].values(), 1e-5);
    const Tensor& tg = g.at("p" + std::to_string(k));
    for (std::size_t i = 0; i < fd.size(); ++i)
      EXPECT_LT(testing::rel_err(tg[i], fd[i]), tol) << "input " << k << " index " << i;
  }
}

TEST(Tensor, ShapeAndLiteralChecks) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.dim(0), 2u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_THROW(m.item(), ContractError);
}

TEST(Matmul, IdentityAndSelector) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(kernels::matmul(Tensor::identity(2), a), a);
  const Tensor sel = Tensor::matrix({{1, 0}});
  const Tensor col = Tensor::matrix({{7.5}, {-2}});
  EXPECT_EQ(kernels::matmul(sel, col)(0, 0), 7.5);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  const Tensor c = kernels::matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      long double s = 0;
      for (std::size_t t = 0; t < 4; ++t) s += static_cast<long double>(a(i, t)) * b(t, j);
      EXPECT_NEAR(c(i, j), static_cast<double>(s), 1e-12);
    }
  EXPECT_NEAR(max_abs_diff(kernels::matmul_nt(a, kernels::transpose(b)), c), 0.0, 1e-12);
  EXPECT_NEAR(max_abs_diff(kernels::matmul_tn(kernels::transpose(a), b), c), 0.0, 1e-12);
}

TEST(Matmul, ShapeMismatchNamesShapes) {
  Tape t;
  Var a = t.constant(Tensor({2, 3})), b = t.constant(Tensor({2, 3}));
  try {
    ops::matmul(a, b);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
  }
}

TEST(Grad, SquareAndConstant) {
  Tape t;
  Var w = t.param("w", Tensor::matrix({{3.0}}));
  auto g = grad(ops::multiply(w, w), {"w"});
  EXPECT_DOUBLE_EQ(g.at("w")[0], 6.0);

  Tape t2;
  t2.param("w", Tensor::matrix({{3.0}}));
  Var c = t2.constant(Tensor::matrix({{1.5}}));
  EXPECT_EQ(grad(ops::scale(c, 2.0), {"w"}).at("w")[0], 0.0);
}

TEST(Grad, RejectsNonScalarRootAndUnknownParam) {
  Tape t;
  Var w = t.param("w", Tensor({2, 2}, 1.0));
  EXPECT_THROW(grad(w, {"w"}), ContractError);
  Var s = ops::slice(ops::slice(w, 0, 0, 1), 1, 0, 1);
  EXPECT_THROW(grad(s, {"v"}), ContractError);
}

TEST(FiniteDifference, SquareAndConstant) {
  auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
  EXPECT_NEAR(finite_difference_gradient(sq, {3.0})[0], 6.0, 1e-9);
  auto c = [](std::span<const double>) { return 4.0; };
  for (double v : finite_difference_gradient(c, {1.0, 2.0})) EXPECT_EQ(v, 0.0);
  auto bad = [](std::span<const double> x) { return x[0] > 0 ? std::nan("") : 0.0; };
  EXPECT_THROW(finite_difference_gradient(bad, {1.0}), NumericError);
  EXPECT_THROW(finite_difference_gradient(sq, {1.0}, 0.0), RangeError);
}

TEST(Softmax, ValuesAgainstExtendedPrecision) {
  const Tensor half = ops::softmax_values(Tensor::matrix({{0, 0}}));
  EXPECT_EQ(half[0], 0.5);
  EXPECT_EQ(half[1], 0.5);
  const Tensor s = ops::softmax_values(Tensor::matrix({{1, 2, 3}}));
  long double z = 0;
  for (int i = 1; i <= 3; ++i) z += std::exp(static_cast<long double>(i));
  for (int i = 1; i <= 3; ++i) EXPECT_NEAR(s[i - 1], static_cast<double>(std::exp(static_cast<long double>(i)) / z), 1e-12);
  const Tensor shifted = ops::softmax_values(Tensor::matrix({{101, 102, 103}}));
  EXPECT_NEAR(max_abs_diff(s, shifted), 0.0, 1e-15);
}

TEST(Softmax, RowsSumToOne) {
  std::mt19937_64 rng(9);
  const Tensor s = ops::softmax_values(random_tensor({5, 7}, rng));
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_GT(s(i, j), 0.0);
      sum += s(i, j);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Layernorm, Examples) {
  Tape t;
  Var g = t.constant(Tensor({2}, 1.0)), b = t.constant(Tensor({2}, 0.0));
  const Tensor y = ops::layernorm(t.constant(Tensor::matrix({{1, -1}})), g, b, 1e-5).value();
  const double expect = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y[0], expect, 1e-12);
  EXPECT_NEAR(y[1], -expect, 1e-12);
  Var g3 = t.constant(Tensor({3}, 1.0)), b3 = t.constant(Tensor({3}, 0.0));
  for (double v : ops::layernorm(t.constant(Tensor::matrix({{4, 4, 4}})), g3, b3).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Layernorm, SliceStatistics) {
  std::mt19937_64 rng(4);
  Tape t;
  Var x = t.constant(random_tensor({4, 6}, rng));
  Var g = t.constant(Tensor({6}, 1.0)), b = t.constant(Tensor({6}, 0.0));
  const Tensor y = ops::layernorm(x, g, b).value();
  for (std::size_t i = 0; i < 4; ++i) {
    double m = 0;
    for (std::size_t j = 0; j < 6; ++j) m += y(i, j);
    EXPECT_LT(std::abs(m / 6), 1e-10);
  }
  Var beta = t.constant(random_tensor({6}, rng));
  const Tensor with = ops::layernorm(x, g, beta).value();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(with(i, j) - y(i, j), beta.value()[j], 1e-12);
}

TEST(OpGradients, Matmul) {
  std::mt19937_64 rng(1);
  check_op([](Tape&, const std::vector<Var>& v) { return ops::matmul(v[0], v[1]); },
           {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
}

TEST(OpGradients, AddMultiplyScaleBroadcast) {
  std::mt19937_64 rng(2);
  check_op([](Tape&, const std::vector<Var>& v) { return ops::scale(ops::multiply(ops::add(v[0], v[1]), v[0]), -1.5); },
           {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::add(v[0], v[1]); },
           {random_tensor({3, 4}, rng), random_tensor({4}, rng)});
}

TEST(OpGradients, TransposeConcatSlice) {
  std::mt19937_64 rng(3);
  check_op([](Tape&, const std::vector<Var>& v) { return ops::transpose(v[0]); }, {random_tensor({2, 5}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::concat({v[0], v[1]}, 0); },
           {random_tensor({2, 3}, rng), random_tensor({1, 3}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::concat({v[0], v[1]}, 1); },
           {random_tensor({2, 3}, rng), random_tensor({2, 2}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::slice(ops::slice(v[0], 0, 1, 2), 1, 2, 2); },
           {random_tensor({4, 5}, rng)});
}

TEST(OpGradients, GatherSoftmaxGelu) {
  std::mt19937_64 rng(4);
  check_op([](Tape&, const std::vector<Var>& v) { return ops::gather(v[0], {2, 0, 2, 1}); }, {random_tensor({3, 4}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::softmax(v[0]); }, {random_tensor({3, 5}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::gelu(v[0]); }, {random_tensor({3, 5}, rng)});
}

TEST(OpGradients, LayernormAndCrossEntropy) {
  std::mt19937_64 rng(5);
  check_op([](Tape&, const std::vector<Var>& v) { return ops::layernorm(v[0], v[1], v[2]); },
           {random_tensor({3, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng)});
  check_op([](Tape&, const std::vector<Var>& v) { return ops::cross_entropy(v[0], {0, 2, 1}); },
           {random_tensor({3, 4}, rng)});
}

TEST(CrossEntropy, MatchesDirectFormula) {
  Tape t;
  const Tensor logits = Tensor::matrix({{1.0, 2.0}, {0.5, -0.5}});
  const double ce = ops::cross_entropy(t.constant(logits), {1, 0}).value().item();
  const double expect = 0.5 * (std::log(std::exp(1.0) + std::exp(2.0)) - 2.0 + std::log(std::exp(0.5) + std::exp(-0.5)) - 0.5);
  EXPECT_NEAR(ce, expect, 1e-14);
  EXPECT_THROW(ops::cross_entropy(t.constant(logits), {2, 0}), RangeError);
}

TEST(Tape, ReplayIsBitIdentical) {
  const ModelConfig c = testing::micro_config(7);
  const Model m = init_model(c);
  const TokenBatch b = testing::random_batch(c, 4, 1);
  EXPECT_EQ(forward(m, b), forward(m, b));
}

}  // namespace
}  // namespace rocoft
