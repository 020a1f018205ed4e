// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "test_util.hpp"

namespace rocoft {
namespace {

double rel_frobenius(const Tensor& a, const Tensor& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

struct Fixture {
  ModelConfig c = testing::micro_config(21);
  Model m = testing::spread_model(c, 8.0);
  TokenBatch x = testing::random_batch(c, 8, 21);
};

ParamSubset structured_subset(const Model& m, bool rows) {
  ParamSubset s;
  for (const auto& t : default_targets(m.config())) {
    s.emplace(t, rows ? Mask::rows(m.at(t).shape(), {0}) : Mask::cols(m.at(t).shape(), {0}));
  }
  return s;
}

TEST(EmpiricalNtk, MatchesBruteforceOnEverySubset) {
  Fixture f;
  ASSERT_LE(f.m.total_params(), 5000u);
  const TrainablePlan lora = apply_lora(f.m, 1, 1.0, {}, 5);
  const std::vector<std::pair<ParamSubset, const AdapterSet*>> subsets = {
      {full_subset(f.m), nullptr},
      {structured_subset(f.m, true), nullptr},
      {structured_subset(f.m, false), nullptr},
      {lora_subset(lora), &lora.adapters}};
  for (const auto& [s, ad] : subsets) {
    const KernelMatrix e = empirical_ntk(f.m, s, f.x, {}, ad);
    const KernelMatrix b = ntk_bruteforce(f.m, s, f.x, {}, ad);
    EXPECT_LT(rel_frobenius(e.K, b.K), 1e-8);
    const KernelCheck chk = check_kernel(e.K);
    EXPECT_TRUE(chk.symmetric);
    EXPECT_TRUE(chk.psd) << chk.min_eigenvalue << " vs " << chk.psd_floor;
  }
}

// Kernel from central-difference Jacobians; shares nothing with the tape.
TEST(EmpiricalNtk, MatchesFiniteDifferenceJacobian) {
  Fixture f;
  const ParamSubset s = structured_subset(f.m, true);
  std::vector<std::vector<double>> jac(f.x.size());
  for (const auto& [name, mask] : s) {
    for (std::size_t i : mask.indices()) {
      Model p = f.m, q = f.m;
      const double h = 1e-5;
      p.at(name)[i] += h;
      q.at(name)[i] -= h;
      for (std::size_t a = 0; a < f.x.size(); ++a)
        jac[a].push_back((scalar_output(p, f.x[a]) - scalar_output(q, f.x[a])) / (2 * h));
    }
  }
  Tensor K({f.x.size(), f.x.size()});
  for (std::size_t a = 0; a < f.x.size(); ++a)
    for (std::size_t b = 0; b < f.x.size(); ++b) {
      long double acc = 0;
      for (std::size_t i = 0; i < jac[a].size(); ++i) acc += static_cast<long double>(jac[a][i]) * jac[b][i];
      K(a, b) = static_cast<double>(acc);
    }
  EXPECT_LT(rel_frobenius(empirical_ntk(f.m, s, f.x).K, K), 1e-6);
}

TEST(EmpiricalNtk, SubsetAdditivityAndDomination) {
  Fixture f;
  const Tensor full = empirical_ntk(f.m, full_subset(f.m), f.x).K;
  Tensor sum({f.x.size(), f.x.size()});
  for (const auto& [name, t] : f.m.params()) {
    const Tensor k = empirical_ntk(f.m, {{name, Mask::all(t.shape())}}, f.x).K;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += k[i];
  }
  double scale = 0;
  for (double v : full.data()) scale = std::max(scale, std::abs(v));
  EXPECT_LT(max_abs_diff(sum, full), 1e-10 * scale);

  // Row 0 plus the remaining rows of one matrix.
  const std::string w = "layer1.W_ff1";
  const Shape sh = f.m.at(w).shape();
  std::vector<std::size_t> rest;
  for (std::size_t r = 1; r < sh[0]; ++r) rest.push_back(r);
  const Tensor k0 = empirical_ntk(f.m, {{w, Mask::rows(sh, {0})}}, f.x).K;
  const Tensor k1 = empirical_ntk(f.m, {{w, Mask::rows(sh, rest)}}, f.x).K;
  const Tensor kw = empirical_ntk(f.m, {{w, Mask::all(sh)}}, f.x).K;
  for (std::size_t i = 0; i < kw.size(); ++i) EXPECT_NEAR(k0[i] + k1[i], kw[i], 1e-10 * std::max(1.0, std::abs(kw[i])));

  const Tensor row = empirical_ntk(f.m, structured_subset(f.m, true), f.x).K;
  for (std::size_t a = 0; a < f.x.size(); ++a) {
    EXPECT_GE(row(a, a), 0.0);
    EXPECT_GE(full(a, a), row(a, a));
  }
}

TEST(EmpiricalNtk, ErrorsAndGuard) {
  Fixture f;
  EXPECT_THROW(empirical_ntk(f.m, {{"layer9.W_q", Mask::all({8, 8})}}, f.x), NameError);
  EXPECT_THROW(empirical_ntk(f.m, {}, f.x), ContractError);
  EXPECT_THROW(empirical_ntk(f.m, full_subset(f.m), {}), ContractError);
  ModelConfig big = f.c;
  big.vocab_size = 2000;
  big.d_model = 64;
  const Model bm = init_model(big);
  EXPECT_THROW(ntk_bruteforce(bm, full_subset(bm), {{2, 3}}), ResourceError);
}

TEST(LoraKernel, GradientSupportInBOnly) {
  ModelConfig c = testing::micro_config(2);
  c.d_model = 4;
  c.n_heads = 1;
  const Model m = testing::spread_model(c);
  const TrainablePlan plan = apply_lora(m, 1, 1.0, {"layer0.W_q"}, 3);
  const ParamSubset s = lora_subset(plan);
  EXPECT_EQ(subset_size(s), 8u);

  const TrainablePlan all = apply_lora(m, 1, 1.0, {}, 3);
  const TokenBatch x = testing::random_batch(c, 4, 9);
  for (const auto& a : all.adapters.lora) {
    const ParamSubset sa = {{a.a_name(), Mask::all(a.A.shape())}};
    for (const auto& g : gradient_features(m, sa, x, {}, &all.adapters))
      for (double v : g) EXPECT_EQ(v, 0.0) << a.target;
  }
  const KernelMatrix k = empirical_ntk(m, lora_subset(all), x, {}, &all.adapters);
  EXPECT_GT(frobenius_norm(k.K), 0.0);
  EXPECT_TRUE(check_kernel(k.K).psd);
  EXPECT_THROW(lora_subset(apply_bitfit(c)), ContractError);
}

TEST(RelativeDifference, Examples) {
  const Tensor I = Tensor::identity(2);
  const Tensor B = Tensor::matrix({{1, 0}, {0, 0}});
  EXPECT_EQ(relative_difference(I, I, 1), 0.0);
  EXPECT_EQ(relative_difference(I, I, 2), 0.0);
  EXPECT_NEAR(relative_difference(I, B, 1), 1.0, 1e-12);
  EXPECT_EQ(relative_difference(I, B, 2), relative_difference(B, I, 2));
  std::mt19937_64 rng(1);
  const Tensor R = Tensor::randn({3, 3}, rng);
  Tensor R2 = R;
  for (double& v : R2.data()) v *= 3.7;
  EXPECT_NEAR(relative_difference(R, R2, 1), 0.0, 1e-12);
  EXPECT_NEAR(relative_difference(R, R2, 2), 0.0, 1e-12);
  EXPECT_THROW(relative_difference(I, Tensor({2, 2}), 1), DegenerateInputError);
  EXPECT_THROW(relative_difference(I, I, 3), RangeError);
  EXPECT_THROW(relative_difference(I, Tensor::identity(3), 1), DimensionError);
}

TEST(EigenSpectrum, TrivialCases) {
  EXPECT_EQ(eigen_spectrum(Tensor::identity(2)), (std::vector<double>{1, 1}));
  const std::vector<double> v = {1, 2, -2};
  Tensor G({3, 3});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) G(i, j) = v[i] * v[j];
  const auto ev = eigen_spectrum(G);
  EXPECT_NEAR(ev[0], 9.0, 1e-12);
  EXPECT_NEAR(ev[1], 0.0, 1e-12);
  EXPECT_NEAR(ev[2], 0.0, 1e-12);
  EXPECT_THROW(eigen_spectrum(Tensor::matrix({{1, 2}, {0, 1}})), ContractError);
}

TEST(EigenSpectrum, MatchesEigenOnRandomGram) {
  std::mt19937_64 rng(17);
  const Tensor A = Tensor::randn({6, 9}, rng);
  const Tensor G = kernels::matmul_nt(A, A);
  Eigen::MatrixXd E(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) E(i, j) = G(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(E);
  const auto ev = eigen_spectrum(G);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(ev[i], solver.eigenvalues()[5 - i], 1e-8);
}

TEST(KernelCheck, FlagsAsymmetryAndNegativeEigenvalues) {
  EXPECT_FALSE(check_kernel(Tensor::matrix({{1, 0.5}, {0.4, 1}})).symmetric);
  const KernelCheck c = check_kernel(Tensor::matrix({{1, 2}, {2, 1}}));
  EXPECT_TRUE(c.symmetric);
  EXPECT_FALSE(c.psd);
}

TEST(KernelDump, CsvLayout) {
  KernelMatrix k;
  k.K = Tensor::matrix({{1, 0.5}, {0.5, 2}});
  k.example_ids = {"a", "b"};
  std::ostringstream os;
  write_kernel_csv(os, k);
  EXPECT_EQ(os.str(), "a,b\n1,0.5\n0.5,2\n");
  std::ostringstream sp;
  write_spectrum_csv(sp, {2.0, 1.0});
  EXPECT_EQ(sp.str(), "index,eigenvalue\n0,2\n1,1\n");
}

}  // namespace
}  // namespace rocoft
