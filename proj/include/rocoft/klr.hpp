// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rocoft/ntk.hpp"

// Kernel logistic regression in the dual:
//
//   L(a) = lambda/2 a'Ka - y'Ka + sum_i log(1 + exp((Ka)_i))
//   grad = K (lambda a - y + sigmoid(Ka))

namespace rocoft {

struct KLRProblem {
  Tensor K;                        // n x n train Gram matrix
  std::vector<double> y;           // labels in {0, 1}
  double lambda = 1e-3;

  std::size_t n() const { return y.size(); }

  void validate(bool check_psd = true) const {
    if (K.rank() != 2 || K.dim(0) != K.dim(1)) throw DimensionError("klr: K must be square");
    if (K.dim(0) != y.size()) {
      throw DimensionError("klr: K is " + shape_str(K.shape()) + " but " + std::to_string(y.size()) + " labels");
    }
    if (!(lambda > 0.0)) throw RangeError("klr: lambda must be positive");
    for (double v : y)
      if (v != 0.0 && v != 1.0) throw RangeError("klr: labels must be 0 or 1");
    if (check_psd) {
      const KernelCheck c = check_kernel(K);
      if (!c.symmetric || !c.psd) throw ContractError("klr: K is not symmetric positive semidefinite");
    }
  }
};

struct KLRSolution {
  std::vector<double> alpha;
  double final_objective = 0.0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> objective_history;  // one entry per accepted step, plus the start
};

inline double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

namespace detail {

inline std::vector<double> matvec(const Tensor& K, std::span<const double> v) {
  std::vector<double> out(K.dim(0), 0.0);
  for (std::size_t i = 0; i < K.dim(0); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < K.dim(1); ++j) s += K(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

namespace detail {

// Extended precision so the line search can still resolve decreases once
// the gradient norm approaches 1e-8.
inline long double objective_ext(const KLRProblem& p, std::span<const double> alpha) {
  long double quad = 0.0L, lin = 0.0L, loss = 0.0L;
  for (std::size_t i = 0; i < p.n(); ++i) {
    long double u = 0.0L;
    for (std::size_t j = 0; j < p.n(); ++j) u += static_cast<long double>(p.K(i, j)) * alpha[j];
    quad += alpha[i] * u;
    lin += p.y[i] * u;
    loss += u > 0.0L ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
  }
  return 0.5L * p.lambda * quad - lin + loss;
}

}  // namespace detail

inline double dual_objective(const KLRProblem& p, std::span<const double> alpha) {
  if (alpha.size() != p.n()) throw DimensionError("dual_objective: alpha length mismatch");
  return static_cast<double>(detail::objective_ext(p, alpha));
}

inline std::vector<double> dual_gradient(const KLRProblem& p, std::span<const double> alpha) {
  if (alpha.size() != p.n()) throw DimensionError("dual_gradient: alpha length mismatch");
  const auto u = detail::matvec(p.K, alpha);
  std::vector<double> r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) r[i] = p.lambda * alpha[i] - p.y[i] + sigmoid(u[i]);
  return detail::matvec(p.K, r);
}

/// kGradient steps along -grad. kFunctional steps along -(lambda a - y +
/// sigmoid(Ka)), the gradient preconditioned by K^-1 (a descent direction
/// since grad'r = r'Kr >= 0); far better conditioned on NTK Gram matrices.
enum class KLRDirection { kGradient, kFunctional };

struct KLROptions {
  double tol = 1e-8;
  KLRDirection direction = KLRDirection::kFunctional;
  std::size_t max_iter = 10000;
  std::vector<double> alpha0;  // empty: start at zero
  bool check_psd = true;
};

/// First-order descent with Armijo backtracking from a Barzilai-Borwein
/// trial step. Exhausting max_iter sets
/// converged = false rather than throwing.
inline KLRSolution fit_klr(const KLRProblem& p, const KLROptions& opts = {}) {
  p.validate(opts.check_psd);
  if (!(opts.tol > 0.0)) throw RangeError("fit_klr: tol must be positive");
  KLRSolution sol;
  sol.alpha = opts.alpha0.empty() ? std::vector<double>(p.n(), 0.0) : opts.alpha0;
  if (sol.alpha.size() != p.n()) throw DimensionError("fit_klr: alpha0 length mismatch");

  long double f = detail::objective_ext(p, sol.alpha);
  sol.objective_history.push_back(static_cast<double>(f));
  double step = 1.0;
  std::vector<double> trial(p.n()), prev_alpha, prev_dir;
  for (sol.iterations = 0; sol.iterations < opts.max_iter; ++sol.iterations) {
    const auto u = detail::matvec(p.K, sol.alpha);
    std::vector<double> r(p.n());
    for (std::size_t i = 0; i < p.n(); ++i) r[i] = p.lambda * sol.alpha[i] - p.y[i] + sigmoid(u[i]);
    const auto g = detail::matvec(p.K, r);
    const double gn = detail::norm2(g);
    sol.grad_norm = gn;
    if (gn <= opts.tol) {
      sol.converged = true;
      break;
    }
    std::vector<double> dir = opts.direction == KLRDirection::kGradient ? g : r;
    double slope = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) slope += g[i] * dir[i];
    if (!(slope > 0.0)) break;
    // Barzilai-Borwein trial step; falls back to growing the last step.
    step *= 2.0;
    if (!prev_dir.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < p.n(); ++i) {
        const double si = sol.alpha[i] - prev_alpha[i], yi = dir[i] - prev_dir[i];
        ss += si * si;
        sy += si * yi;
      }
      if (sy > 0.0 && std::isfinite(ss / sy)) step = ss / sy;
    }
    long double f_new = f;
    bool accepted = false;
    // Below this predicted decrease the Armijo test is lost in roundoff; a
    // step is then taken if it does not raise f and shrinks the gradient.
    const long double noise = 1e3L * std::numeric_limits<long double>::epsilon() * (1.0L + std::fabs(f));
    while (step > 1e-300) {
      for (std::size_t i = 0; i < p.n(); ++i) trial[i] = sol.alpha[i] - step * dir[i];
      f_new = detail::objective_ext(p, trial);
      const long double predicted = 1e-4L * step * slope;
      const bool ok = predicted >= noise ? f_new <= f - predicted
                                         : f_new <= f && detail::norm2(dual_gradient(p, trial)) < gn;
      if (ok) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || f_new > f) break;  // stalled at machine precision
    prev_alpha = sol.alpha;
    prev_dir = std::move(dir);
    sol.alpha = trial;
    f = f_new;
    sol.objective_history.push_back(static_cast<double>(f));
  }
  if (!sol.converged) sol.grad_norm = detail::norm2(dual_gradient(p, sol.alpha));
  sol.converged = sol.grad_norm <= opts.tol;
  sol.final_objective = static_cast<double>(f);
  return sol;
}

/// sigma(K_cross alpha) per test row.
inline std::vector<double> klr_predict(const Tensor& K_cross, std::span<const double> alpha) {
  if (K_cross.rank() != 2 || K_cross.dim(1) != alpha.size()) {
    throw DimensionError("klr_predict: kernel block " + shape_str(K_cross.shape()) + " vs " +
                         std::to_string(alpha.size()) + " coefficients");
  }
  auto u = detail::matvec(K_cross, alpha);
  for (double& v : u) v = sigmoid(v);
  return u;
}

inline std::vector<std::size_t> klr_classes(const std::vector<double>& probs) {
  std::vector<std::size_t> out;
  for (double p : probs) out.push_back(p >= 0.5 ? 1 : 0);
  return out;
}

/// One binary problem per class (class c vs rest); prediction is the class
/// with the largest decision value.
struct OneVsRest {
  std::vector<KLRSolution> solutions;

  static OneVsRest fit(const Tensor& K, const std::vector<std::size_t>& labels, std::size_t n_classes,
                       double lambda, const KLROptions& opts = {}) {
    OneVsRest m;
    for (std::size_t c = 0; c < n_classes; ++c) {
      KLRProblem p{K, {}, lambda};
      for (auto l : labels) p.y.push_back(l == c ? 1.0 : 0.0);
      m.solutions.push_back(fit_klr(p, opts));
    }
    return m;
  }

  std::vector<std::size_t> predict(const Tensor& K_cross) const {
    std::vector<std::vector<double>> dec;
    for (const auto& s : solutions) dec.push_back(detail::matvec(K_cross, s.alpha));
    std::vector<std::size_t> out(K_cross.dim(0), 0);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t c = 1; c < dec.size(); ++c)
        if (dec[c][i] > dec[out[i]][i]) out[i] = c;
    return out;
  }
};

}  // namespace rocoft
