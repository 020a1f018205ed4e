// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "rocoft/peft.hpp"

// Empirical neural tangent kernels over full or restricted parameter sets.

namespace rocoft {

enum class SubsetTag { kFull, kRow, kColumn, kLora, kCustom };

struct KernelMatrix {
  Tensor K;  // n x n
  SubsetTag tag = SubsetTag::kCustom;
  std::size_t tag_rank = 0;
  std::vector<std::string> example_ids;

  std::size_t n() const { return K.dim(0); }

  std::string tag_name() const {
    switch (tag) {
      case SubsetTag::kFull: return "full";
      case SubsetTag::kRow: return "row" + std::to_string(tag_rank);
      case SubsetTag::kColumn: return "column" + std::to_string(tag_rank);
      case SubsetTag::kLora: return "lora" + std::to_string(tag_rank);
      case SubsetTag::kCustom: return "custom";
    }
    return "custom";
  }
};

/// Every scalar of every model parameter.
inline ParamSubset full_subset(const Model& model) {
  ParamSubset s;
  for (const auto& [name, t] : model.params()) s.emplace(name, Mask::all(t.shape()));
  return s;
}

/// All LoRA A and B scalars of a plan.
inline ParamSubset lora_subset(const TrainablePlan& plan) {
  if (plan.adapters.lora.empty()) throw ContractError("lora_subset: plan has no LoRA adapters");
  ParamSubset s;
  for (const auto& a : plan.adapters.lora) {
    s.emplace(a.a_name(), Mask::all(a.A.shape()));
    s.emplace(a.b_name(), Mask::all(a.B.shape()));
  }
  return s;
}

namespace detail {

inline void validate_subset(const Model& model, const ParamSubset& subset, const AdapterSet* adapters) {
  if (subset.empty()) throw ContractError("kernel: empty parameter subset");
  std::set<std::string> adapter_names;
  if (adapters) adapters->for_each([&](const std::string& n, const Tensor&) { adapter_names.insert(n); });
  for (const auto& [name, mask] : subset) {
    const bool known = model.contains(name) || adapter_names.count(name);
    if (!known) throw NameError("kernel: parameter '" + name + "' is not in the model");
    const Shape& shape = model.contains(name) ? model.at(name).shape() : mask.shape();
    if (mask.shape() != shape) throw DimensionError("kernel: mask shape mismatch for '" + name + "'");
  }
}

inline GradientMap example_gradient(const Model& model, const ParamSubset& subset, const TokenSeq& x,
                                    const PooledOutputContract& contract, const AdapterSet* adapters) {
  Tape tape;
  ForwardOptions opts;
  opts.adapters = adapters;
  Var f = scalar_output_on_tape(tape, model, x, contract, opts);
  std::set<std::string> names;
  for (const auto& [name, _] : subset) names.insert(name);
  return grad(f, names);
}

// Pairwise summation of a[i] * b[i].
inline double pairwise_dot(const double* a, const double* b, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_dot(a, b, h) + pairwise_dot(a + h, b + h, n - h);
}

}  // namespace detail

/// Per-example gradients of f restricted to `subset`, flattened in subset
/// order (name order, then flat index).
inline std::vector<std::vector<double>> gradient_features(const Model& model, const ParamSubset& subset,
                                                          const TokenBatch& examples,
                                                          const PooledOutputContract& contract = {},
                                                          const AdapterSet* adapters = nullptr) {
  if (examples.empty()) throw ContractError("kernel: no examples");
  detail::validate_subset(model, subset, adapters);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> index_lists;
  for (const auto& [name, mask] : subset) index_lists.emplace_back(name, mask.indices());
  std::vector<std::vector<double>> out;
  out.reserve(examples.size());
  for (const auto& x : examples) {
    const GradientMap g = detail::example_gradient(model, subset, x, contract, adapters);
    std::vector<double> feat;
    feat.reserve(subset_size(subset));
    for (const auto& [name, idx] : index_lists) {
      const Tensor& gt = g.at(name);
      for (std::size_t i : idx) feat.push_back(gt[i]);
    }
    out.push_back(std::move(feat));
  }
  return out;
}

inline Tensor gram(const std::vector<std::vector<double>>& feats) {
  const std::size_t n = feats.size();
  Tensor K({n, n});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      K(a, b) = detail::pairwise_dot(feats[a].data(), feats[b].data(), feats[a].size());
      K(b, a) = K(a, b);
    }
  return K;
}

/// Rows from `rows`, columns from `cols`: C[i, j] = <rows_i, cols_j>.
inline Tensor cross_gram(const std::vector<std::vector<double>>& rows, const std::vector<std::vector<double>>& cols) {
  Tensor C({rows.size(), cols.size()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      C(i, j) = detail::pairwise_dot(rows[i].data(), cols[j].data(), rows[i].size());
  return C;
}

inline std::vector<std::string> default_example_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("x" + std::to_string(i));
  return ids;
}

/// K[a, b] = sum over subset scalars of df(x_a)/dtheta_i * df(x_b)/dtheta_i
/// at the given weights. One backward pass per example.
inline KernelMatrix empirical_ntk(const Model& model, const ParamSubset& subset, const TokenBatch& examples,
                                  const PooledOutputContract& contract = {}, const AdapterSet* adapters = nullptr,
                                  SubsetTag tag = SubsetTag::kCustom, std::size_t tag_rank = 0) {
  KernelMatrix km;
  km.K = gram(gradient_features(model, subset, examples, contract, adapters));
  km.tag = tag;
  km.tag_rank = tag_rank;
  km.example_ids = default_example_ids(examples.size());
  return km;
}

inline constexpr std::size_t kBruteforceGuard = 100000;

/// Reference kernel: scalar-by-scalar products accumulated in long double
/// in naive order.
inline KernelMatrix ntk_bruteforce(const Model& model, const ParamSubset& subset, const TokenBatch& examples,
                                   const PooledOutputContract& contract = {}, const AdapterSet* adapters = nullptr) {
  if (examples.empty()) throw ContractError("kernel: no examples");
  detail::validate_subset(model, subset, adapters);
  std::size_t total = 0;
  for (const auto& [_, m] : subset) total += m.count();
  if (total > kBruteforceGuard) {
    throw ResourceError("ntk_bruteforce: " + std::to_string(total) + " scalars exceed guard of " +
                        std::to_string(kBruteforceGuard));
  }
  std::vector<GradientMap> grads;
  for (const auto& x : examples) grads.push_back(detail::example_gradient(model, subset, x, contract, adapters));
  const std::size_t n = examples.size();
  KernelMatrix km;
  km.K = Tensor({n, n});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      long double acc = 0.0L;
      for (const auto& [name, mask] : subset) {
        const Tensor& ga = grads[a].at(name);
        const Tensor& gb = grads[b].at(name);
        for (std::size_t i = 0; i < ga.size(); ++i)
          if (mask.test(i)) acc += static_cast<long double>(ga[i]) * static_cast<long double>(gb[i]);
      }
      km.K(a, b) = static_cast<double>(acc);
    }
  }
  km.example_ids = default_example_ids(n);
  return km;
}

/// || A / ||A||_p - B / ||B||_p ||_p over the flattened matrices, p in {1, 2}.
inline double relative_difference(const Tensor& A, const Tensor& B, int p) {
  if (p != 1 && p != 2) throw RangeError("relative_difference: p must be 1 or 2");
  if (A.shape() != B.shape()) {
    throw DimensionError("relative_difference: " + shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  }
  auto norm = [p](auto&& get, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p == 1 ? std::abs(get(i)) : get(i) * get(i);
    return p == 1 ? s : std::sqrt(s);
  };
  const double na = norm([&](std::size_t i) { return A[i]; }, A.size());
  const double nb = norm([&](std::size_t i) { return B[i]; }, B.size());
  if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateInputError("relative_difference: zero-norm kernel");
  return norm([&](std::size_t i) { return A[i] / na - B[i] / nb; }, A.size());
}

inline double relative_difference(const KernelMatrix& A, const KernelMatrix& B, int p) {
  return relative_difference(A.K, B.K, p);
}

/// Eigenvalues of a symmetric matrix in descending order (cyclic Jacobi).
inline std::vector<double> eigen_spectrum(const Tensor& K) {
  if (K.rank() != 2 || K.dim(0) != K.dim(1)) throw DimensionError("eigen_spectrum: matrix must be square");
  const std::size_t n = K.dim(0);
  double scale = 1.0;
  for (double v : K.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(K(i, j) - K(j, i)) > 1e-8 * scale) {
        throw ContractError("eigen_spectrum: matrix is not symmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
      }
  Tensor a = K;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (K(i, j) + K(j, i));
  const double fro = frobenius_norm(a);
  auto off = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < 100 && off() > 1e-15 * fro; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

struct KernelCheck {
  double max_asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  double psd_floor = 0.0;  // -1e-8 * trace / n
  bool symmetric = false;
  bool psd = false;
};

/// Symmetry within 1e-10 (relative to the largest entry, floor 1) and
/// min eigenvalue >= -1e-8 * trace / n.
inline KernelCheck check_kernel(const Tensor& K) {
  KernelCheck c;
  const std::size_t n = K.dim(0);
  double scale = 1.0, trace = 0.0;
  for (double v : K.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    trace += K(i, i);
    for (std::size_t j = 0; j < n; ++j) c.max_asymmetry = std::max(c.max_asymmetry, std::abs(K(i, j) - K(j, i)));
  }
  c.symmetric = c.max_asymmetry <= 1e-10 * scale;
  if (!c.symmetric) return c;
  const auto ev = eigen_spectrum(K);
  c.min_eigenvalue = ev.back();
  c.psd_floor = -1e-8 * trace / static_cast<double>(n);
  c.psd = c.min_eigenvalue >= c.psd_floor;
  return c;
}

inline void write_kernel_csv(std::ostream& os, const KernelMatrix& km) {
  os.precision(17);
  for (std::size_t i = 0; i < km.example_ids.size(); ++i) os << (i ? "," : "") << km.example_ids[i];
  os << '\n';
  for (std::size_t a = 0; a < km.n(); ++a) {
    for (std::size_t b = 0; b < km.n(); ++b) os << (b ? "," : "") << km.K(a, b);
    os << '\n';
  }
}

inline void write_spectrum_csv(std::ostream& os, const std::vector<double>& ev) {
  os.precision(17);
  os << "index,eigenvalue\n";
  for (std::size_t i = 0; i < ev.size(); ++i) os << i << ',' << ev[i] << '\n';
}

}  // namespace rocoft
