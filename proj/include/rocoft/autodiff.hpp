// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rocoft/tensor.hpp"

// Tape-based reverse-mode differentiation over Tensor values.
//
// Every primitive evaluates eagerly and appends a node to the tape, so node
// ids are a topological order by construction. grad() sweeps the tape once in
// reverse, visiting only nodes that lie between the root and a requested
// parameter.

namespace rocoft {

using NodeId = std::size_t;

class Tape;

namespace detail {

// Lazily allocated per-node adjoints.
class Adjoints {
 public:
  Adjoints(const Tape& tape, std::size_t n) : tape_(tape), grads_(n) {}

  Tensor& at(NodeId id);
  bool has(NodeId id) const { return !grads_[id].empty(); }
  const Tensor& get(NodeId id) const { return grads_[id]; }

 private:
  const Tape& tape_;
  std::vector<Tensor> grads_;
};

}  // namespace detail

struct TapeNode;

/// Accumulates input adjoints from the output adjoint of one node.
using Backward = std::function<void(const Tape&, const TapeNode&, const Tensor& grad_out,
                                    detail::Adjoints& adj)>;

struct TapeNode {
  Tensor value;
  std::vector<NodeId> inputs;
  Backward backward;      // empty for leaves
  std::string param;      // non-empty for registered parameters
  bool depends_on_param = false;
};

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  NodeId id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a named parameter leaf. Registering the same name twice
  /// returns the original node.
  Var param(const std::string& name, const Tensor& value) {
    if (auto it = params_.find(name); it != params_.end()) return Var{this, it->second};
    TapeNode node;
    node.value = value;
    node.param = name;
    node.depends_on_param = true;
    nodes_.push_back(std::move(node));
    params_.emplace(name, nodes_.size() - 1);
    return Var{this, nodes_.size() - 1};
  }

  Var constant(Tensor value) {
    TapeNode node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
  }

  Var record(Tensor value, std::vector<NodeId> inputs, Backward backward) {
    TapeNode node;
    node.value = std::move(value);
    for (NodeId in : inputs) {
      if (in >= nodes_.size()) throw ContractError("tape input recorded out of order");
      node.depends_on_param = node.depends_on_param || nodes_[in].depends_on_param;
    }
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
  }

  const TapeNode& node(NodeId id) const { return nodes_.at(id); }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::optional<NodeId> find_param(const std::string& name) const {
    if (auto it = params_.find(name); it != params_.end()) return it->second;
    return std::nullopt;
  }

  const std::map<std::string, NodeId>& params() const noexcept { return params_; }

 private:
  std::vector<TapeNode> nodes_;
  std::map<std::string, NodeId> params_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

inline Tensor& detail::Adjoints::at(NodeId id) {
  if (grads_[id].empty()) grads_[id] = Tensor(tape_.value(id).shape());
  return grads_[id];
}

using GradientMap = std::map<std::string, Tensor>;

/// d(root)/d(param) for every requested parameter name.
///
/// The root must hold a single value. Every requested name must be a
/// parameter registered on the tape; parameters that do not influence the
/// root receive an all-zero gradient.
inline GradientMap grad(Var root, const std::set<std::string>& params) {
  const Tape& tape = *root.tape;
  if (root.value().size() != 1) {
    throw ContractError("grad: root node has shape " + shape_str(root.shape()) +
                        ", expected a single value");
  }
  std::vector<char> relevant(root.id + 1, 0);
  for (const auto& name : params) {
    auto id = tape.find_param(name);
    if (!id) throw ContractError("grad: parameter '" + name + "' is not on the tape");
    if (*id <= root.id) relevant[*id] = 1;
  }
  for (NodeId id = 0; id <= root.id; ++id) {
    if (relevant[id]) continue;
    for (NodeId in : tape.node(id).inputs) {
      if (relevant[in]) {
        relevant[id] = 1;
        break;
      }
    }
  }

  detail::Adjoints adj(tape, root.id + 1);
  adj.at(root.id)[0] = 1.0;
  for (NodeId id = root.id + 1; id-- > 0;) {
    const TapeNode& node = tape.node(id);
    if (!relevant[id] || !node.backward || !adj.has(id)) continue;
    node.backward(tape, node, adj.get(id), adj);
  }

  GradientMap out;
  for (const auto& name : params) {
    const NodeId id = *tape.find_param(name);
    out.emplace(name, id <= root.id && adj.has(id) ? adj.get(id) : Tensor(tape.value(id).shape()));
  }
  return out;
}

/// Central-difference gradient of a scalar function.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::vector<double> theta,
    double eps = 1e-5) {
  if (!(eps > 0.0)) throw RangeError("finite_difference_gradient: eps must be positive");
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + eps;
    const double fp = f(theta);
    theta[i] = orig - eps;
    const double fm = f(theta);
    theta[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_difference_gradient: non-finite value at coordinate " +
                         std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Raw kernels shared by forward and backward passes.

namespace kernels {

// C[m x n] = A[m x k] * B[k x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      const double av = pa[i * k + t];
      const double* brow = pb + t * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

inline Tensor transpose(const Tensor& a) {
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor t({n, m});
  const double* pa = a.data().data();
  double* pt = t.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) pt[j * m + i] = pa[i * n + j];
  return t;
}

// C[m x n] = A[m x k] * B[n x k]^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) { return matmul(a, transpose(b)); }

// C[k x n] = A[m x k]^T * B[m x n]
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({k, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      const double av = pa[i * k + t];
      const double* brow = pb + i * n;
      double* crow = pc + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

inline void accumulate(Tensor& dst, const Tensor& src) {
  double* d = dst.data().data();
  const double* s = src.data().data();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Differentiable primitives.

namespace ops {

namespace detail_ops {

inline void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

// b is either the same shape as a, or a vector broadcast along a's leading axes.
inline bool is_trailing_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return false;
  if (b.rank() == 1 && b.dim(0) == a.cols()) return true;
  throw DimensionError(std::string(op) + ": cannot combine " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
}

}  // namespace detail_ops

inline Var matmul(Var a, Var b) {
  detail_ops::require_matrix(a.value(), "matmul");
  detail_ops::require_matrix(b.value(), "matmul");
  if (a.value().dim(1) != b.value().dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  return a.tape->record(
      kernels::matmul(a.value(), b.value()), {a.id, b.id},
      [](const Tape& t, const TapeNode& n, const Tensor& g, detail::Adjoints& adj) {
        const Tensor& av = t.value(n.inputs[0]);
        const Tensor& bv = t.value(n.inputs[1]);
        if (t.node(n.inputs[0]).depends_on_param)
          kernels::accumulate(adj.at(n.inputs[0]), kernels::matmul_nt(g, bv));
        if (t.node(n.inputs[1]).depends_on_param)
          kernels::accumulate(adj.at(n.inputs[1]), kernels::matmul_tn(av, g));
      });
}

/// Elementwise sum; b may be a vector broadcast over a's leading axes.
inline Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool bcast = detail_ops::is_trailing_broadcast(av, bv, "add");
  Tensor out = av;
  const std::size_t n = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bcast ? bv[i % n] : bv[i];
  return a.tape->record(
      std::move(out), {a.id, b.id},
      [bcast, n](const Tape& t, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        if (t.node(node.inputs[0]).depends_on_param) kernels::accumulate(adj.at(node.inputs[0]), g);
        if (t.node(node.inputs[1]).depends_on_param) {
          Tensor& gb = adj.at(node.inputs[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[bcast ? i % n : i] += g[i];
        }
      });
}

/// Elementwise product; b may be a vector broadcast over a's leading axes.
inline Var multiply(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool bcast = detail_ops::is_trailing_broadcast(av, bv, "multiply");
  Tensor out = av;
  const std::size_t n = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bcast ? bv[i % n] : bv[i];
  return a.tape->record(
      std::move(out), {a.id, b.id},
      [bcast, n](const Tape& t, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        const Tensor& av = t.value(node.inputs[0]);
        const Tensor& bv = t.value(node.inputs[1]);
        if (t.node(node.inputs[0]).depends_on_param) {
          Tensor& ga = adj.at(node.inputs[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (bcast ? bv[i % n] : bv[i]);
        }
        if (t.node(node.inputs[1]).depends_on_param) {
          Tensor& gb = adj.at(node.inputs[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[bcast ? i % n : i] += g[i] * av[i];
        }
      });
}

inline Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= c;
  return a.tape->record(std::move(out), {a.id},
                        [c](const Tape&, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
                          Tensor& ga = adj.at(node.inputs[0]);
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
                        });
}

inline Var subtract(Var a, Var b) { return add(a, scale(b, -1.0)); }

inline Var transpose(Var a) {
  detail_ops::require_matrix(a.value(), "transpose");
  return a.tape->record(kernels::transpose(a.value()), {a.id},
                        [](const Tape&, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
                          kernels::accumulate(adj.at(node.inputs[0]), kernels::transpose(g));
                        });
}

/// Concatenates matrices along axis 0 (rows) or 1 (columns).
inline Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  if (axis > 1) throw ContractError("concat: axis must be 0 or 1");
  for (const Var& p : parts) detail_ops::require_matrix(p.value(), "concat");
  const std::size_t other = parts[0].value().dim(1 - axis);
  std::size_t total = 0;
  std::vector<NodeId> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (p.value().dim(1 - axis) != other) {
      throw DimensionError("concat: incompatible part " + shape_str(p.shape()));
    }
    offsets.push_back(total);
    total += p.value().dim(axis);
    ids.push_back(p.id);
  }
  Shape shape = axis == 0 ? Shape{total, other} : Shape{other, total};
  Tensor out(shape);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < pv.dim(0); ++i)
      for (std::size_t j = 0; j < pv.dim(1); ++j) {
        if (axis == 0) out(offsets[k] + i, j) = pv(i, j);
        else out(i, offsets[k] + j) = pv(i, j);
      }
  }
  return parts[0].tape->record(
      std::move(out), std::move(ids),
      [axis, offsets](const Tape& t, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
          if (!t.node(node.inputs[k]).depends_on_param) continue;
          Tensor& gp = adj.at(node.inputs[k]);
          for (std::size_t i = 0; i < gp.dim(0); ++i)
            for (std::size_t j = 0; j < gp.dim(1); ++j)
              gp(i, j) += axis == 0 ? g(offsets[k] + i, j) : g(i, offsets[k] + j);
        }
      });
}

/// Contiguous window [start, start+len) along one axis of a vector or matrix.
inline Var slice(Var a, std::size_t axis, std::size_t start, std::size_t len) {
  const Tensor& av = a.value();
  if (av.rank() > 2 || axis >= av.rank()) throw ContractError("slice: unsupported axis");
  if (len == 0 || start + len > av.dim(axis)) {
    throw RangeError("slice: window [" + std::to_string(start) + ", " + std::to_string(start + len) +
                     ") outside " + shape_str(av.shape()));
  }
  const std::size_t m = av.rank() == 2 ? av.dim(0) : 1;
  const std::size_t n = av.cols();
  Shape shape = av.shape();
  shape[axis] = len;
  Tensor out(shape);
  const std::size_t on = out.cols();
  const std::size_t r0 = (av.rank() == 2 && axis == 0) ? start : 0;
  const std::size_t c0 = (axis == av.rank() - 1) ? start : 0;
  for (std::size_t i = 0; i < out.size() / on; ++i)
    for (std::size_t j = 0; j < on; ++j) out[i * on + j] = av[(r0 + i) * n + c0 + j];
  (void)m;
  return a.tape->record(
      std::move(out), {a.id},
      [r0, c0, n](const Tape&, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        Tensor& ga = adj.at(node.inputs[0]);
        const std::size_t gn = g.cols();
        for (std::size_t i = 0; i < g.size() / gn; ++i)
          for (std::size_t j = 0; j < gn; ++j) ga[(r0 + i) * n + c0 + j] += g[i * gn + j];
      });
}

/// Row lookup: out[t, :] = table[ids[t], :].
inline Var gather(Var table, const std::vector<std::size_t>& ids) {
  const Tensor& tv = table.value();
  detail_ops::require_matrix(tv, "gather");
  if (ids.empty()) throw ContractError("gather: empty index list");
  const std::size_t d = tv.dim(1);
  Tensor out({ids.size(), d});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= tv.dim(0)) {
      throw InputError("gather: index " + std::to_string(ids[t]) + " at position " +
                       std::to_string(t) + " out of range for " + std::to_string(tv.dim(0)) + " rows");
    }
    for (std::size_t j = 0; j < d; ++j) out(t, j) = tv(ids[t], j);
  }
  return table.tape->record(
      std::move(out), {table.id},
      [ids, d](const Tape&, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        Tensor& gt = adj.at(node.inputs[0]);
        for (std::size_t t = 0; t < ids.size(); ++t)
          for (std::size_t j = 0; j < d; ++j) gt(ids[t], j) += g(t, j);
      });
}

inline Tensor softmax_values(const Tensor& x) {
  Tensor y = x;
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double* row = y.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      s += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= s;
  }
  return y;
}

/// Softmax over the trailing axis (max-subtracted).
inline Var softmax(Var x) {
  return x.tape->record(
      softmax_values(x.value()), {x.id},
      [](const Tape& t, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        const Tensor& y = node.value;
        Tensor& gx = adj.at(node.inputs[0]);
        const std::size_t n = y.cols();
        (void)t;
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
          for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
        }
      });
}

/// Per-slice normalization over the trailing axis followed by gamma * xhat + beta.
inline Var layernorm(Var x, Var gamma, Var beta, double eps = 1e-5) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols();
  if (gamma.value().shape() != Shape{n} || beta.value().shape() != Shape{n}) {
    throw DimensionError("layernorm: affine parameters must have shape [" + std::to_string(n) + "]");
  }
  if (!(eps > 0.0)) throw RangeError("layernorm: eps must be positive");
  const std::size_t rows = xv.rows();
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(rows);
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xv[r * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = xv[r * n + j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (xv[r * n + j] - mean) * inv_std[r];
      out[r * n + j] = gamma.value()[j] * xhat[r * n + j] + beta.value()[j];
    }
  }
  return x.tape->record(
      std::move(out), {x.id, gamma.id, beta.id},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), n](
          const Tape& t, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
        const Tensor& gam = t.value(node.inputs[1]);
        const std::size_t rows = g.size() / n;
        if (t.node(node.inputs[0]).depends_on_param) {
          Tensor& gx = adj.at(node.inputs[0]);
          for (std::size_t r = 0; r < rows; ++r) {
            double sum_d = 0.0, sum_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g[r * n + j] * gam[j];
              sum_d += d;
              sum_dx += d * xhat[r * n + j];
            }
            const double nn = static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              const double d = g[r * n + j] * gam[j];
              gx[r * n + j] += inv_std[r] / nn * (nn * d - sum_d - xhat[r * n + j] * sum_dx);
            }
          }
        }
        if (t.node(node.inputs[1]).depends_on_param) {
          Tensor& gg = adj.at(node.inputs[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gg[i % n] += g[i] * xhat[i];
        }
        if (t.node(node.inputs[2]).depends_on_param) {
          Tensor& gb = adj.at(node.inputs[2]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
        }
      });
}

/// GELU, tanh approximation.
inline double gelu_value(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

inline double gelu_derivative(double x) {
  constexpr double c = 0.7978845608028654;
  const double u = c * (x + 0.044715 * x * x * x);
  const double th = std::tanh(u);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * 0.044715 * x * x);
}

inline Var gelu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = gelu_value(v);
  return x.tape->record(std::move(out), {x.id},
                        [](const Tape& t, const TapeNode& node, const Tensor& g, detail::Adjoints& adj) {
                          const Tensor& xv = t.value(node.inputs[0]);
                          Tensor& gx = adj.at(node.inputs[0]);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * gelu_derivative(xv[i]);
                        });
}

/// Mean negative log-likelihood of integer labels under row-wise softmax(logits).
inline Var cross_entropy(Var logits, const std::vector<std::size_t>& labels) {
  const Tensor& lv = logits.value();
  detail_ops::require_matrix(lv, "cross_entropy");
  if (labels.size() != lv.dim(0)) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(lv.dim(0)) + " rows");
  }
  const std::size_t c = lv.dim(1);
  Tensor probs = softmax_values(lv);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= c) throw RangeError("cross_entropy: label out of range");
    const double* row = lv.data().data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - mx);
    loss += (mx + std::log(s)) - row[labels[i]];
  }
  loss /= static_cast<double>(labels.size());
  return logits.tape->record(
      Tensor::scalar(loss), {logits.id},
      [probs = std::move(probs), labels, c](const Tape&, const TapeNode& node, const Tensor& g,
                                            detail::Adjoints& adj) {
        Tensor& gl = adj.at(node.inputs[0]);
        const double w = g[0] / static_cast<double>(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
          for (std::size_t j = 0; j < c; ++j)
            gl(i, j) += w * (probs(i, j) - (j == labels[i] ? 1.0 : 0.0));
      });
}

}  // namespace ops
}  // namespace rocoft
