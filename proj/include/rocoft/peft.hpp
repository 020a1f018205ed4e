// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rocoft/model.hpp"

// Trainable plans: which scalars of a model an optimizer may touch, plus any
// adapter tensors a method introduces.

namespace rocoft {

/// Boolean mask over one parameter tensor. Row and column masks are kept
/// symbolic so plans for full-size geometries stay cheap.
class Mask {
 public:
  enum class Kind { kNone, kAll, kRows, kCols, kDense };

  Mask() = default;

  static Mask none(Shape shape) { return Mask(Kind::kNone, std::move(shape)); }
  static Mask all(Shape shape) { return Mask(Kind::kAll, std::move(shape)); }

  static Mask rows(Shape shape, std::vector<std::size_t> idx) {
    return structured(Kind::kRows, std::move(shape), std::move(idx));
  }
  static Mask cols(Shape shape, std::vector<std::size_t> idx) {
    return structured(Kind::kCols, std::move(shape), std::move(idx));
  }

  static Mask dense(Shape shape, std::vector<std::uint8_t> bits) {
    if (bits.size() != shape_numel(shape)) throw DimensionError("mask bits do not match shape");
    Mask m(Kind::kDense, std::move(shape));
    m.bits_ = std::move(bits);
    m.count_ = static_cast<std::size_t>(std::count(m.bits_.begin(), m.bits_.end(), std::uint8_t{1}));
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const { return shape_numel(shape_); }
  std::size_t count() const noexcept { return count_; }
  bool any() const noexcept { return count_ > 0; }
  /// Selected row or column indices for structured masks.
  const std::vector<std::size_t>& lines() const noexcept { return lines_; }

  bool test(std::size_t flat) const {
    switch (kind_) {
      case Kind::kNone: return false;
      case Kind::kAll: return true;
      case Kind::kRows: return line_set_[flat / shape_.back()];
      case Kind::kCols: return line_set_[flat % shape_.back()];
      case Kind::kDense: return bits_[flat] != 0;
    }
    return false;
  }

  /// Sorted flat indices of trainable scalars.
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i)
      if (test(i)) out.push_back(i);
    return out;
  }

  Tensor as_tensor() const {
    Tensor t(shape_);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = test(i) ? 1.0 : 0.0;
    return t;
  }

 private:
  Mask(Kind kind, Shape shape) : kind_(kind), shape_(std::move(shape)) {
    if (kind_ == Kind::kAll) count_ = shape_numel(shape_);
  }

  static Mask structured(Kind kind, Shape shape, std::vector<std::size_t> idx) {
    if (shape.size() != 2) throw DimensionError("row/column masks require a matrix, got " + shape_str(shape));
    const std::size_t axis_len = kind == Kind::kRows ? shape[0] : shape[1];
    const std::size_t line_len = kind == Kind::kRows ? shape[1] : shape[0];
    Mask m(kind, std::move(shape));
    m.line_set_.assign(axis_len, 0);
    for (std::size_t i : idx) {
      if (i >= axis_len) {
        throw RangeError("mask index " + std::to_string(i) + " out of range for axis of length " +
                         std::to_string(axis_len));
      }
      if (m.line_set_[i]) throw RangeError("duplicate mask index " + std::to_string(i));
      m.line_set_[i] = 1;
    }
    std::sort(idx.begin(), idx.end());
    m.lines_ = std::move(idx);
    m.count_ = m.lines_.size() * line_len;
    return m;
  }

  Kind kind_ = Kind::kNone;
  Shape shape_;
  std::vector<std::size_t> lines_;
  std::vector<std::uint8_t> line_set_;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

/// Scalars addressed per named tensor (model parameters or adapters).
using ParamSubset = std::map<std::string, Mask>;

inline std::size_t subset_size(const ParamSubset& s) {
  std::size_t n = 0;
  for (const auto& [_, m] : s) n += m.count();
  return n;
}

enum class PlanMethod { kFull, kRocoftRow, kRocoftColumn, kRocoftIndices, kRandomEntry, kLora, kBitfit, kIa3 };

inline const char* plan_method_name(PlanMethod m) {
  switch (m) {
    case PlanMethod::kFull: return "full";
    case PlanMethod::kRocoftRow: return "rocoft-row";
    case PlanMethod::kRocoftColumn: return "rocoft-column";
    case PlanMethod::kRocoftIndices: return "rocoft-indices";
    case PlanMethod::kRandomEntry: return "random-entry";
    case PlanMethod::kLora: return "lora";
    case PlanMethod::kBitfit: return "bitfit";
    case PlanMethod::kIa3: return "ia3";
  }
  return "?";
}

/// Trainable-parameter and added-parameter counts.
struct ParamBudget {
  std::uint64_t ttps = 0;
  std::uint64_t aps = 0;
  friend bool operator==(const ParamBudget&, const ParamBudget&) = default;
};

struct TrainablePlan {
  PlanMethod method = PlanMethod::kFull;
  std::map<std::string, Mask> masks;  // one entry per model parameter
  AdapterSet adapters;
  std::vector<std::string> warnings;

  /// TTPs count mask entries plus adapter scalars; classifier-head scalars
  /// are left out unless include_head is set.
  ParamBudget budget(bool include_head = false) const {
    ParamBudget b;
    for (const auto& [name, m] : masks) {
      if (!include_head && is_head_param(name)) continue;
      b.ttps += m.count();
    }
    b.aps = adapters.scalar_count();
    b.ttps += b.aps;
    return b;
  }

  std::size_t trainable_in(const std::string& name) const {
    auto it = masks.find(name);
    if (it == masks.end()) throw NameError("plan has no parameter '" + name + "'");
    return it->second.count();
  }

  /// Model parameters with at least one trainable scalar plus all adapters.
  std::set<std::string> trainable_names() const {
    std::set<std::string> out;
    for (const auto& [name, m] : masks)
      if (m.any()) out.insert(name);
    adapters.for_each([&](const std::string& n, const Tensor&) { out.insert(n); });
    return out;
  }

  /// The trainable scalars as a subset usable for kernels.
  ParamSubset subset() const {
    ParamSubset s;
    for (const auto& [name, m] : masks)
      if (m.any()) s.emplace(name, m);
    adapters.for_each([&](const std::string& n, const Tensor& t) { s.emplace(n, Mask::all(t.shape())); });
    return s;
  }

  void unfreeze(const std::string& name) {
    auto it = masks.find(name);
    if (it == masks.end()) throw NameError("plan has no parameter '" + name + "'");
    it->second = Mask::all(it->second.shape());
  }

  void unfreeze_head() {
    for (auto& [name, m] : masks)
      if (is_head_param(name)) m = Mask::all(m.shape());
  }
};

namespace detail {

inline TrainablePlan frozen_plan(const ModelLayout& layout, PlanMethod method) {
  TrainablePlan plan;
  plan.method = method;
  for (const auto& [name, shape] : layout.entries) plan.masks.emplace(name, Mask::none(shape));
  return plan;
}

inline std::vector<std::string> resolve_targets(const ModelLayout& layout, const ModelConfig* config,
                                                const std::vector<std::string>& targets) {
  if (!targets.empty()) {
    for (const auto& t : targets) {
      if (!layout.contains(t)) throw NameError("unknown target '" + t + "'");
      if (layout.shape_of(t).size() != 2) throw NameError("target '" + t + "' is not a weight matrix");
    }
    return targets;
  }
  if (!config) throw ContractError("no targets given");
  return default_targets(*config);
}

}  // namespace detail

enum class Axis { kRow, kColumn };

struct RocoftOptions {
  std::size_t rank = 1;
  Axis axis = Axis::kRow;
  std::vector<std::string> targets;  // empty: every W_q/W_k/W_v/W_o/W_ff1/W_ff2
  /// Explicit per-target indices; targets absent here use {0..rank-1}.
  std::map<std::string, std::vector<std::size_t>> indices;
  bool train_bias = false;
};

/// Marks `rank` rows (or columns) of every target trainable in place.
inline TrainablePlan apply_rocoft(const ModelConfig& config, const RocoftOptions& opts) {
  const ModelLayout layout = ModelLayout::from_config(config);
  PlanMethod method = opts.axis == Axis::kRow ? PlanMethod::kRocoftRow : PlanMethod::kRocoftColumn;
  if (!opts.indices.empty()) method = PlanMethod::kRocoftIndices;
  TrainablePlan plan = detail::frozen_plan(layout, method);
  const auto targets = detail::resolve_targets(layout, &config, opts.targets);
  for (const auto& [name, idx] : opts.indices) {
    if (std::find(targets.begin(), targets.end(), name) == targets.end()) {
      throw NameError("indices given for non-target '" + name + "'");
    }
  }
  for (const auto& name : targets) {
    const Shape& shape = layout.shape_of(name);
    const std::size_t axis_len = opts.axis == Axis::kRow ? shape[0] : shape[1];
    if (opts.rank > axis_len) {
      throw RangeError("rank " + std::to_string(opts.rank) + " exceeds axis length " + std::to_string(axis_len) +
                       " of '" + name + "'");
    }
    std::vector<std::size_t> idx;
    if (auto it = opts.indices.find(name); it != opts.indices.end()) {
      idx = it->second;
      if (idx.size() != opts.rank) {
        throw RangeError("'" + name + "': " + std::to_string(idx.size()) + " explicit indices for rank " +
                         std::to_string(opts.rank));
      }
    } else {
      for (std::size_t i = 0; i < opts.rank; ++i) idx.push_back(i);
    }
    plan.masks[name] = opts.axis == Axis::kRow ? Mask::rows(shape, std::move(idx)) : Mask::cols(shape, std::move(idx));
    if (opts.train_bias) plan.unfreeze(bias_for(name));
  }
  return plan;
}

/// Each target scalar trainable independently with probability p.
inline TrainablePlan apply_random_entry_mask(const ModelConfig& config, double p,
                                             const std::vector<std::string>& targets, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw RangeError("random-entry probability must lie in [0, 1]");
  const ModelLayout layout = ModelLayout::from_config(config);
  TrainablePlan plan = detail::frozen_plan(layout, PlanMethod::kRandomEntry);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& name : detail::resolve_targets(layout, &config, targets)) {
    const Shape& shape = layout.shape_of(name);
    std::vector<std::uint8_t> bits(shape_numel(shape));
    for (auto& b : bits) b = unif(rng) < p ? 1 : 0;
    plan.masks[name] = Mask::dense(shape, std::move(bits));
  }
  return plan;
}

/// Frozen base weights plus W0 + alpha * B A adapters; B starts at zero.
inline TrainablePlan apply_lora(const Model& model, std::size_t rank, double alpha,
                                const std::vector<std::string>& targets, std::uint64_t seed) {
  if (rank == 0) throw RangeError("LoRA rank must be >= 1");
  const ModelLayout layout = model.layout();
  TrainablePlan plan = detail::frozen_plan(layout, PlanMethod::kLora);
  std::mt19937_64 rng(seed);
  for (const auto& name : detail::resolve_targets(layout, &model.config(), targets)) {
    const Shape& shape = layout.shape_of(name);
    const std::size_t out = shape[0], in = shape[1];
    if (rank >= std::min(out, in)) {
      plan.warnings.push_back("LoRA rank " + std::to_string(rank) + " on '" + name +
                              "' is not below min(d, k) = " + std::to_string(std::min(out, in)));
    }
    LoraAdapter a;
    a.target = name;
    a.A = Tensor::randn({rank, in}, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    a.B = Tensor({out, rank});
    a.alpha = alpha;
    plan.adapters.lora.push_back(std::move(a));
  }
  return plan;
}

/// Only the linear-layer bias vectors (b_*) are trainable.
inline TrainablePlan apply_bitfit(const ModelConfig& config) {
  const ModelLayout layout = ModelLayout::from_config(config);
  TrainablePlan plan = detail::frozen_plan(layout, PlanMethod::kBitfit);
  bool any = false;
  for (const auto& [name, shape] : layout.entries) {
    if (is_bias_param(name)) {
      plan.masks[name] = Mask::all(shape);
      any = true;
    }
  }
  if (!any) throw ContractError("bitfit: model has no bias parameters");
  return plan;
}

/// Ones-initialized key/value/feed-forward scaling vectors per layer.
inline TrainablePlan apply_ia3(const ModelConfig& config) {
  const ModelLayout layout = ModelLayout::from_config(config);
  TrainablePlan plan = detail::frozen_plan(layout, PlanMethod::kIa3);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    plan.adapters.ia3.push_back(
        {Tensor({config.d_model}, 1.0), Tensor({config.d_model}, 1.0), Tensor({config.d_ff}, 1.0)});
  }
  return plan;
}

inline TrainablePlan apply_full(const ModelConfig& config) {
  const ModelLayout layout = ModelLayout::from_config(config);
  TrainablePlan plan = detail::frozen_plan(layout, PlanMethod::kFull);
  for (auto& [name, m] : plan.masks) m = Mask::all(m.shape());
  return plan;
}

/// Folds adapters into a plain model (LoRA: W += alpha B A; IA3 scales the
/// rows of W_k/W_v and their biases and the columns of W_ff2).
inline Model merge_adapters(const Model& model, const AdapterSet& adapters) {
  Model out = model;
  for (const auto& a : adapters.lora) {
    Tensor delta = kernels::matmul(a.B, a.A);
    Tensor& w = out.at(a.target);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += a.alpha * delta[i];
  }
  for (std::size_t l = 0; l < adapters.ia3.size(); ++l) {
    const IA3Vectors& v = adapters.ia3[l];
    auto scale_rows = [&](const std::string& w_name, const Tensor& s) {
      Tensor& w = out.at(w_name);
      Tensor& b = out.at(bias_for(w_name));
      for (std::size_t i = 0; i < w.dim(0); ++i) {
        for (std::size_t j = 0; j < w.dim(1); ++j) w(i, j) *= s[i];
        b[i] *= s[i];
      }
    };
    scale_rows(layer_param(l, "W_k"), v.l_k);
    scale_rows(layer_param(l, "W_v"), v.l_v);
    Tensor& w2 = out.at(layer_param(l, "W_ff2"));
    for (std::size_t i = 0; i < w2.dim(0); ++i)
      for (std::size_t j = 0; j < w2.dim(1); ++j) w2(i, j) *= v.l_ff[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form per-layer budgets for a single d x d weight.

enum class CountMethod { kFull, kIa3, kPrompt, kPrefix, kLora, kLoraFa, kAdaLora, kLoha, kBitfit, kRocoftRow, kRocoftColumn };

struct CountDims {
  std::optional<std::uint64_t> d, r, l_p, L;
};

inline CountMethod parse_count_method(const std::string& s) {
  static const std::map<std::string, CountMethod> names = {
      {"full", CountMethod::kFull},         {"ft", CountMethod::kFull},
      {"ia3", CountMethod::kIa3},           {"prompt", CountMethod::kPrompt},
      {"prefix", CountMethod::kPrefix},     {"lora", CountMethod::kLora},
      {"lora-fa", CountMethod::kLoraFa},    {"adalora", CountMethod::kAdaLora},
      {"loha", CountMethod::kLoha},         {"bitfit", CountMethod::kBitfit},
      {"rocoft-row", CountMethod::kRocoftRow}, {"rocoft-column", CountMethod::kRocoftColumn}};
  auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown method '" + s + "'");
  return it->second;
}

inline ParamBudget count_params(CountMethod method, const CountDims& dims) {
  auto need = [](const std::optional<std::uint64_t>& v, const char* name) {
    if (!v || *v == 0) throw ConfigError(std::string("count_params: missing dimension ") + name);
    return *v;
  };
  switch (method) {
    case CountMethod::kFull: {
      const auto d = need(dims.d, "d");
      return {d * d, 0};
    }
    case CountMethod::kIa3: {
      const auto d = need(dims.d, "d");
      return {3 * d, 3 * d};
    }
    case CountMethod::kPrompt: {
      const auto v = need(dims.l_p, "l_p") * need(dims.d, "d");
      return {v, v};
    }
    case CountMethod::kPrefix: {
      const auto v = need(dims.L, "L") * need(dims.l_p, "l_p") * need(dims.d, "d");
      return {v, v};
    }
    case CountMethod::kLora: {
      const auto v = 2 * need(dims.d, "d") * need(dims.r, "r");
      return {v, v};
    }
    case CountMethod::kLoraFa: {
      const auto dr = need(dims.d, "d") * need(dims.r, "r");
      return {dr, 2 * dr};
    }
    case CountMethod::kAdaLora: {
      const auto r = need(dims.r, "r");
      const auto v = 2 * need(dims.d, "d") * r + r * r;
      return {v, v};
    }
    case CountMethod::kLoha: {
      const auto v = 4 * need(dims.d, "d") * need(dims.r, "r");
      return {v, v};
    }
    case CountMethod::kBitfit:
      return {need(dims.d, "d"), 0};
    case CountMethod::kRocoftRow:
    case CountMethod::kRocoftColumn:
      return {need(dims.r, "r") * need(dims.d, "d"), 0};
  }
  throw ConfigError("count_params: unhandled method");
}

/// Report of a plan: method, per-parameter trainable counts, TTPs and APs.
inline nlohmann::json plan_summary(const TrainablePlan& plan, bool include_head = false) {
  nlohmann::json j;
  j["method"] = plan_method_name(plan.method);
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, m] : plan.masks)
    if (m.any()) per[name] = m.count();
  plan.adapters.for_each([&](const std::string& n, const Tensor& t) { per[n] = t.size(); });
  j["trainable"] = per;
  const ParamBudget b = plan.budget(include_head);
  j["ttps"] = b.ttps;
  j["aps"] = b.aps;
  j["include_head"] = include_head;
  if (!plan.warnings.empty()) j["warnings"] = plan.warnings;
  return j;
}

}  // namespace rocoft
