// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rocoft/autodiff.hpp"

namespace rocoft {

using TokenSeq = std::vector<std::size_t>;
using TokenBatch = std::vector<TokenSeq>;

struct ModelConfig {
  std::size_t vocab_size = 100;
  std::size_t max_seq_len = 16;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 64;
  std::size_t n_classes = 2;
  std::uint64_t seed = 0;

  std::size_t head_dim() const { return d_model / n_heads; }

  void validate() const {
    auto positive = [](std::size_t v, const char* field) {
      if (v == 0) throw ConfigError(std::string("model config: ") + field + " must be >= 1");
    };
    positive(vocab_size, "vocab_size");
    positive(max_seq_len, "max_seq_len");
    positive(d_model, "d_model");
    positive(n_heads, "n_heads");
    positive(n_layers, "n_layers");
    positive(d_ff, "d_ff");
    positive(n_classes, "n_classes");
    if (d_model % n_heads != 0) {
      throw ConfigError("model config: n_heads (" + std::to_string(n_heads) +
                        ") must divide d_model (" + std::to_string(d_model) + ")");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Weight matrices addressed by RoCoFT, in per-layer declaration order.
inline const std::vector<std::string>& matrix_roles() {
  static const std::vector<std::string> roles = {"W_q", "W_k", "W_v", "W_o", "W_ff1", "W_ff2"};
  return roles;
}

inline std::string layer_param(std::size_t layer, const std::string& role) {
  return "layer" + std::to_string(layer) + "." + role;
}

/// Bias paired with a weight matrix name ("layer0.W_q" -> "layer0.b_q").
inline std::string bias_for(const std::string& weight_name) {
  const auto dot = weight_name.rfind('.');
  std::string role = weight_name.substr(dot + 1);
  if (role.rfind("W_", 0) != 0) throw NameError("no bias associated with '" + weight_name + "'");
  return weight_name.substr(0, dot + 1) + "b_" + role.substr(2);
}

inline bool is_head_param(const std::string& name) { return name.rfind("head.", 0) == 0; }

inline bool is_bias_param(const std::string& name) {
  const auto dot = name.rfind('.');
  return name.compare(dot + 1, 2, "b_") == 0;
}

/// Ordered (name, shape) list of every parameter implied by a config.
/// Available without allocating weights, so plans can be built for
/// full-size geometries.
struct ModelLayout {
  std::vector<std::pair<std::string, Shape>> entries;

  static ModelLayout from_config(const ModelConfig& c) {
    c.validate();
    ModelLayout out;
    auto add = [&](std::string name, Shape s) { out.entries.emplace_back(std::move(name), std::move(s)); };
    const std::size_t d = c.d_model;
    add("embed.tok", {c.vocab_size, d});
    add("embed.pos", {c.max_seq_len, d});
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      for (const char* r : {"q", "k", "v", "o"}) {
        add(layer_param(l, std::string("W_") + r), {d, d});
        add(layer_param(l, std::string("b_") + r), {d});
      }
      add(layer_param(l, "ln1.gamma"), {d});
      add(layer_param(l, "ln1.beta"), {d});
      add(layer_param(l, "W_ff1"), {c.d_ff, d});
      add(layer_param(l, "b_ff1"), {c.d_ff});
      add(layer_param(l, "W_ff2"), {d, c.d_ff});
      add(layer_param(l, "b_ff2"), {d});
      add(layer_param(l, "ln2.gamma"), {d});
      add(layer_param(l, "ln2.beta"), {d});
    }
    add("head.W_cls", {c.n_classes, d});
    add("head.b_cls", {c.n_classes});
    return out;
  }

  const Shape& shape_of(const std::string& name) const {
    for (const auto& [n, s] : entries)
      if (n == name) return s;
    throw NameError("unknown parameter '" + name + "'");
  }

  bool contains(const std::string& name) const {
    for (const auto& e : entries)
      if (e.first == name) return true;
    return false;
  }

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& e : entries) t += shape_numel(e.second);
    return t;
  }
};

/// All RoCoFT target matrices (W_q, W_k, W_v, W_o, W_ff1, W_ff2) of every layer.
inline std::vector<std::string> default_targets(const ModelConfig& c) {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < c.n_layers; ++l)
    for (const auto& role : matrix_roles()) out.push_back(layer_param(l, role));
  return out;
}

/// Named parameters of the encoder classifier. Weight matrices are stored
/// out_features x in_features.
class Model {
 public:
  Model() = default;

  Model(ModelConfig config, std::vector<std::pair<std::string, Tensor>> params)
      : config_(config), params_(std::move(params)) {
    const ModelLayout layout = ModelLayout::from_config(config_);
    if (layout.entries.size() != params_.size()) throw ConfigError("model: parameter count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].first != layout.entries[i].first ||
          params_[i].second.shape() != layout.entries[i].second) {
        throw DimensionError("model: parameter '" + params_[i].first + "' has shape " +
                             shape_str(params_[i].second.shape()) + ", expected " +
                             layout.entries[i].first + " " + shape_str(layout.entries[i].second));
      }
      index_.emplace(params_[i].first, i);
    }
  }

  const ModelConfig& config() const noexcept { return config_; }
  ModelLayout layout() const { return ModelLayout::from_config(config_); }

  const std::vector<std::pair<std::string, Tensor>>& params() const noexcept { return params_; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Tensor& at(const std::string& name) const { return params_[lookup(name)].second; }
  Tensor& at(const std::string& name) { return params_[lookup(name)].second; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : params_) out.push_back(p.first);
    return out;
  }

  std::size_t total_params() const {
    std::size_t t = 0;
    for (const auto& p : params_) t += p.second.size();
    return t;
  }

  friend bool operator==(const Model& a, const Model& b) {
    return a.config_ == b.config_ && a.params_ == b.params_;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw NameError("unknown parameter '" + name + "'");
    return it->second;
  }

  ModelConfig config_;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::map<std::string, std::size_t> index_;
};

inline constexpr double kInitStd = 0.02;

/// Seeded Gaussian (std 0.02) weights and embeddings, zero biases,
/// unit/zero layernorm affine.
inline Model init_model(const ModelConfig& config) {
  const ModelLayout layout = ModelLayout::from_config(config);
  std::mt19937_64 rng(config.seed);
  std::vector<std::pair<std::string, Tensor>> params;
  for (const auto& [name, shape] : layout.entries) {
    if (name.ends_with(".gamma")) {
      params.emplace_back(name, Tensor(shape, 1.0));
    } else if (shape.size() == 1) {
      params.emplace_back(name, Tensor(shape, 0.0));
    } else {
      params.emplace_back(name, Tensor::randn(shape, rng, kInitStd));
    }
  }
  return Model(config, std::move(params));
}

// ---------------------------------------------------------------------------
// Adapters consumed by the forward pass.

struct LoraAdapter {
  std::string target;
  Tensor A;  // r x in_features
  Tensor B;  // out_features x r
  double alpha = 1.0;

  std::size_t rank() const { return A.dim(0); }
  std::string a_name() const { return "lora." + target + ".A"; }
  std::string b_name() const { return "lora." + target + ".B"; }
};

struct IA3Vectors {
  Tensor l_k;   // d_model
  Tensor l_v;   // d_model
  Tensor l_ff;  // d_ff
};

inline std::string ia3_name(std::size_t layer, const char* which) {
  return "ia3.layer" + std::to_string(layer) + "." + which;
}

/// Extra trainable tensors introduced by LoRA and IA3.
struct AdapterSet {
  std::vector<LoraAdapter> lora;
  std::vector<IA3Vectors> ia3;  // empty, or one entry per layer

  bool empty() const { return lora.empty() && ia3.empty(); }

  const LoraAdapter* lora_for(const std::string& target) const {
    for (const auto& a : lora)
      if (a.target == target) return &a;
    return nullptr;
  }

  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto& a : lora) {
      fn(a.a_name(), a.A);
      fn(a.b_name(), a.B);
    }
    for (std::size_t l = 0; l < ia3.size(); ++l) {
      fn(ia3_name(l, "l_k"), ia3[l].l_k);
      fn(ia3_name(l, "l_v"), ia3[l].l_v);
      fn(ia3_name(l, "l_ff"), ia3[l].l_ff);
    }
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    const_cast<AdapterSet*>(this)->for_each(
        [&](const std::string& n, Tensor& t) { fn(n, static_cast<const Tensor&>(t)); });
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
  }
};

// ---------------------------------------------------------------------------
// Forward pass.

enum class PoolingMode { kFirstToken, kMeanPool };
enum class ScalarMode { kLogitDifference, kClassLogit };

/// How a sequence is reduced to a pooled vector and to a single real.
struct PooledOutputContract {
  PoolingMode mode = PoolingMode::kFirstToken;
  ScalarMode scalar_mode = ScalarMode::kLogitDifference;
  std::size_t class_index = 0;  // used by kClassLogit
};

/// Optional records filled during a forward pass.
struct ForwardTrace {
  std::map<std::string, Tensor> linear_inputs;  // rows appended per sequence
  std::vector<Tensor> attention;                // one T x T matrix per (sequence, layer, head)
};

struct ForwardOptions {
  const AdapterSet* adapters = nullptr;
  ForwardTrace* trace = nullptr;
  /// Weight names rebuilt as concat(trainable leading rows, frozen remainder),
  /// mirroring an in-place row module. Only the leading block is registered
  /// as a tape parameter (named "<weight>#rows").
  std::map<std::string, std::size_t> row_split;
  /// Same for leading columns ("<weight>#cols").
  std::map<std::string, std::size_t> col_split;
};

namespace detail {

inline void append_rows(std::map<std::string, Tensor>& store, const std::string& name, const Tensor& x) {
  auto it = store.find(name);
  if (it == store.end()) {
    store.emplace(name, x);
    return;
  }
  std::vector<double> data = it->second.values();
  data.insert(data.end(), x.data().begin(), x.data().end());
  it->second = Tensor({it->second.dim(0) + x.dim(0), x.dim(1)}, std::move(data));
}

class ForwardBuilder {
 public:
  ForwardBuilder(Tape& tape, const Model& model, const ForwardOptions& opts)
      : tape_(tape), model_(model), opts_(opts) {}

  Var param(const std::string& name) { return tape_.param(name, model_.at(name)); }

  Var weight(const std::string& name) {
    const Tensor& w = model_.at(name);
    Var base;
    if (auto it = opts_.row_split.find(name); it != opts_.row_split.end() && it->second > 0) {
      const std::size_t r = it->second;
      Var trainable = tape_.param(name + "#rows", row_block(w, 0, r));
      base = r < w.dim(0) ? ops::concat({trainable, tape_.constant(row_block(w, r, w.dim(0) - r))}, 0)
                          : trainable;
    } else if (auto ct = opts_.col_split.find(name); ct != opts_.col_split.end() && ct->second > 0) {
      const std::size_t r = ct->second;
      Var trainable = tape_.param(name + "#cols", col_block(w, 0, r));
      base = r < w.dim(1) ? ops::concat({trainable, tape_.constant(col_block(w, r, w.dim(1) - r))}, 1)
                          : trainable;
    } else {
      base = param(name);
    }
    if (opts_.adapters) {
      if (const LoraAdapter* a = opts_.adapters->lora_for(name)) {
        Var A = tape_.param(a->a_name(), a->A);
        Var B = tape_.param(a->b_name(), a->B);
        base = ops::add(base, ops::scale(ops::matmul(B, A), a->alpha));
      }
    }
    return base;
  }

  Var linear(Var x, const std::string& w_name) {
    if (opts_.trace) append_rows(opts_.trace->linear_inputs, w_name, x.value());
    Var y = ops::matmul(x, ops::transpose(weight(w_name)));
    return ops::add(y, param(bias_for(w_name)));
  }

  Var ia3(std::size_t layer, const char* which, Var x) {
    if (!opts_.adapters || opts_.adapters->ia3.empty()) return x;
    const IA3Vectors& v = opts_.adapters->ia3.at(layer);
    const Tensor& t = std::string(which) == "l_k" ? v.l_k : std::string(which) == "l_v" ? v.l_v : v.l_ff;
    return ops::multiply(x, tape_.param(ia3_name(layer, which), t));
  }

  /// Logits [1 x n_classes] for one sequence.
  Var sequence_logits(const TokenSeq& ids, const PooledOutputContract& contract) {
    const ModelConfig& c = model_.config();
    const std::size_t T = ids.size();
    std::vector<std::size_t> positions(T);
    for (std::size_t t = 0; t < T; ++t) positions[t] = t;
    Var h = ops::add(ops::gather(param("embed.tok"), ids), ops::gather(param("embed.pos"), positions));

    const std::size_t dh = c.head_dim();
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      Var q = linear(h, layer_param(l, "W_q"));
      Var k = ia3(l, "l_k", linear(h, layer_param(l, "W_k")));
      Var v = ia3(l, "l_v", linear(h, layer_param(l, "W_v")));
      std::vector<Var> heads;
      for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
        Var qh = ops::slice(q, 1, hd * dh, dh);
        Var kh = ops::slice(k, 1, hd * dh, dh);
        Var vh = ops::slice(v, 1, hd * dh, dh);
        Var att = ops::softmax(ops::scale(ops::matmul(qh, ops::transpose(kh)), inv_sqrt));
        if (opts_.trace) opts_.trace->attention.push_back(att.value());
        heads.push_back(ops::matmul(att, vh));
      }
      Var merged = heads.size() == 1 ? heads[0] : ops::concat(heads, 1);
      Var attn_out = linear(merged, layer_param(l, "W_o"));
      h = ops::layernorm(ops::add(h, attn_out), param(layer_param(l, "ln1.gamma")),
                         param(layer_param(l, "ln1.beta")));
      Var ff = ia3(l, "l_ff", ops::gelu(linear(h, layer_param(l, "W_ff1"))));
      Var ff_out = linear(ff, layer_param(l, "W_ff2"));
      h = ops::layernorm(ops::add(h, ff_out), param(layer_param(l, "ln2.gamma")),
                         param(layer_param(l, "ln2.beta")));
    }

    Var pooled;
    if (contract.mode == PoolingMode::kFirstToken) {
      pooled = ops::slice(h, 0, 0, 1);
    } else {
      pooled = ops::matmul(tape_.constant(Tensor({1, T}, 1.0 / static_cast<double>(T))), h);
    }
    return linear(pooled, "head.W_cls");
  }

 private:
  static Tensor row_block(const Tensor& w, std::size_t start, std::size_t len) {
    std::vector<double> data(w.data().begin() + static_cast<std::ptrdiff_t>(start * w.dim(1)),
                             w.data().begin() + static_cast<std::ptrdiff_t>((start + len) * w.dim(1)));
    return Tensor({len, w.dim(1)}, std::move(data));
  }

  static Tensor col_block(const Tensor& w, std::size_t start, std::size_t len) {
    Tensor out({w.dim(0), len});
    for (std::size_t i = 0; i < w.dim(0); ++i)
      for (std::size_t j = 0; j < len; ++j) out(i, j) = w(i, start + j);
    return out;
  }

  Tape& tape_;
  const Model& model_;
  const ForwardOptions& opts_;
};

inline void validate_batch(const Model& model, const TokenBatch& batch) {
  const ModelConfig& c = model.config();
  if (batch.empty()) throw InputError("forward: empty batch");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].empty()) throw InputError("forward: empty sequence at batch row " + std::to_string(b));
    if (batch[b].size() > c.max_seq_len) {
      throw InputError("forward: sequence length " + std::to_string(batch[b].size()) +
                       " at batch row " + std::to_string(b) + " exceeds max_seq_len " +
                       std::to_string(c.max_seq_len));
    }
    for (std::size_t t = 0; t < batch[b].size(); ++t) {
      if (batch[b][t] >= c.vocab_size) {
        throw InputError("forward: token id " + std::to_string(batch[b][t]) + " at (row " +
                         std::to_string(b) + ", position " + std::to_string(t) +
                         ") is outside vocabulary of size " + std::to_string(c.vocab_size));
      }
    }
  }
}

}  // namespace detail

/// Records the logits [B x n_classes] of a batch on `tape`.
inline Var forward_on_tape(Tape& tape, const Model& model, const TokenBatch& batch,
                           const PooledOutputContract& contract, const ForwardOptions& opts = {}) {
  detail::validate_batch(model, batch);
  detail::ForwardBuilder builder(tape, model, opts);
  std::vector<Var> rows;
  rows.reserve(batch.size());
  for (const auto& seq : batch) rows.push_back(builder.sequence_logits(seq, contract));
  return rows.size() == 1 ? rows[0] : ops::concat(rows, 0);
}

inline Tensor forward(const Model& model, const TokenBatch& batch,
                      const PooledOutputContract& contract = {}, const ForwardOptions& opts = {}) {
  Tape tape;
  return forward_on_tape(tape, model, batch, contract, opts).value();
}

/// Reduces a [1 x n_classes] logit row to the scalar selected by the contract.
inline Var scalar_from_logits(Var logits, const PooledOutputContract& contract, std::size_t n_classes) {
  if (contract.scalar_mode == ScalarMode::kLogitDifference) {
    if (n_classes != 2) {
      throw ContractError("scalar_output: logit-difference requires 2 classes, model has " +
                          std::to_string(n_classes));
    }
    return ops::subtract(ops::slice(logits, 1, 1, 1), ops::slice(logits, 1, 0, 1));
  }
  if (contract.class_index >= n_classes) {
    throw ContractError("scalar_output: class " + std::to_string(contract.class_index) +
                        " out of range for " + std::to_string(n_classes) + " classes");
  }
  return ops::slice(logits, 1, contract.class_index, 1);
}

inline Var scalar_output_on_tape(Tape& tape, const Model& model, const TokenSeq& x,
                                 const PooledOutputContract& contract, const ForwardOptions& opts = {}) {
  const std::size_t nc = model.config().n_classes;
  if (contract.scalar_mode == ScalarMode::kClassLogit && contract.class_index >= nc) {
    throw ContractError("scalar_output: class " + std::to_string(contract.class_index) +
                        " out of range for " + std::to_string(nc) + " classes");
  }
  if (contract.scalar_mode == ScalarMode::kLogitDifference && nc != 2) {
    throw ContractError("scalar_output: logit-difference requires 2 classes");
  }
  return scalar_from_logits(forward_on_tape(tape, model, {x}, contract, opts), contract, nc);
}

/// f_theta(x): the real-valued network output used for kernels.
inline double scalar_output(const Model& model, const TokenSeq& x, const PooledOutputContract& contract = {},
                            const ForwardOptions& opts = {}) {
  Tape tape;
  return scalar_output_on_tape(tape, model, x, contract, opts).value().item();
}

inline std::vector<std::size_t> argmax_rows(const Tensor& logits) {
  std::vector<std::size_t> out(logits.dim(0));
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.dim(1); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: text header, then little-endian float64 payloads in
// declaration order.

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_le_doubles(std::ostream& os, std::span<const double> values) {
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char buf[8];
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(bits >> (8 * b));
    os.write(reinterpret_cast<const char*>(buf), 8);
  }
}

inline void read_le_doubles(std::istream& is, std::span<double> values) {
  for (double& v : values) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ParseError("checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  const ModelConfig& c = model.config();
  os << "rocoft-checkpoint " << kCheckpointVersion << '\n'
     << "vocab_size " << c.vocab_size << '\n'
     << "max_seq_len " << c.max_seq_len << '\n'
     << "d_model " << c.d_model << '\n'
     << "n_heads " << c.n_heads << '\n'
     << "n_layers " << c.n_layers << '\n'
     << "d_ff " << c.d_ff << '\n'
     << "n_classes " << c.n_classes << '\n'
     << "seed " << c.seed << '\n'
     << "params " << model.params().size() << '\n';
  for (const auto& [name, t] : model.params()) {
    os << name << ' ' << t.rank();
    for (std::size_t d : t.shape()) os << ' ' << d;
    os << '\n';
  }
  os << "end\n";
  for (const auto& p : model.params()) detail::write_le_doubles(os, p.second.data());
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  auto header_line = [&]() {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("checkpoint: truncated header");
    return line;
  };
  {
    std::istringstream ls(header_line());
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "rocoft-checkpoint") throw ParseError("checkpoint: bad magic in " + path);
    if (version != kCheckpointVersion) {
      throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
    }
  }
  ModelConfig c;
  auto field = [&](const char* key, auto& dst) {
    std::istringstream ls(header_line());
    std::string k;
    ls >> k >> dst;
    if (k != key || ls.fail()) throw ParseError(std::string("checkpoint: expected field ") + key);
  };
  field("vocab_size", c.vocab_size);
  field("max_seq_len", c.max_seq_len);
  field("d_model", c.d_model);
  field("n_heads", c.n_heads);
  field("n_layers", c.n_layers);
  field("d_ff", c.d_ff);
  field("n_classes", c.n_classes);
  field("seed", c.seed);
  std::size_t count = 0;
  field("params", count);
  const ModelLayout layout = ModelLayout::from_config(c);
  if (count != layout.entries.size()) {
    throw ParseError("checkpoint: " + std::to_string(count) + " parameters, config implies " +
                     std::to_string(layout.entries.size()));
  }
  std::vector<std::pair<std::string, Shape>> declared;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream ls(header_line());
    std::string name;
    std::size_t rank = 0;
    ls >> name >> rank;
    Shape s(rank);
    for (auto& d : s) ls >> d;
    if (ls.fail()) throw ParseError("checkpoint: malformed parameter line " + std::to_string(i));
    if (name != layout.entries[i].first || s != layout.entries[i].second) {
      throw DimensionError("checkpoint: parameter '" + name + "' " + shape_str(s) + " does not match expected '" +
                           layout.entries[i].first + "' " + shape_str(layout.entries[i].second));
    }
    declared.emplace_back(std::move(name), std::move(s));
  }
  if (header_line() != "end") throw ParseError("checkpoint: missing header terminator");
  std::vector<std::pair<std::string, Tensor>> params;
  for (auto& [name, shape] : declared) {
    Tensor t(shape);
    detail::read_le_doubles(is, t.data());
    params.emplace_back(name, std::move(t));
  }
  return Model(c, std::move(params));
}

}  // namespace rocoft
