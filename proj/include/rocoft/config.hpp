// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rocoft/data.hpp"
#include "rocoft/selection.hpp"

// Experiment configuration as a JSON tree. Every key is optional; unknown
// keys are rejected with their full path.

namespace rocoft {

enum class MethodName { kFull, kRocoft, kRandomEntry, kLora, kBitfit, kIa3 };

inline MethodName parse_method_name(const std::string& s) {
  if (s == "full") return MethodName::kFull;
  if (s == "rocoft") return MethodName::kRocoft;
  if (s == "random-entry") return MethodName::kRandomEntry;
  if (s == "lora") return MethodName::kLora;
  if (s == "bitfit") return MethodName::kBitfit;
  if (s == "ia3") return MethodName::kIa3;
  throw ConfigError("unknown method '" + s + "'");
}

inline const char* method_name_str(MethodName m) {
  switch (m) {
    case MethodName::kFull: return "full";
    case MethodName::kRocoft: return "rocoft";
    case MethodName::kRandomEntry: return "random-entry";
    case MethodName::kLora: return "lora";
    case MethodName::kBitfit: return "bitfit";
    case MethodName::kIa3: return "ia3";
  }
  return "?";
}

struct MethodConfig {
  MethodName name = MethodName::kRocoft;
  std::size_t rank = 1;
  Axis axis = Axis::kRow;
  std::optional<Strategy> strategy;  // unset: leading indices
  double p = 0.1;
  double alpha = 1.0;
  double lambda = 1e-3;
  std::vector<std::string> targets;
  bool train_bias = false;
  bool train_head = false;
  bool budget_includes_head = false;
};

struct DatasetConfig {
  std::optional<SynthSpec> synth = SynthSpec{7, 400, 40, 12};
  std::string train_path;
  std::string test_path;
  std::size_t test_count = 120;  // held out from a single source when test_path is empty
  std::uint64_t split_seed = 0;
  std::size_t calibration = 32;  // selection calibration batch size
};

struct PretrainConfig {
  std::size_t steps = 0;
  double lr = 1e-3;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  std::optional<SynthSpec> synth;  // unset: the training split of the dataset
};

struct TrainingConfig {
  double lr = 1e-2;
  std::size_t epochs = 0;  // nonzero: steps derived from the train size
  std::size_t steps = 100;
  std::size_t batch = 16;
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  double weight_decay = 0.0;
  std::size_t warmup_steps = 0;
  Schedule scheduler = Schedule::kCosine;
  std::size_t grad_accum = 1;
  PoolingMode pooling = PoolingMode::kFirstToken;
};

struct NtkConfig {
  std::size_t k = 16;
  std::vector<std::string> subsets = {"full", "row1", "column1", "lora1"};
  std::size_t eval_count = 200;
  bool normalize = true;  // divide each kernel by its mean train diagonal before fitting
  double tol = 1e-6;      // 1e-8 sits at the float64 resolution floor of the objective here
  std::size_t max_iter = 10000;
  ScalarMode scalar = ScalarMode::kLogitDifference;
  std::size_t class_index = 0;
};

enum class SweepDimension { kStrategy, kRank, kRandomP };

struct SweepConfig {
  SweepDimension dimension = SweepDimension::kStrategy;
  std::vector<std::string> strategies = {"max", "min", "mixed", "random"};
  std::vector<std::size_t> ranks = {1, 2, 4, 8};
  std::vector<double> ps = {0.01, 0.05, 0.1};
};

struct ExperimentConfig {
  ModelConfig model{43, 16, 32, 4, 2, 64, 2, 1};
  MethodConfig method;
  DatasetConfig dataset;
  PretrainConfig pretrain;
  TrainingConfig training;
  NtkConfig ntk;
  SweepConfig sweep;
  std::vector<std::uint64_t> seeds = {42, 43, 44, 45, 46};
  std::string outputs = "out";
  std::string base_checkpoint;

  void validate() const;
};

namespace detail {

/// Walks one JSON object, remembering which keys were read.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  /// Enum-valued key read as a string and mapped by `parse`.
  template <typename T, typename Fn>
  void get_enum(const char* key, T& dst, Fn&& parse) {
    std::string s;
    get(key, s);
    if (j_.contains(key)) {
      try {
        dst = parse(s);
      } catch (const ConfigError& e) {
        throw ConfigError(where(key) + ": " + e.what());
      }
    }
  }

  std::optional<ObjectReader> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return ObjectReader(j_.at(key), where(key));
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where(k.c_str()) + ": unknown key");
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    return key ? p + "." + key : p;
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline SynthSpec read_synth(ObjectReader r) {
  SynthSpec s;
  r.get("seed", s.seed);
  r.get("n", s.n);
  r.get("vocab_size", s.vocab_size);
  r.get("seq_len", s.seq_len);
  r.finish();
  return s;
}

inline nlohmann::json synth_json(const SynthSpec& s) {
  return {{"seed", s.seed}, {"n", s.n}, {"vocab_size", s.vocab_size}, {"seq_len", s.seq_len}};
}

inline Axis parse_axis(const std::string& s) {
  if (s == "row") return Axis::kRow;
  if (s == "column") return Axis::kColumn;
  throw ConfigError("axis must be 'row' or 'column', got '" + s + "'");
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adamw") return OptimizerKind::kAdamW;
  throw ConfigError("optimizer must be 'sgd' or 'adamw', got '" + s + "'");
}

inline Schedule parse_schedule(const std::string& s) {
  if (s == "constant") return Schedule::kConstant;
  if (s == "cosine") return Schedule::kCosine;
  throw ConfigError("scheduler must be 'constant' or 'cosine', got '" + s + "'");
}

inline PoolingMode parse_pooling(const std::string& s) {
  if (s == "first") return PoolingMode::kFirstToken;
  if (s == "mean") return PoolingMode::kMeanPool;
  throw ConfigError("pooling must be 'first' or 'mean', got '" + s + "'");
}

inline ScalarMode parse_scalar(const std::string& s) {
  if (s == "logit-difference") return ScalarMode::kLogitDifference;
  if (s == "class-logit") return ScalarMode::kClassLogit;
  throw ConfigError("scalar must be 'logit-difference' or 'class-logit', got '" + s + "'");
}

inline SweepDimension parse_dimension(const std::string& s) {
  if (s == "strategy") return SweepDimension::kStrategy;
  if (s == "rank") return SweepDimension::kRank;
  if (s == "random_p") return SweepDimension::kRandomP;
  throw ConfigError("sweep dimension must be strategy, rank or random_p, got '" + s + "'");
}

inline const char* dimension_name(SweepDimension d) {
  switch (d) {
    case SweepDimension::kStrategy: return "strategy";
    case SweepDimension::kRank: return "rank";
    case SweepDimension::kRandomP: return "random_p";
  }
  return "?";
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::ObjectReader;
  ExperimentConfig c;
  ObjectReader root(j, "");
  if (auto r = root.child("model")) {
    ModelConfig& m = c.model;
    r->get("vocab_size", m.vocab_size);
    r->get("max_seq_len", m.max_seq_len);
    r->get("d_model", m.d_model);
    r->get("n_heads", m.n_heads);
    r->get("n_layers", m.n_layers);
    r->get("d_ff", m.d_ff);
    r->get("n_classes", m.n_classes);
    r->get("seed", m.seed);
    r->finish();
  }
  if (auto r = root.child("method")) {
    MethodConfig& m = c.method;
    r->get_enum("name", m.name, parse_method_name);
    r->get("rank", m.rank);
    r->get_enum("axis", m.axis, detail::parse_axis);
    std::string strategy;
    r->get("strategy", strategy);
    if (!strategy.empty() && strategy != "first") m.strategy = parse_strategy(strategy);
    r->get("p", m.p);
    r->get("alpha", m.alpha);
    r->get("lambda", m.lambda);
    r->get("targets", m.targets);
    r->get("train_bias", m.train_bias);
    r->get("train_head", m.train_head);
    r->get("budget_includes_head", m.budget_includes_head);
    r->finish();
  }
  if (auto r = root.child("dataset")) {
    DatasetConfig& d = c.dataset;
    r->get("train", d.train_path);
    r->get("test", d.test_path);
    if (auto s = r->child("synth")) d.synth = detail::read_synth(*s);
    else if (r->has("synth") || !d.train_path.empty()) d.synth.reset();
    r->get("test_count", d.test_count);
    r->get("split_seed", d.split_seed);
    r->get("calibration", d.calibration);
    r->finish();
  }
  if (auto r = root.child("pretrain")) {
    PretrainConfig& p = c.pretrain;
    r->get("steps", p.steps);
    r->get("lr", p.lr);
    r->get("batch", p.batch);
    r->get("seed", p.seed);
    if (auto s = r->child("synth")) p.synth = detail::read_synth(*s);
    r->finish();
  }
  if (auto r = root.child("training")) {
    TrainingConfig& t = c.training;
    if (r->has("epochs") && r->has("steps")) throw ConfigError("training: give either epochs or steps, not both");
    r->get("lr", t.lr);
    r->get("epochs", t.epochs);
    r->get("steps", t.steps);
    r->get("batch", t.batch);
    r->get_enum("optimizer", t.optimizer, detail::parse_optimizer);
    r->get("weight_decay", t.weight_decay);
    r->get("warmup_steps", t.warmup_steps);
    r->get_enum("scheduler", t.scheduler, detail::parse_schedule);
    r->get("grad_accum", t.grad_accum);
    r->get_enum("pooling", t.pooling, detail::parse_pooling);
    r->finish();
  }
  if (auto r = root.child("ntk")) {
    NtkConfig& n = c.ntk;
    r->get("k", n.k);
    r->get("subsets", n.subsets);
    r->get("eval_count", n.eval_count);
    r->get("normalize", n.normalize);
    r->get("tol", n.tol);
    r->get("max_iter", n.max_iter);
    r->get_enum("scalar", n.scalar, detail::parse_scalar);
    r->get("class_index", n.class_index);
    r->finish();
  }
  if (auto r = root.child("sweep")) {
    SweepConfig& s = c.sweep;
    r->get_enum("dimension", s.dimension, detail::parse_dimension);
    r->get("strategies", s.strategies);
    r->get("ranks", s.ranks);
    r->get("ps", s.ps);
    r->finish();
  }
  root.get("seeds", c.seeds);
  root.get("outputs", c.outputs);
  root.get("base_checkpoint", c.base_checkpoint);
  root.finish();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_config(j);
}

inline void ExperimentConfig::validate() const {
  model.validate();
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(training.lr, "training.lr");
  positive(pretrain.lr, "pretrain.lr");
  positive(method.lambda, "method.lambda");
  positive(method.alpha, "method.alpha");
  positive(ntk.tol, "ntk.tol");
  if (training.batch == 0 || training.grad_accum == 0 || pretrain.batch == 0) {
    throw ConfigError("batch sizes and grad_accum must be >= 1");
  }
  if (!(training.weight_decay >= 0.0)) throw ConfigError("training.weight_decay must be >= 0");
  if (!(method.p >= 0.0 && method.p <= 1.0)) throw ConfigError("method.p must lie in [0, 1]");
  if (method.name == MethodName::kLora && method.rank == 0) throw ConfigError("method.rank must be >= 1 for lora");
  if (method.name == MethodName::kRocoft) {
    const ModelLayout layout = ModelLayout::from_config(model);
    const auto targets = method.targets.empty() ? default_targets(model) : method.targets;
    for (const auto& t : targets) {
      if (!layout.contains(t)) throw ConfigError("method.targets: unknown parameter '" + t + "'");
      const Shape& s = layout.shape_of(t);
      const std::size_t len = method.axis == Axis::kRow ? s[0] : s[1];
      if (method.rank > len) {
        throw ConfigError("method.rank " + std::to_string(method.rank) + " exceeds the " +
                          (method.axis == Axis::kRow ? "row" : "column") + " count of '" + t + "'");
      }
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (ntk.k == 0) throw ConfigError("ntk.k must be >= 1");
  if (ntk.subsets.empty()) throw ConfigError("ntk.subsets must not be empty");
  if (!dataset.synth && dataset.train_path.empty()) throw ConfigError("dataset: give synth or a train path");
  if (dataset.calibration == 0) throw ConfigError("dataset.calibration must be >= 1");
  if (ntk.scalar == ScalarMode::kLogitDifference && model.n_classes != 2) {
    throw ConfigError("ntk.scalar logit-difference needs n_classes = 2");
  }
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  const ModelConfig& m = c.model;
  j["model"] = {{"vocab_size", m.vocab_size}, {"max_seq_len", m.max_seq_len}, {"d_model", m.d_model},
                {"n_heads", m.n_heads},       {"n_layers", m.n_layers},       {"d_ff", m.d_ff},
                {"n_classes", m.n_classes},   {"seed", m.seed}};
  const MethodConfig& me = c.method;
  j["method"] = {{"name", method_name_str(me.name)},
                 {"rank", me.rank},
                 {"axis", me.axis == Axis::kRow ? "row" : "column"},
                 {"strategy", me.strategy ? strategy_name(*me.strategy) : "first"},
                 {"p", me.p},
                 {"alpha", me.alpha},
                 {"lambda", me.lambda},
                 {"targets", me.targets},
                 {"train_bias", me.train_bias},
                 {"train_head", me.train_head},
                 {"budget_includes_head", me.budget_includes_head}};
  json d = {{"train", c.dataset.train_path},
            {"test", c.dataset.test_path},
            {"test_count", c.dataset.test_count},
            {"split_seed", c.dataset.split_seed},
            {"calibration", c.dataset.calibration}};
  d["synth"] = c.dataset.synth ? detail::synth_json(*c.dataset.synth) : json(nullptr);
  j["dataset"] = d;
  json p = {{"steps", c.pretrain.steps}, {"lr", c.pretrain.lr}, {"batch", c.pretrain.batch}, {"seed", c.pretrain.seed}};
  p["synth"] = c.pretrain.synth ? detail::synth_json(*c.pretrain.synth) : json(nullptr);
  j["pretrain"] = p;
  const TrainingConfig& t = c.training;
  j["training"] = {{"lr", t.lr},
                   {"batch", t.batch},
                   {"optimizer", t.optimizer == OptimizerKind::kSgd ? "sgd" : "adamw"},
                   {"weight_decay", t.weight_decay},
                   {"warmup_steps", t.warmup_steps},
                   {"scheduler", t.scheduler == Schedule::kCosine ? "cosine" : "constant"},
                   {"grad_accum", t.grad_accum},
                   {"pooling", t.pooling == PoolingMode::kFirstToken ? "first" : "mean"}};
  if (t.epochs > 0) j["training"]["epochs"] = t.epochs;
  else j["training"]["steps"] = t.steps;
  const NtkConfig& n = c.ntk;
  j["ntk"] = {{"k", n.k},
              {"subsets", n.subsets},
              {"eval_count", n.eval_count},
              {"normalize", n.normalize},
              {"tol", n.tol},
              {"max_iter", n.max_iter},
              {"scalar", n.scalar == ScalarMode::kLogitDifference ? "logit-difference" : "class-logit"},
              {"class_index", n.class_index}};
  j["sweep"] = {{"dimension", detail::dimension_name(c.sweep.dimension)},
                {"strategies", c.sweep.strategies},
                {"ranks", c.sweep.ranks},
                {"ps", c.sweep.ps}};
  j["seeds"] = c.seeds;
  j["outputs"] = c.outputs;
  j["base_checkpoint"] = c.base_checkpoint;
  return j;
}

}  // namespace rocoft
