// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rocoft/config.hpp"
#include "rocoft/klr.hpp"
#include "rocoft/metrics.hpp"

// Experiment orchestration: data preparation, fine-tuning runs, NTK/KLR
// experiments, ablation sweeps and report emission.

namespace rocoft {

using nlohmann::json;

/// Report body plus wall-clock. Only `body` is covered by the determinism
/// contract; timing is emitted next to it.
struct RunReport {
  json body;
  double wall_clock_s = 0.0;

  json to_json() const {
    json j = body;
    j["wall_clock_s"] = wall_clock_s;
    return j;
  }
};

struct Summary {
  double mean = 0.0, std = 0.0, stderr_ = 0.0;
};

/// Mean, sample standard deviation (n - 1) and standard error of the mean.
inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
    s.stderr_ = s.std / std::sqrt(n);
  }
  return s;
}

inline json summary_json(const std::vector<double>& v) {
  const Summary s = summarize(v);
  return {{"mean", s.mean}, {"std", s.std}, {"stderr", s.stderr_}, {"n", v.size()}};
}

// ---------------------------------------------------------------------------
// Data.

struct DataBundle {
  Vocabulary vocab;
  Dataset train_ds, test_ds;
  LabeledTokens train, test;
  std::size_t n_classes = 0;
};

inline DataBundle prepare_data(const ExperimentConfig& c) {
  DataBundle b;
  Dataset source;
  if (c.dataset.synth) {
    const SynthSpec& s = *c.dataset.synth;
    source = synth_task(s.seed, s.n, s.vocab_size, s.seq_len);
    b.vocab = Vocabulary::from_tokens(synth_words(s.vocab_size));
  } else {
    source = load_tsv(c.dataset.train_path, Split::kTrain);
    b.vocab = Vocabulary::build(source);
  }
  if (!c.dataset.test_path.empty()) {
    b.train_ds = std::move(source);
    b.test_ds = load_tsv(c.dataset.test_path, Split::kTest);
  } else {
    std::tie(b.train_ds, b.test_ds) = holdout_split(source, c.dataset.test_count, c.dataset.split_seed);
  }
  b.n_classes = std::max(b.train_ds.n_classes, b.test_ds.n_classes);
  b.train_ds.n_classes = b.test_ds.n_classes = b.n_classes;
  if (b.vocab.size() > c.model.vocab_size) {
    throw ConfigError("model.vocab_size " + std::to_string(c.model.vocab_size) + " is smaller than the vocabulary (" +
                      std::to_string(b.vocab.size()) + " tokens)");
  }
  if (b.n_classes > c.model.n_classes) {
    throw ConfigError("dataset has " + std::to_string(b.n_classes) + " classes but model.n_classes is " +
                      std::to_string(c.model.n_classes));
  }
  b.train = encode(b.vocab, b.train_ds, c.model.max_seq_len);
  b.test = encode(b.vocab, b.test_ds, c.model.max_seq_len);
  return b;
}

inline PooledOutputContract contract_for(const ExperimentConfig& c) {
  PooledOutputContract pc;
  pc.mode = c.training.pooling;
  pc.scalar_mode = c.ntk.scalar;
  pc.class_index = c.ntk.class_index;
  return pc;
}

/// Base weights: a checkpoint if configured, otherwise a fresh model,
/// pretrained for `pretrain.steps` updates when nonzero.
inline Model make_base(const ExperimentConfig& c, const DataBundle& data) {
  if (!c.base_checkpoint.empty()) {
    Model m = load_checkpoint(c.base_checkpoint);
    if (!(m.config() == c.model)) {
      throw ConfigError("checkpoint " + c.base_checkpoint + " does not match the configured model dimensions");
    }
    return m;
  }
  Model m = init_model(c.model);
  if (c.pretrain.steps == 0) return m;
  LabeledTokens corpus = data.train;
  if (c.pretrain.synth) {
    const SynthSpec& s = *c.pretrain.synth;
    corpus = encode(data.vocab, synth_task(s.seed, s.n, s.vocab_size, s.seq_len), c.model.max_seq_len);
  }
  return pretrain(m, corpus, c.pretrain.steps, c.pretrain.lr, c.pretrain.batch, c.pretrain.seed);
}

/// A seeded batch of `count` training inputs used for selection scores.
inline TokenBatch calibration_batch(const DataBundle& data, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  TokenBatch out;
  for (std::size_t i = 0; i < std::min(count, order.size()); ++i) out.push_back(data.train.inputs[order[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// Fine-tuning.

inline TrainablePlan build_plan(const MethodConfig& m, const Model& base, const DataBundle& data,
                                std::size_t calibration, std::uint64_t seed) {
  const ModelConfig& mc = base.config();
  TrainablePlan plan;
  switch (m.name) {
    case MethodName::kFull:
      plan = apply_full(mc);
      break;
    case MethodName::kRocoft: {
      RocoftOptions o;
      o.rank = m.rank;
      o.axis = m.axis;
      o.targets = m.targets;
      o.train_bias = m.train_bias;
      if (m.strategy && m.rank > 0) {
        const auto targets = m.targets.empty() ? default_targets(mc) : m.targets;
        o.indices = select_indices(base, targets, calibration_batch(data, calibration, seed), m.rank,
                                   m.axis == Axis::kRow, *m.strategy, seed);
      }
      plan = apply_rocoft(mc, o);
      break;
    }
    case MethodName::kRandomEntry:
      plan = apply_random_entry_mask(mc, m.p, m.targets, seed);
      break;
    case MethodName::kLora:
      plan = apply_lora(base, m.rank, m.alpha, m.targets, seed);
      break;
    case MethodName::kBitfit:
      plan = apply_bitfit(mc);
      break;
    case MethodName::kIa3:
      plan = apply_ia3(mc);
      break;
  }
  if (m.train_head) plan.unfreeze_head();
  return plan;
}

inline TrainOptions train_options(const ExperimentConfig& c, std::size_t train_size, std::uint64_t seed) {
  const TrainingConfig& t = c.training;
  TrainOptions o;
  o.optimizer = t.optimizer;
  o.lr = t.lr;
  o.weight_decay = t.weight_decay;
  o.warmup_steps = t.warmup_steps;
  o.scheduler = t.scheduler;
  o.grad_accum = t.grad_accum;
  o.batch = t.batch;
  o.steps = t.steps;
  if (t.epochs > 0) {
    const std::size_t per_update = t.batch * t.grad_accum;
    o.steps = t.epochs * ((train_size + per_update - 1) / per_update);
  }
  o.seed = seed;
  o.contract = contract_for(c);
  return o;
}

/// Accuracy for any class count; binary tasks add MCC, precision, recall
/// and F1 with class 1 as positive.
inline json classification_metrics(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                                   std::size_t n_classes) {
  json j;
  j["accuracy"] = metrics::accuracy(truth, pred);
  if (n_classes == 2) {
    const auto c = metrics::confusion(truth, pred);
    const auto prf = metrics::precision_recall_f1(c);
    j["mcc"] = metrics::mcc(c);
    j["precision"] = prf.precision;
    j["recall"] = prf.recall;
    j["f1"] = prf.f1;
  }
  return j;
}

inline json evaluate(const Model& model, const LabeledTokens& data, const PooledOutputContract& contract) {
  if (data.size() == 0) throw DataError("evaluate: empty test set");
  return classification_metrics(data.labels, predict(model, data.inputs, {}, contract), model.config().n_classes);
}

struct FinetuneRun {
  Model model;  // adapters merged
  TrainablePlan plan;
  json metrics;
  double final_loss = 0.0;
};

inline FinetuneRun finetune_one(const ExperimentConfig& c, const Model& base, const DataBundle& data,
                                std::uint64_t seed) {
  if (!(base.config() == c.model)) throw ConfigError("finetune: base model does not match the configured dimensions");
  Model m = base;
  TrainablePlan plan = build_plan(c.method, base, data, c.dataset.calibration, seed);
  const TrainResult tr = train(m, plan, data.train, train_options(c, data.train.size(), seed));
  FinetuneRun run{merge_adapters(m, plan.adapters), std::move(plan), {}, tr.losses.empty() ? 0.0 : tr.losses.back()};
  run.metrics = evaluate(run.model, data.test, contract_for(c));
  return run;
}

namespace detail {

inline void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

inline std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ResourceError("cannot write " + path);
  os << std::setw(2) << j << '\n';
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Per-metric summaries over a list of metric objects.
inline json summarize_metrics(const std::vector<json>& per_seed) {
  std::map<std::string, std::vector<double>> cols;
  for (const auto& m : per_seed)
    for (const auto& [k, v] : m.items()) cols[k].push_back(v.get<double>());
  json out = json::object();
  for (const auto& [k, v] : cols) out[k] = summary_json(v);
  return out;
}

}  // namespace detail

inline void write_report(const std::string& out_dir, const RunReport& r) {
  if (out_dir.empty()) return;
  detail::ensure_dir(out_dir);
  detail::write_json(detail::join(out_dir, "report.json"), r.to_json());
}

/// Trains one model per seed. With an output directory, writes report.json
/// and model_seed<s>.ckpt (adapters merged).
inline RunReport finetune(const ExperimentConfig& c, const Model& base, const DataBundle& data,
                          const std::string& out_dir = "") {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  r.body["command"] = "finetune";
  r.body["config"] = config_to_json(c);
  std::vector<json> per_seed;
  json seeds = json::array();
  for (std::uint64_t seed : c.seeds) {
    FinetuneRun run = finetune_one(c, base, data, seed);
    if (seeds.empty()) {
      r.body["plan"] = plan_summary(run.plan, c.method.budget_includes_head);
      r.body["total_params"] = base.total_params();
    }
    if (!out_dir.empty()) {
      detail::ensure_dir(out_dir);
      save_checkpoint(detail::join(out_dir, "model_seed" + std::to_string(seed) + ".ckpt"), run.model);
    }
    seeds.push_back({{"seed", seed}, {"metrics", run.metrics}, {"final_loss", run.final_loss}});
    per_seed.push_back(run.metrics);
  }
  r.body["seeds"] = seeds;
  r.body["summary"] = detail::summarize_metrics(per_seed);
  r.wall_clock_s = detail::seconds_since(t0);
  write_report(out_dir, r);
  return r;
}

// ---------------------------------------------------------------------------
// NTK experiment.

struct SubsetSpec {
  SubsetTag tag = SubsetTag::kFull;
  std::size_t rank = 0;
  std::string name;
};

/// "full", "row<r>", "column<r>" or "lora<r>".
inline SubsetSpec parse_subset(const std::string& s) {
  auto with_rank = [&](const char* prefix, SubsetTag tag) -> std::optional<SubsetSpec> {
    const std::string p(prefix);
    if (s.rfind(p, 0) != 0 || s.size() == p.size()) return std::nullopt;
    const std::string digits = s.substr(p.size());
    if (!std::all_of(digits.begin(), digits.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
      return std::nullopt;
    }
    const std::size_t r = std::stoull(digits);
    if (r == 0) throw ConfigError("subset '" + s + "': rank must be >= 1");
    return SubsetSpec{tag, r, s};
  };
  if (s == "full") return {SubsetTag::kFull, 0, s};
  if (auto v = with_rank("row", SubsetTag::kRow)) return *v;
  if (auto v = with_rank("column", SubsetTag::kColumn)) return *v;
  if (auto v = with_rank("lora", SubsetTag::kLora)) return *v;
  throw ConfigError("unknown kernel subset '" + s + "' (expected full, row<r>, column<r> or lora<r>)");
}

namespace detail {

/// Gradient features and the adapters they were taken with.
struct SubsetFeatures {
  std::vector<std::vector<double>> train, test;
};

inline SubsetFeatures subset_features(const ExperimentConfig& c, const Model& base, const SubsetSpec& spec,
                                      const TokenBatch& train_inputs, const TokenBatch& test_inputs,
                                      std::uint64_t seed) {
  const PooledOutputContract pc = contract_for(c);
  ParamSubset subset;
  TrainablePlan lora_plan;
  const AdapterSet* adapters = nullptr;
  switch (spec.tag) {
    case SubsetTag::kFull:
      subset = full_subset(base);
      break;
    case SubsetTag::kRow:
    case SubsetTag::kColumn: {
      RocoftOptions o;
      o.rank = spec.rank;
      o.axis = spec.tag == SubsetTag::kRow ? Axis::kRow : Axis::kColumn;
      o.targets = c.method.targets;
      subset = apply_rocoft(c.model, o).subset();
      break;
    }
    case SubsetTag::kLora:
      lora_plan = apply_lora(base, spec.rank, c.method.alpha, c.method.targets, seed);
      subset = lora_subset(lora_plan);
      adapters = &lora_plan.adapters;
      break;
    case SubsetTag::kCustom:
      throw ConfigError("custom subsets are not supported by the experiment runner");
  }
  return {gradient_features(base, subset, train_inputs, pc, adapters),
          gradient_features(base, subset, test_inputs, pc, adapters)};
}

inline Tensor select_block(const Tensor& G, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Tensor out({rows.size(), cols.size()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = G(rows[i], cols[j]);
  return out;
}

inline std::vector<std::size_t> klr_fit_predict(const Tensor& K, const Tensor& C,
                                                const std::vector<std::size_t>& labels, std::size_t n_classes,
                                                const ExperimentConfig& c, json& diag) {
  KLROptions ko;
  ko.tol = c.ntk.tol;
  ko.max_iter = c.ntk.max_iter;
  if (n_classes == 2) {
    KLRProblem p{K, {}, c.method.lambda};
    for (auto l : labels) p.y.push_back(static_cast<double>(l));
    const KLRSolution sol = fit_klr(p, ko);
    diag = {{"iterations", sol.iterations}, {"grad_norm", sol.grad_norm}, {"converged", sol.converged},
            {"objective", sol.final_objective}};
    return klr_classes(klr_predict(C, sol.alpha));
  }
  const OneVsRest ovr = OneVsRest::fit(K, labels, n_classes, c.method.lambda, ko);
  bool all = true;
  std::size_t iters = 0;
  for (const auto& s : ovr.solutions) {
    all = all && s.converged;
    iters = std::max(iters, s.iterations);
  }
  diag = {{"iterations", iters}, {"converged", all}};
  return ovr.predict(C);
}

}  // namespace detail

/// For each subset and seed: kernel on a k-shot train set, KLR fit,
/// held-out accuracy, and relative difference to the full kernel.
/// The full subset is always computed since every difference refers to it.
inline RunReport ntk_experiment(const ExperimentConfig& c, const Model& base, const DataBundle& data,
                                const std::string& out_dir = "") {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(base.config() == c.model)) throw ConfigError("ntk: base model does not match the configured dimensions");
  std::vector<SubsetSpec> specs;
  bool has_full = false;
  for (const auto& s : c.ntk.subsets) {
    specs.push_back(parse_subset(s));
    has_full = has_full || specs.back().tag == SubsetTag::kFull;
  }
  if (!has_full) specs.insert(specs.begin(), parse_subset("full"));

  TokenBatch test_inputs(data.test.inputs.begin(),
                         data.test.inputs.begin() + static_cast<std::ptrdiff_t>(std::min(c.ntk.eval_count, data.test.size())));
  std::vector<std::size_t> test_labels(data.test.labels.begin(), data.test.labels.begin() + static_cast<std::ptrdiff_t>(test_inputs.size()));
  if (test_inputs.empty()) throw DataError("ntk: empty evaluation set");

  std::vector<std::vector<std::size_t>> shots;
  for (std::uint64_t seed : c.seeds) shots.push_back(kshot_indices(data.train.labels, data.n_classes, c.ntk.k, seed));

  // Gram blocks over the whole train split; per-seed kernels are sub-blocks.
  // LoRA features depend on the seeded adapter init and are recomputed.
  struct Blocks {
    Tensor train, cross;  // train x train, test x train
  };
  std::map<std::string, Blocks> shared;
  auto blocks_for = [&](const SubsetSpec& spec, std::size_t seed_pos) -> Blocks {
    if (spec.tag != SubsetTag::kLora) {
      auto it = shared.find(spec.name);
      if (it == shared.end()) {
        const auto f = detail::subset_features(c, base, spec, data.train.inputs, test_inputs, 0);
        it = shared.emplace(spec.name, Blocks{gram(f.train), cross_gram(f.test, f.train)}).first;
      }
      const auto& idx = shots[seed_pos];
      std::vector<std::size_t> all_test(test_inputs.size());
      for (std::size_t i = 0; i < all_test.size(); ++i) all_test[i] = i;
      return {detail::select_block(it->second.train, idx, idx), detail::select_block(it->second.cross, all_test, idx)};
    }
    TokenBatch shot_inputs;
    for (std::size_t i : shots[seed_pos]) shot_inputs.push_back(data.train.inputs[i]);
    const auto f = detail::subset_features(c, base, spec, shot_inputs, test_inputs, c.seeds[seed_pos]);
    return {gram(f.train), cross_gram(f.test, f.train)};
  };

  RunReport r;
  r.body["command"] = "ntk";
  r.body["config"] = config_to_json(c);
  json per_subset = json::object();
  std::map<std::string, std::vector<double>> acc, rd1, rd2;
  std::map<std::string, KernelMatrix> first_kernels;

  for (std::size_t s = 0; s < c.seeds.size(); ++s) {
    const auto& idx = shots[s];
    std::vector<std::size_t> train_labels;
    for (std::size_t i : idx) train_labels.push_back(data.train.labels[i]);
    Tensor K_full;
    for (const auto& spec : specs) {
      Blocks b = blocks_for(spec, s);
      const KernelCheck check = check_kernel(b.train);
      if (!check.symmetric || !check.psd) {
        throw NumericError("ntk: kernel '" + spec.name + "' failed the symmetry/PSD check");
      }
      if (spec.tag == SubsetTag::kFull) K_full = b.train;
      if (s == 0) {
        KernelMatrix km;
        km.K = b.train;
        km.tag = spec.tag;
        km.tag_rank = spec.rank;
        for (std::size_t i : idx) km.example_ids.push_back("train" + std::to_string(i));
        first_kernels.emplace(spec.name, std::move(km));
      }
      Tensor K = b.train, C = b.cross;
      if (c.ntk.normalize) {
        double md = 0.0;
        for (std::size_t i = 0; i < K.dim(0); ++i) md += K(i, i);
        md /= static_cast<double>(K.dim(0));
        if (!(md > 0.0)) throw DegenerateInputError("ntk: kernel '" + spec.name + "' has a zero diagonal");
        for (double& v : K.data()) v /= md;
        for (double& v : C.data()) v /= md;
      }
      json diag;
      const auto pred = detail::klr_fit_predict(K, C, train_labels, data.n_classes, c, diag);
      const double a = metrics::accuracy(test_labels, pred);
      acc[spec.name].push_back(a);
      json entry = {{"seed", c.seeds[s]}, {"accuracy", a}, {"solver", diag}};
      const double d1 = relative_difference(b.train, K_full, 1);
      const double d2 = relative_difference(b.train, K_full, 2);
      rd1[spec.name].push_back(d1);
      rd2[spec.name].push_back(d2);
      entry["rel_diff_p1"] = d1;
      entry["rel_diff_p2"] = d2;
      per_subset[spec.name]["seeds"].push_back(entry);
    }
  }
  for (const auto& spec : specs) {
    json& j = per_subset[spec.name];
    j["accuracy"] = summary_json(acc[spec.name]);
    j["rel_diff_p1"] = summary_json(rd1[spec.name]);
    j["rel_diff_p2"] = summary_json(rd2[spec.name]);
  }
  r.body["subsets"] = per_subset;
  r.body["k"] = c.ntk.k;
  r.body["eval_examples"] = test_inputs.size();
  r.wall_clock_s = detail::seconds_since(t0);

  if (!out_dir.empty()) {
    detail::ensure_dir(out_dir);
    for (const auto& [name, km] : first_kernels) {
      std::ofstream ks(detail::join(out_dir, "kernel_" + name + ".csv"));
      write_kernel_csv(ks, km);
      std::ofstream ss(detail::join(out_dir, "spectrum_" + name + ".csv"));
      write_spectrum_csv(ss, eigen_spectrum(km.K));
    }
    write_report(out_dir, r);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Ablation sweeps.

/// One fine-tuning run per (value, seed). Writes sweep.csv with
/// dimension,value,seed,ttps,aps,accuracy,mcc,f1.
inline RunReport ablation_sweep(const ExperimentConfig& c, const Model& base, const DataBundle& data,
                                const std::string& out_dir = "") {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, ExperimentConfig>> variants;
  const SweepConfig& sw = c.sweep;
  switch (sw.dimension) {
    case SweepDimension::kStrategy:
      for (const auto& s : sw.strategies) {
        ExperimentConfig v = c;
        v.method.name = MethodName::kRocoft;
        v.method.strategy = parse_strategy(s);
        variants.emplace_back(s, v);
      }
      break;
    case SweepDimension::kRank:
      for (std::size_t r : sw.ranks) {
        ExperimentConfig v = c;
        v.method.rank = r;
        v.validate();
        variants.emplace_back(std::to_string(r), v);
      }
      break;
    case SweepDimension::kRandomP:
      for (double p : sw.ps) {
        ExperimentConfig v = c;
        v.method.name = MethodName::kRandomEntry;
        v.method.p = p;
        v.validate();
        std::ostringstream os;
        os << p;
        variants.emplace_back(os.str(), v);
      }
      break;
  }
  if (variants.empty()) throw ConfigError("sweep: no values for dimension '" + std::string(detail::dimension_name(sw.dimension)) + "'");

  RunReport r;
  r.body["command"] = "sweep";
  r.body["config"] = config_to_json(c);
  r.body["dimension"] = detail::dimension_name(sw.dimension);
  std::ostringstream csv;
  csv.precision(17);
  csv << "dimension,value,seed,ttps,aps,accuracy,mcc,f1\n";
  json values = json::array();
  for (const auto& [label, v] : variants) {
    std::vector<json> per_seed;
    json rows = json::array();
    ParamBudget budget;
    for (std::uint64_t seed : v.seeds) {
      const FinetuneRun run = finetune_one(v, base, data, seed);
      budget = run.plan.budget(v.method.budget_includes_head);
      csv << detail::dimension_name(sw.dimension) << ',' << label << ',' << seed << ',' << budget.ttps << ','
          << budget.aps << ',' << run.metrics.value("accuracy", 0.0) << ',' << run.metrics.value("mcc", 0.0) << ','
          << run.metrics.value("f1", 0.0) << '\n';
      rows.push_back({{"seed", seed}, {"ttps", budget.ttps}, {"aps", budget.aps}, {"metrics", run.metrics}});
      per_seed.push_back(run.metrics);
    }
    values.push_back({{"value", label}, {"runs", rows}, {"summary", detail::summarize_metrics(per_seed)}});
  }
  r.body["values"] = values;
  r.wall_clock_s = detail::seconds_since(t0);
  if (!out_dir.empty()) {
    detail::ensure_dir(out_dir);
    std::ofstream os(detail::join(out_dir, "sweep.csv"));
    os << csv.str();
    write_report(out_dir, r);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Parameter counting.

/// Two-column table "TTPs / APs" for one Table-style formula.
inline void count_params_cmd(std::ostream& os, CountMethod method, const CountDims& dims) {
  const ParamBudget b = count_params(method, dims);
  os << std::left << std::setw(8) << "TTPs" << b.ttps << '\n' << std::setw(8) << "APs" << b.aps << '\n';
}

}  // namespace rocoft
