// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: pretrain, finetune, ntk, sweep, select,
// count-params, eval.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "rocoft/rocoft.hpp"

namespace {

using namespace rocoft;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string base;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) {
    c.seeds = {*g.seed};
    c.model.seed = *g.seed;
  }
  if (!g.out.empty()) c.outputs = g.out;
  if (!g.base.empty()) c.base_checkpoint = g.base;
  c.validate();
  return c;
}

void print_summary(const RunReport& r) {
  json j = r.body;
  j.erase("config");
  std::cout << std::setw(2) << j << '\n';
}

int cmd_pretrain(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const DataBundle data = prepare_data(c);
  const auto t0 = std::chrono::steady_clock::now();
  const Model base = make_base(c, data);
  RunReport r;
  r.body["command"] = "pretrain";
  r.body["config"] = config_to_json(c);
  r.body["total_params"] = base.total_params();
  PooledOutputContract pc = contract_for(c);
  r.body["train_metrics"] = evaluate(base, data.train, pc);
  r.body["test_metrics"] = evaluate(base, data.test, pc);
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::filesystem::create_directories(c.outputs);
  save_checkpoint((std::filesystem::path(c.outputs) / "base.ckpt").string(), base);
  data.vocab.save((std::filesystem::path(c.outputs) / "vocab.txt").string());
  write_report(c.outputs, r);
  print_summary(r);
  return 0;
}

int cmd_finetune(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const DataBundle data = prepare_data(c);
  print_summary(finetune(c, make_base(c, data), data, c.outputs));
  return 0;
}

int cmd_ntk(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const DataBundle data = prepare_data(c);
  print_summary(ntk_experiment(c, make_base(c, data), data, c.outputs));
  return 0;
}

int cmd_sweep(const Globals& g, const std::string& dimension) {
  ExperimentConfig c = resolve(g);
  if (!dimension.empty()) c.sweep.dimension = detail::parse_dimension(dimension);
  const DataBundle data = prepare_data(c);
  print_summary(ablation_sweep(c, make_base(c, data), data, c.outputs));
  return 0;
}

int cmd_select(const Globals& g, const std::string& strategy) {
  ExperimentConfig c = resolve(g);
  const DataBundle data = prepare_data(c);
  const Model base = make_base(c, data);
  const auto targets = c.method.targets.empty() ? default_targets(c.model) : c.method.targets;
  const TokenBatch calib = calibration_batch(data, c.dataset.calibration, c.seeds.front());
  const auto captured = activation_capture(base, targets, calib);
  std::filesystem::create_directories(c.outputs);
  std::ofstream csv(std::filesystem::path(c.outputs) / "scores.csv");
  csv << "target,index,axis,score\n";
  for (const auto& t : targets) write_scores_csv(csv, t, wanda_scores(base.at(t), captured.at(t)));
  Strategy s = c.method.strategy.value_or(Strategy::kMax);
  if (!strategy.empty()) s = parse_strategy(strategy);
  const auto chosen =
      select_indices(base, targets, calib, c.method.rank, c.method.axis == Axis::kRow, s, c.seeds.front());
  json j = {{"strategy", strategy_name(s)},
            {"rank", c.method.rank},
            {"axis", c.method.axis == Axis::kRow ? "row" : "column"},
            {"indices", chosen}};
  std::ofstream(std::filesystem::path(c.outputs) / "selection.json") << std::setw(2) << j << '\n';
  std::cout << std::setw(2) << j << '\n';
  return 0;
}

struct CountArgs {
  std::string method = "rocoft-row";
  std::optional<std::uint64_t> d, r, lp, L, d_ff;
  bool enumerate = false;
  bool include_head = false;
};

int cmd_count(const Globals& g, const CountArgs& a) {
  if (!a.enumerate) {
    CountDims dims;
    dims.d = a.d;
    dims.r = a.r;
    dims.l_p = a.lp;
    dims.L = a.L;
    count_params_cmd(std::cout, parse_count_method(a.method), dims);
    return 0;
  }
  // Mask enumeration on a full encoder geometry.
  ModelConfig mc = g.config_path.empty() ? ModelConfig{} : load_config(g.config_path).model;
  if (a.d) mc.d_model = *a.d;
  if (a.L) mc.n_layers = *a.L;
  if (a.d_ff) mc.d_ff = *a.d_ff;
  if (mc.d_model % mc.n_heads != 0) mc.n_heads = 1;
  mc.validate();
  TrainablePlan plan;
  if (a.method == "rocoft-row" || a.method == "rocoft-column") {
    RocoftOptions o;
    o.rank = a.r.value_or(1);
    o.axis = a.method == "rocoft-row" ? Axis::kRow : Axis::kColumn;
    plan = apply_rocoft(mc, o);
  } else if (a.method == "bitfit") {
    plan = apply_bitfit(mc);
  } else if (a.method == "ia3") {
    plan = apply_ia3(mc);
  } else if (a.method == "full" || a.method == "ft") {
    plan = apply_full(mc);
  } else {
    throw ConfigError("--enumerate supports rocoft-row, rocoft-column, bitfit, ia3 and full");
  }
  const ParamBudget b = plan.budget(a.include_head);
  std::cout << std::left << std::setw(8) << "TTPs" << b.ttps << '\n' << std::setw(8) << "APs" << b.aps << '\n';
  return 0;
}

int cmd_eval(const Globals& g, const std::string& checkpoint) {
  ExperimentConfig c = resolve(g);
  const std::string path = checkpoint.empty() ? c.base_checkpoint : checkpoint;
  if (path.empty()) throw ConfigError("eval: give --checkpoint or base_checkpoint");
  const Model m = load_checkpoint(path);
  c.model = m.config();
  const DataBundle data = prepare_data(c);
  RunReport r;
  r.body["command"] = "eval";
  r.body["checkpoint"] = path;
  r.body["config"] = config_to_json(c);
  r.body["metrics"] = evaluate(m, data.test, contract_for(c));
  write_report(c.outputs, r);
  print_summary(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row/column fine-tuning and restricted-kernel experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Run with this single seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--base", g.base, "Base model checkpoint");

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain a base model and save it");
  auto* finetune = app.add_subcommand("finetune", "Fine-tune under the configured plan");
  auto* ntk = app.add_subcommand("ntk", "Restricted-kernel KLR experiment");
  auto* sweep = app.add_subcommand("sweep", "Ablation sweep");
  std::string dimension;
  sweep->add_option("--dimension", dimension, "strategy, rank or random_p");
  auto* select = app.add_subcommand("select", "Importance scores and selected indices");
  std::string strategy;
  select->add_option("--strategy", strategy, "max, min, mixed or random");
  auto* count = app.add_subcommand("count-params", "Trainable and added parameter counts");
  CountArgs ca;
  count->add_option("--method", ca.method, "Method name");
  count->add_option("--d", ca.d, "Hidden size d");
  count->add_option("--r", ca.r, "Rank r");
  count->add_option("--lp", ca.lp, "Prompt length l_p");
  count->add_option("--L", ca.L, "Number of layers L");
  count->add_option("--d-ff", ca.d_ff, "Feed-forward width (with --enumerate)");
  count->add_flag("--enumerate", ca.enumerate, "Enumerate masks over a full encoder instead of the per-matrix formula");
  count->add_flag("--include-head", ca.include_head, "Count classifier-head scalars");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint path");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  try {
    if (*pretrain) return cmd_pretrain(g);
    if (*finetune) return cmd_finetune(g);
    if (*ntk) return cmd_ntk(g);
    if (*sweep) return cmd_sweep(g, dimension);
    if (*select) return cmd_select(g, strategy);
    if (*count) return cmd_count(g, ca);
    if (*eval) return cmd_eval(g, checkpoint);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
