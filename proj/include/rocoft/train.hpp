// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rocoft/peft.hpp"

namespace rocoft {

enum class OptimizerKind { kSgd, kAdamW };
enum class Schedule { kConstant, kCosine };

struct TrainOptions {
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t warmup_steps = 0;
  Schedule scheduler = Schedule::kCosine;
  std::size_t grad_accum = 1;
  std::size_t batch = 16;
  std::size_t steps = 100;  // optimizer updates
  std::uint64_t seed = 0;
  PooledOutputContract contract;
};

struct LabeledTokens {
  TokenBatch inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return inputs.size(); }
};

struct TrainResult {
  std::vector<double> losses;  // one per optimizer update
};

inline double scheduled_lr(const TrainOptions& o, std::size_t step) {
  if (step < o.warmup_steps) {
    return o.lr * static_cast<double>(step + 1) / static_cast<double>(o.warmup_steps);
  }
  if (o.scheduler == Schedule::kConstant) return o.lr;
  const double span = static_cast<double>(std::max<std::size_t>(1, o.steps - std::min(o.steps, o.warmup_steps)));
  const double progress = static_cast<double>(step - o.warmup_steps) / span;
  return o.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, progress)));
}

/// Masked first-order optimizer. Scalars outside the plan's masks are never
/// written.
class MaskedOptimizer {
 public:
  MaskedOptimizer(const TrainOptions& opts) : opts_(opts) {}

  void step(std::map<std::string, Tensor*>& params, const GradientMap& grads,
            const std::map<std::string, const Mask*>& masks, double lr) {
    ++t_;
    for (auto& [name, w] : params) {
      const Tensor& g = grads.at(name);
      const Mask* mask = masks.count(name) ? masks.at(name) : nullptr;
      if (opts_.optimizer == OptimizerKind::kSgd) {
        for (std::size_t i = 0; i < w->size(); ++i) {
          if (mask && !mask->test(i)) continue;
          (*w)[i] -= lr * (g[i] + opts_.weight_decay * (*w)[i]);
        }
        continue;
      }
      auto [it, fresh] = state_.try_emplace(name);
      if (fresh) it->second = {Tensor(w->shape()), Tensor(w->shape())};
      Tensor& m = it->second.first;
      Tensor& v = it->second.second;
      const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < w->size(); ++i) {
        if (mask && !mask->test(i)) continue;
        m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
        v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        (*w)[i] -= lr * (mhat / (std::sqrt(vhat) + opts_.adam_eps) + opts_.weight_decay * (*w)[i]);
      }
    }
  }

 private:
  TrainOptions opts_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> state_;
};

/// Cross-entropy training of the scalars a plan marks trainable (including
/// its adapters). Batches are drawn by seeded reshuffling.
inline TrainResult train(Model& model, TrainablePlan& plan, const LabeledTokens& data, const TrainOptions& opts) {
  if (data.size() == 0) throw DataError("train: empty dataset");
  if (data.labels.size() != data.inputs.size()) throw DataError("train: label count mismatch");
  if (opts.batch == 0 || opts.grad_accum == 0) throw ConfigError("train: batch and grad_accum must be >= 1");

  const std::set<std::string> names = plan.trainable_names();
  std::map<std::string, Tensor*> params;
  std::map<std::string, const Mask*> masks;
  for (const auto& n : names) {
    if (model.contains(n)) {
      params[n] = &model.at(n);
      masks[n] = &plan.masks.at(n);
    }
  }
  plan.adapters.for_each([&](const std::string& n, Tensor& t) { params[n] = &t; });

  TrainResult result;
  if (names.empty()) return result;

  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  auto next_batch = [&]() {
    LabeledTokens b;
    for (std::size_t k = 0; k < std::min(opts.batch, data.size()); ++k) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      b.inputs.push_back(data.inputs[order[cursor]]);
      b.labels.push_back(data.labels[order[cursor]]);
      ++cursor;
    }
    return b;
  };

  MaskedOptimizer optimizer(opts);
  ForwardOptions fwd;
  fwd.adapters = &plan.adapters;
  for (std::size_t step = 0; step < opts.steps; ++step) {
    GradientMap total;
    double loss = 0.0;
    for (std::size_t micro = 0; micro < opts.grad_accum; ++micro) {
      const LabeledTokens b = next_batch();
      Tape tape;
      Var logits = forward_on_tape(tape, model, b.inputs, opts.contract, fwd);
      Var ce = ops::cross_entropy(logits, b.labels);
      Var scaled = opts.grad_accum == 1 ? ce : ops::scale(ce, 1.0 / static_cast<double>(opts.grad_accum));
      GradientMap g = grad(scaled, names);
      loss += scaled.value().item();
      if (total.empty()) {
        total = std::move(g);
      } else {
        for (auto& [n, t] : g) kernels::accumulate(total.at(n), t);
      }
    }
    optimizer.step(params, total, masks, scheduled_lr(opts, step));
    result.losses.push_back(loss);
  }
  return result;
}

/// Full-parameter AdamW training from the given weights (constant lr).
inline Model pretrain(const Model& model, const LabeledTokens& data, std::size_t steps, double lr,
                      std::size_t batch, std::uint64_t seed) {
  if (data.size() == 0) throw DataError("pretrain: empty dataset");
  Model out = model;
  if (steps == 0) return out;
  TrainablePlan plan = apply_full(model.config());
  TrainOptions opts;
  opts.optimizer = OptimizerKind::kAdamW;
  opts.scheduler = Schedule::kConstant;
  opts.lr = lr;
  opts.batch = batch;
  opts.steps = steps;
  opts.seed = seed;
  train(out, plan, data, opts);
  return out;
}

/// Mean cross-entropy of a labeled set.
inline double mean_loss(const Model& model, const LabeledTokens& data, const ForwardOptions& fwd = {},
                        const PooledOutputContract& contract = {}) {
  Tape tape;
  Var logits = forward_on_tape(tape, model, data.inputs, contract, fwd);
  return ops::cross_entropy(logits, data.labels).value().item();
}

inline std::vector<std::size_t> predict(const Model& model, const TokenBatch& inputs, const ForwardOptions& fwd = {},
                                        const PooledOutputContract& contract = {}) {
  return argmax_rows(forward(model, inputs, contract, fwd));
}

}  // namespace rocoft
