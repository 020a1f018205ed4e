// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rocoft/model.hpp"

// Wanda-style importance scores and row/column selection strategies.

namespace rocoft {

struct ImportanceScore {
  Tensor S;                        // |W_ij| * ||X_.j||_2, shaped like W
  std::vector<double> row_scores;  // sum over j, length d_out
  std::vector<double> col_scores;  // sum over i, length d_in
};

inline ImportanceScore wanda_scores(const Tensor& W, const Tensor& X) {
  if (W.rank() != 2 || X.rank() != 2) throw DimensionError("wanda_scores: W and X must be matrices");
  if (X.dim(1) != W.dim(1)) {
    throw DimensionError("wanda_scores: X " + shape_str(X.shape()) + " does not match input dimension of W " +
                         shape_str(W.shape()));
  }
  const std::size_t d_out = W.dim(0), d_in = W.dim(1);
  std::vector<double> col_norm(d_in, 0.0);
  for (std::size_t s = 0; s < X.dim(0); ++s)
    for (std::size_t j = 0; j < d_in; ++j) col_norm[j] += X(s, j) * X(s, j);
  for (double& v : col_norm) v = std::sqrt(v);

  ImportanceScore out{Tensor(W.shape()), std::vector<double>(d_out, 0.0), std::vector<double>(d_in, 0.0)};
  for (std::size_t i = 0; i < d_out; ++i) {
    for (std::size_t j = 0; j < d_in; ++j) {
      const double s = std::abs(W(i, j)) * col_norm[j];
      out.S(i, j) = s;
      out.row_scores[i] += s;
      out.col_scores[j] += s;
    }
  }
  return out;
}

enum class Strategy { kMax, kMin, kMixed, kRandom };

inline Strategy parse_strategy(const std::string& s) {
  if (s == "max") return Strategy::kMax;
  if (s == "min") return Strategy::kMin;
  if (s == "mixed") return Strategy::kMixed;
  if (s == "random") return Strategy::kRandom;
  throw ConfigError("unknown selection strategy '" + s + "'");
}

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kMax: return "max";
    case Strategy::kMin: return "min";
    case Strategy::kMixed: return "mixed";
    case Strategy::kRandom: return "random";
  }
  return "?";
}

/// Picks r distinct indices, returned in ascending order. Equal scores are
/// ordered by ascending index. Mixed takes ceil(r/2) from the top and
/// floor(r/2) from the bottom, then backfills collisions from the top.
inline std::vector<std::size_t> select(const std::vector<double>& scores, std::size_t r, Strategy strategy,
                                       std::uint64_t seed = 0) {
  const std::size_t n = scores.size();
  if (r < 1 || r > n) {
    throw RangeError("select: r = " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> desc(n);
  std::iota(desc.begin(), desc.end(), std::size_t{0});
  std::stable_sort(desc.begin(), desc.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> asc(n);
  std::iota(asc.begin(), asc.end(), std::size_t{0});
  std::stable_sort(asc.begin(), asc.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<std::size_t> out;
  switch (strategy) {
    case Strategy::kMax:
      out.assign(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(r));
      break;
    case Strategy::kMin:
      out.assign(asc.begin(), asc.begin() + static_cast<std::ptrdiff_t>(r));
      break;
    case Strategy::kMixed: {
      std::set<std::size_t> chosen(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>((r + 1) / 2));
      chosen.insert(asc.begin(), asc.begin() + static_cast<std::ptrdiff_t>(r / 2));
      for (std::size_t i = 0; chosen.size() < r; ++i) chosen.insert(desc[i]);
      out.assign(chosen.begin(), chosen.end());
      break;
    }
    case Strategy::kRandom: {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), std::size_t{0});
      std::mt19937_64 rng(seed);
      std::shuffle(all.begin(), all.end(), rng);
      out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(r));
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Inputs seen by each target matrix during one forward pass, batch
/// flattened: [sum of sequence lengths x d_in].
inline std::map<std::string, Tensor> activation_capture(const Model& model, const std::vector<std::string>& targets,
                                                        const TokenBatch& batch) {
  if (batch.empty()) throw InputError("activation_capture: empty batch");
  for (const auto& t : targets) {
    if (!model.contains(t) || model.at(t).rank() != 2 || t.rfind("W_") == std::string::npos) {
      throw NameError("activation_capture: unknown target '" + t + "'");
    }
  }
  ForwardTrace trace;
  ForwardOptions opts;
  opts.trace = &trace;
  forward(model, batch, {}, opts);
  std::map<std::string, Tensor> out;
  for (const auto& t : targets) out.emplace(t, trace.linear_inputs.at(t));
  return out;
}

/// Per-target indices chosen by a strategy on Wanda row or column scores.
inline std::map<std::string, std::vector<std::size_t>> select_indices(const Model& model,
                                                                      const std::vector<std::string>& targets,
                                                                      const TokenBatch& calibration, std::size_t r,
                                                                      bool rows, Strategy strategy,
                                                                      std::uint64_t seed) {
  const auto captured = activation_capture(model, targets, calibration);
  std::map<std::string, std::vector<std::size_t>> out;
  std::uint64_t k = 0;
  for (const auto& t : targets) {
    const ImportanceScore s = wanda_scores(model.at(t), captured.at(t));
    out[t] = select(rows ? s.row_scores : s.col_scores, r, strategy, seed + k++);
  }
  return out;
}

/// CSV with header `target,index,axis,score`.
inline void write_scores_csv(std::ostream& os, const std::string& target, const ImportanceScore& s) {
  os.precision(17);
  for (std::size_t i = 0; i < s.row_scores.size(); ++i) os << target << ',' << i << ",row," << s.row_scores[i] << '\n';
  for (std::size_t j = 0; j < s.col_scores.size(); ++j) os << target << ',' << j << ",column," << s.col_scores[j] << '\n';
}

}  // namespace rocoft
