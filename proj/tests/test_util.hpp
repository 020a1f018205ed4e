// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "rocoft/rocoft.hpp"

namespace rocoft::testing {

/// Two layers, d=8, a few thousand parameters.
inline ModelConfig micro_config(std::uint64_t seed = 1) {
  ModelConfig c;
  c.vocab_size = 12;
  c.max_seq_len = 6;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 2;
  c.d_ff = 16;
  c.n_classes = 2;
  c.seed = seed;
  return c;
}

/// Random token sequences of mixed length.
inline TokenBatch random_batch(const ModelConfig& c, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenBatch out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 2 + rng() % (c.max_seq_len - 1);
    TokenSeq s{2};
    while (s.size() < len) s.push_back(rng() % c.vocab_size);
    out.push_back(s);
  }
  return out;
}

/// Initial weights are tiny; spreading them makes gradients less degenerate.
inline Model spread_model(const ModelConfig& c, double scale = 10.0) {
  Model m = init_model(c);
  for (const auto& name : m.names()) {
    if (name.ends_with(".gamma") || name.ends_with(".beta")) continue;
    for (double& v : m.at(name).data()) v *= scale;
  }
  return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace rocoft::testing
