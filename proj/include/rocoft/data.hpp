// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rocoft/train.hpp"

namespace rocoft {

enum class Split { kTrain, kValidation, kTest };

struct Example {
  std::string text;
  std::size_t label = 0;
  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t n_classes = 0;
  Split split = Split::kTrain;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// Parses `label<TAB>text` lines. n_classes is max label + 1.
inline Dataset load_tsv(const std::string& path, Split split = Split::kTrain) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset: " + path);
  Dataset ds;
  ds.split = split;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": missing tab separator");
    }
    const std::string label = line.substr(0, tab);
    if (label.empty() || !std::all_of(label.begin(), label.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": label '" + label + "' is not a nonnegative integer");
    }
    Example ex{line.substr(tab + 1), static_cast<std::size_t>(std::stoull(label))};
    ds.n_classes = std::max(ds.n_classes, ex.label + 1);
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw DataError("dataset file is empty: " + path);
  return ds;
}

inline void save_tsv(const std::string& path, const Dataset& ds) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write dataset: " + path);
  for (const auto& ex : ds.examples) os << ex.label << '\t' << ex.text << '\n';
}

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    out.push_back(std::move(w));
  }
  return out;
}

/// Token/id map with reserved pad=0, unk=1, cls=2; other ids follow the
/// sorted token order.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;

  Vocabulary() { reset(); }

  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    std::set<std::string> sorted(tokens.begin(), tokens.end());
    Vocabulary v;
    for (const auto& t : sorted) v.add(t);
    return v;
  }

  static Vocabulary build(const Dataset& ds) {
    std::vector<std::string> tokens;
    for (const auto& ex : ds.examples)
      for (auto& w : split_words(ex.text)) tokens.push_back(std::move(w));
    return from_tokens(tokens);
  }

  std::size_t size() const { return id_to_token_.size(); }

  std::size_t id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  const std::string& token(std::size_t id) const { return id_to_token_.at(id); }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write vocabulary: " + path);
    for (const auto& [tok, id] : token_to_id_) os << tok << '\t' << id << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open vocabulary: " + path);
    std::vector<std::pair<std::size_t, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw ParseError(path + ":" + std::to_string(lineno) + ": missing tab");
      entries.emplace_back(std::stoull(line.substr(tab + 1)), line.substr(0, tab));
    }
    std::sort(entries.begin(), entries.end());
    Vocabulary v;
    v.id_to_token_.clear();
    v.token_to_id_.clear();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first != i) throw ParseError(path + ": vocabulary ids are not contiguous");
      v.id_to_token_.push_back(entries[i].second);
      v.token_to_id_.emplace(entries[i].second, i);
    }
    if (v.size() < 3 || v.id_to_token_[kCls] != "[cls]") throw ParseError(path + ": reserved tokens missing");
    return v;
  }

 private:
  void reset() {
    id_to_token_ = {"[pad]", "[unk]", "[cls]"};
    token_to_id_ = {{"[pad]", kPad}, {"[unk]", kUnk}, {"[cls]", kCls}};
  }

  void add(const std::string& t) {
    if (token_to_id_.count(t)) return;
    token_to_id_.emplace(t, id_to_token_.size());
    id_to_token_.push_back(t);
  }

  std::vector<std::string> id_to_token_;
  std::map<std::string, std::size_t> token_to_id_;
};

/// Lowercased whitespace split, [cls] prepended, truncated to max_len.
inline TokenSeq tokenize(const Vocabulary& vocab, const std::string& text, std::size_t max_len) {
  if (max_len < 2) throw RangeError("tokenize: max_len must be >= 2");
  TokenSeq out{Vocabulary::kCls};
  for (const auto& w : split_words(text)) {
    if (out.size() == max_len) break;
    out.push_back(vocab.id(w));
  }
  return out;
}

inline LabeledTokens encode(const Vocabulary& vocab, const Dataset& ds, std::size_t max_len) {
  LabeledTokens out;
  for (const auto& ex : ds.examples) {
    out.inputs.push_back(tokenize(vocab, ex.text, max_len));
    out.labels.push_back(ex.label);
  }
  return out;
}

/// Positions of exactly k examples per class, drawn without replacement,
/// in ascending order.
inline std::vector<std::size_t> kshot_indices(const std::vector<std::size_t>& labels, std::size_t n_classes,
                                              std::size_t k, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) throw DataError("kshot_sample: label out of range");
    by_class[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < k) {
      throw DataError("kshot_sample: class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                      " examples, need " + std::to_string(k));
    }
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    out.insert(out.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Exactly k examples per class drawn without replacement; the rest go to
/// the remainder. Both keep the source order.
inline std::pair<Dataset, Dataset> kshot_sample(const Dataset& data, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> labels;
  for (const auto& ex : data.examples) labels.push_back(ex.label);
  std::vector<char> chosen(data.size(), 0);
  for (std::size_t i : kshot_indices(labels, data.n_classes, k, seed)) chosen[i] = 1;
  Dataset train{{}, data.n_classes, Split::kTrain};
  Dataset rest{{}, data.n_classes, Split::kTest};
  for (std::size_t i = 0; i < data.size(); ++i) (chosen[i] ? train : rest).examples.push_back(data.examples[i]);
  return {std::move(train), std::move(rest)};
}

/// Seeded train/test partition with `test_count` held-out examples.
inline std::pair<Dataset, Dataset> holdout_split(const Dataset& data, std::size_t test_count, std::uint64_t seed) {
  if (test_count >= data.size()) throw DataError("holdout_split: test set would consume the whole dataset");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> is_test(data.size(), 0);
  for (std::size_t i = 0; i < test_count; ++i) is_test[order[i]] = 1;
  Dataset train{{}, data.n_classes, Split::kTrain};
  Dataset test{{}, data.n_classes, Split::kTest};
  for (std::size_t i = 0; i < data.size(); ++i) (is_test[i] ? test : train).examples.push_back(data.examples[i]);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Synthetic two-class task.
//
// Words are "w0" .. "w{vocab_size-1}". A seed-dependent permutation picks
// four signal words per class; everything else is noise. Each sequence
// plants 2-4 signal words of its own class and at most one of the other
// class among noise words, so the majority-signal rule is always correct.

inline constexpr std::size_t kSignalWordsPerClass = 4;

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n = 256;
  std::size_t vocab_size = 40;
  std::size_t seq_len = 12;  // words per example, excluding [cls]
};

inline std::string synth_word(std::size_t i) { return "w" + std::to_string(i); }

inline std::vector<std::string> synth_words(std::size_t vocab_size) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < vocab_size; ++i) out.push_back(synth_word(i));
  return out;
}

/// Signal word indices per class for a seed.
inline std::array<std::vector<std::size_t>, 2> synth_signal_words(std::uint64_t seed, std::size_t vocab_size) {
  std::vector<std::size_t> perm(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) perm[i] = i;
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t c = 0; c < 2; ++c)
    out[c].assign(perm.begin() + static_cast<std::ptrdiff_t>(c * kSignalWordsPerClass),
                  perm.begin() + static_cast<std::ptrdiff_t>((c + 1) * kSignalWordsPerClass));
  return out;
}

inline Dataset synth_task(std::uint64_t seed, std::size_t n, std::size_t vocab_size, std::size_t seq_len) {
  if (n < 2) throw DataError("synth_task: need at least 2 examples");
  if (vocab_size < 2 * kSignalWordsPerClass + 2) throw DataError("synth_task: vocabulary too small");
  if (seq_len < 5) throw DataError("synth_task: seq_len must be >= 5");
  const auto signal = synth_signal_words(seed, vocab_size);
  std::vector<std::size_t> noise;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    bool is_signal = false;
    for (const auto& s : signal) is_signal = is_signal || std::find(s.begin(), s.end(), i) != s.end();
    if (!is_signal) noise.push_back(i);
  }
  std::mt19937_64 rng(seed);
  Dataset ds{{}, 2, Split::kTrain};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    const std::size_t own = 2 + rng() % 3;
    const std::size_t other = rng() % 2;
    std::vector<std::size_t> words;
    for (std::size_t k = 0; k < own; ++k) words.push_back(signal[label][rng() % kSignalWordsPerClass]);
    for (std::size_t k = 0; k < other; ++k) words.push_back(signal[1 - label][rng() % kSignalWordsPerClass]);
    while (words.size() < seq_len) words.push_back(noise[rng() % noise.size()]);
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) text += (k ? " " : "") + synth_word(words[k]);
    ds.examples.push_back({std::move(text), label});
  }
  std::shuffle(ds.examples.begin(), ds.examples.end(), rng);
  return ds;
}

}  // namespace rocoft
