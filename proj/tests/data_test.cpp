// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

namespace rocoft {
namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& f) const { return (path / f).string(); }
};

TEST(Tsv, LoadAndRoundTrip) {
  TempDir d("rocoft_data_tsv");
  std::ofstream(d.file("a.tsv")) << "1\tgood\n0\tbad\n";
  const Dataset ds = load_tsv(d.file("a.tsv"));
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.n_classes, 2u);
  EXPECT_EQ(ds.examples[0].text, "good");
  save_tsv(d.file("b.tsv"), ds);
  const Dataset back = load_tsv(d.file("b.tsv"));
  EXPECT_EQ(back.examples[1].text, "bad");
  EXPECT_EQ(back.examples[1].label, 0u);
}

TEST(Tsv, ParseErrorsNameTheLine) {
  TempDir d("rocoft_data_bad");
  std::ofstream(d.file("bad.tsv")) << "1\tgood\nno tab here\n";
  try {
    load_tsv(d.file("bad.tsv"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  std::ofstream(d.file("label.tsv")) << "x\tgood\n";
  EXPECT_THROW(load_tsv(d.file("label.tsv")), ParseError);
  std::ofstream(d.file("empty.tsv")) << "";
  EXPECT_THROW(load_tsv(d.file("empty.tsv")), DataError);
  EXPECT_THROW(load_tsv(d.file("none.tsv")), DataError);
}

TEST(Tokenize, Examples) {
  Dataset ds;
  ds.examples = {{"good movie", 1}, {"bad", 0}};
  const Vocabulary v = Vocabulary::build(ds);
  EXPECT_EQ(tokenize(v, "", 8), (TokenSeq{Vocabulary::kCls}));
  const TokenSeq t = tokenize(v, "Good good", 8);
  EXPECT_EQ(t, (TokenSeq{Vocabulary::kCls, v.id("good"), v.id("good")}));
  EXPECT_NE(v.id("good"), Vocabulary::kUnk);
  EXPECT_EQ(tokenize(v, "unseen", 8)[1], Vocabulary::kUnk);
  EXPECT_EQ(tokenize(v, "good movie bad good", 3).size(), 3u);
  EXPECT_EQ(tokenize(v, "bad movie", 8), tokenize(v, "bad movie", 8));
  EXPECT_THROW(tokenize(v, "x", 1), RangeError);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  TempDir d("rocoft_data_vocab");
  const Vocabulary v = Vocabulary::from_tokens(synth_words(6));
  v.save(d.file("v.txt"));
  const Vocabulary w = Vocabulary::load(d.file("v.txt"));
  ASSERT_EQ(w.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(w.token(i), v.token(i));
}

TEST(Kshot, PartitionAndDeterminism) {
  const Dataset ds = synth_task(3, 100, 30, 8);
  const auto [train, rest] = kshot_sample(ds, 16, 5);
  EXPECT_EQ(train.size(), 32u);
  EXPECT_EQ(train.size() + rest.size(), ds.size());
  std::size_t ones = 0;
  for (const auto& e : train.examples) ones += e.label;
  EXPECT_EQ(ones, 16u);
  const auto again = kshot_sample(ds, 16, 5);
  for (std::size_t i = 0; i < train.size(); ++i) EXPECT_EQ(again.first.examples[i].text, train.examples[i].text);
  EXPECT_NE(kshot_indices({0, 1, 0, 1, 0, 1, 0, 1}, 2, 2, 1), kshot_indices({0, 1, 0, 1, 0, 1, 0, 1}, 2, 2, 2));
  try {
    kshot_indices({0, 0, 0, 1}, 2, 2, 0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos);
  }
}

TEST(Holdout, SizesAndErrors) {
  const Dataset ds = synth_task(1, 50, 30, 8);
  const auto [train, test] = holdout_split(ds, 10, 0);
  EXPECT_EQ(test.size(), 10u);
  EXPECT_EQ(train.size(), 40u);
  EXPECT_THROW(holdout_split(ds, 50, 0), DataError);
}

// Majority vote over signal words, computed from the generator's word lists.
TEST(SynthTask, MajoritySignalRuleAndBalance) {
  const std::uint64_t seed = 13;
  const Dataset ds = synth_task(seed, 400, 40, 12);
  EXPECT_EQ(ds.size(), 400u);
  EXPECT_EQ(ds.n_classes, 2u);
  const auto signal = synth_signal_words(seed, 40);
  std::size_t correct = 0, ones = 0;
  for (const auto& e : ds.examples) {
    int votes[2] = {0, 0};
    for (const auto& w : split_words(e.text)) {
      const std::size_t id = std::stoul(w.substr(1));
      for (int c = 0; c < 2; ++c)
        if (std::find(signal[c].begin(), signal[c].end(), id) != signal[c].end()) ++votes[c];
    }
    correct += static_cast<std::size_t>(votes[1] > votes[0]) == e.label;
    ones += e.label;
    EXPECT_EQ(split_words(e.text).size(), 12u);
  }
  EXPECT_GE(static_cast<double>(correct) / 400.0, 0.95);
  EXPECT_EQ(ones, 200u);
  const Dataset again = synth_task(seed, 400, 40, 12);
  for (std::size_t i = 0; i < 400; ++i) EXPECT_EQ(again.examples[i].text, ds.examples[i].text);
  EXPECT_THROW(synth_task(seed, 1, 40, 12), DataError);
  EXPECT_THROW(synth_task(seed, 10, 8, 12), DataError);
}

}  // namespace
}  // namespace rocoft
