// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

namespace rocoft {
namespace {

json tiny_json() {
  return json::parse(R"({
    "model": {"vocab_size": 23, "max_seq_len": 9, "d_model": 16, "n_heads": 2, "n_layers": 1, "d_ff": 32, "seed": 1},
    "method": {"name": "rocoft", "rank": 1, "axis": "row"},
    "dataset": {"synth": {"seed": 4, "n": 120, "vocab_size": 20, "seq_len": 8}, "test_count": 40, "calibration": 8},
    "pretrain": {"steps": 30, "lr": 3e-3, "batch": 8, "seed": 2},
    "training": {"lr": 1e-2, "steps": 15, "batch": 8},
    "ntk": {"k": 4, "subsets": ["row1", "column1", "lora1"], "eval_count": 20},
    "seeds": [1, 2],
    "outputs": "unused"
  })");
}

ExperimentConfig tiny() { return parse_config(tiny_json()); }

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

TEST(Config, UnknownKeysNameTheirPath) {
  json j = tiny_json();
  j["method"]["foo"] = 1;
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("method.foo"), std::string::npos) << e.what();
  }
  json k = tiny_json();
  k["extra"] = true;
  EXPECT_THROW(parse_config(k), ConfigError);
}

TEST(Config, RejectsBadValues) {
  json j = tiny_json();
  j["training"]["epochs"] = 2;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = tiny_json();
  j["method"]["axis"] = "diagonal";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = tiny_json();
  j["training"]["lr"] = "fast";
  EXPECT_THROW(parse_config(j), ConfigError);

  ExperimentConfig c = tiny();
  c.training.lr = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.method.rank = 17;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.seeds.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.method.p = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, EchoRoundTrip) {
  const ExperimentConfig c = tiny();
  const json echoed = config_to_json(c);
  EXPECT_EQ(config_to_json(parse_config(echoed)), echoed);
  EXPECT_EQ(echoed["method"]["rank"], 1);
  EXPECT_EQ(echoed["seeds"], json({1, 2}));
}

TEST(Config, LoadFileErrors) {
  TempDir d("rocoft_cfg");
  std::filesystem::create_directories(d.path);
  std::ofstream(d.path / "bad.json") << "{ \"seeds\": [1, }";
  EXPECT_THROW(load_config((d.path / "bad.json").string()), ParseError);
  std::ofstream(d.path / "ok.json") << "// comment\n" << tiny_json().dump();
  EXPECT_EQ(load_config((d.path / "ok.json").string()).seeds.size(), 2u);
}

TEST(Summary, SampleStdAndStderr) {
  const Summary s = summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(summarize({7}).std, 0.0);
}

TEST(Subsets, ParseNames) {
  EXPECT_EQ(parse_subset("row3").rank, 3u);
  EXPECT_EQ(parse_subset("lora1").tag, SubsetTag::kLora);
  EXPECT_THROW(parse_subset("row0"), ConfigError);
  EXPECT_THROW(parse_subset("diag1"), ConfigError);
}

TEST(Harness, DataBundleFromSynth) {
  const ExperimentConfig c = tiny();
  const DataBundle d = prepare_data(c);
  EXPECT_EQ(d.test.size(), 40u);
  EXPECT_EQ(d.train.size(), 80u);
  EXPECT_LE(d.vocab.size(), c.model.vocab_size);
  ExperimentConfig small = c;
  small.model.vocab_size = 10;
  EXPECT_THROW(prepare_data(small), ConfigError);
}

TEST(Harness, NothingTrainableEqualsZeroShot) {
  ExperimentConfig c = tiny();
  c.method.rank = 0;
  c.seeds = {1};
  const DataBundle d = prepare_data(c);
  const Model base = make_base(c, d);
  const RunReport r = finetune(c, base, d);
  EXPECT_EQ(r.body["seeds"][0]["metrics"], evaluate(base, d.test, contract_for(c)));
  EXPECT_EQ(r.body["plan"]["ttps"], 0);
}

TEST(Harness, FinetuneCheckpointReproducesReport) {
  TempDir out("rocoft_ft");
  const ExperimentConfig c = tiny();
  const DataBundle d = prepare_data(c);
  const Model base = make_base(c, d);
  const RunReport r = finetune(c, base, d, out.str());
  ASSERT_TRUE(std::filesystem::exists(out.path / "report.json"));
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    const Model m = load_checkpoint((out.path / ("model_seed" + std::to_string(c.seeds[i]) + ".ckpt")).string());
    const json re = evaluate(m, d.test, contract_for(c));
    const json& rep = r.body["seeds"][i]["metrics"];
    for (const auto& [k, v] : re.items()) EXPECT_NEAR(v.get<double>(), rep[k].get<double>(), 1e-12) << k;
  }
  const RunReport again = finetune(c, base, d);
  EXPECT_EQ(again.body.dump(), r.body.dump());
}

TEST(Harness, RankSweepBudgetGrows) {
  ExperimentConfig c = tiny();
  c.seeds = {1};
  c.training.steps = 2;
  c.sweep.dimension = SweepDimension::kRank;
  c.sweep.ranks = {1, 2, 4, 8};
  const DataBundle d = prepare_data(c);
  const RunReport r = ablation_sweep(c, make_base(c, d), d);
  ASSERT_EQ(r.body["values"].size(), 4u);
  std::uint64_t prev = 0;
  for (const auto& v : r.body["values"]) {
    const auto ttps = v["runs"][0]["ttps"].get<std::uint64_t>();
    EXPECT_GT(ttps, prev);
    prev = ttps;
  }
}

TEST(Harness, StrategySweepCoversAllStrategies) {
  TempDir out("rocoft_sweep");
  ExperimentConfig c = tiny();
  c.seeds = {1};
  c.training.steps = 2;
  c.sweep.dimension = SweepDimension::kStrategy;
  const DataBundle d = prepare_data(c);
  const RunReport r = ablation_sweep(c, make_base(c, d), d, out.str());
  std::set<std::string> seen;
  for (const auto& v : r.body["values"]) seen.insert(v["value"].get<std::string>());
  EXPECT_EQ(seen, (std::set<std::string>{"max", "min", "mixed", "random"}));
  std::ifstream csv(out.path / "sweep.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "dimension,value,seed,ttps,aps,accuracy,mcc,f1");
}

TEST(Harness, NtkExperimentReport) {
  TempDir out("rocoft_ntk");
  const ExperimentConfig c = tiny();
  const DataBundle d = prepare_data(c);
  const Model base = make_base(c, d);
  const RunReport r = ntk_experiment(c, base, d, out.str());
  const json& s = r.body["subsets"];
  for (const char* name : {"full", "row1", "column1", "lora1"}) {
    ASSERT_TRUE(s.contains(name)) << name;
    EXPECT_EQ(s[name]["seeds"].size(), 2u);
    EXPECT_TRUE(std::filesystem::exists(out.path / (std::string("kernel_") + name + ".csv")));
    EXPECT_TRUE(std::filesystem::exists(out.path / (std::string("spectrum_") + name + ".csv")));
  }
  EXPECT_EQ(s["full"]["rel_diff_p1"]["mean"], 0.0);
  EXPECT_GT(s["row1"]["rel_diff_p2"]["mean"].get<double>(), 0.0);
  const RunReport again = ntk_experiment(c, base, d);
  EXPECT_EQ(again.body.dump(), r.body.dump());
}

TEST(Harness, BaseCheckpointMustMatchConfig) {
  TempDir out("rocoft_base");
  std::filesystem::create_directories(out.path);
  ExperimentConfig c = tiny();
  ModelConfig other = c.model;
  other.d_model = 8;
  save_checkpoint((out.path / "b.ckpt").string(), init_model(other));
  c.base_checkpoint = (out.path / "b.ckpt").string();
  EXPECT_THROW(make_base(c, prepare_data(c)), ConfigError);
}

}  // namespace
}  // namespace rocoft
