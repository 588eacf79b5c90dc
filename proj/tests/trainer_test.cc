// Copyright 2026 The aetsep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "aetsep/checkpoint.h"
#include "aetsep/trainer.h"
#include "expect_error.h"
#include "json.hpp"
#include "test_util.h"

namespace aetsep {
namespace {

namespace fs = std::filesystem;
using testing::ExpectCode;
using testing::HighVoice;
using testing::LowVoice;
using testing::SyntheticVoice;

NetworkConfig Tiny() {
  NetworkConfig c;
  c.components = 16;
  c.taps = 64;
  c.stride = 16;
  c.hidden = 16;
  return c;
}

TrainConfig Quick(const std::string& cost) {
  TrainConfig t;
  t.cost = cost;
  t.excerpt_len = 4096;
  t.trim = 256;
  t.epochs = 1;
  t.seed = 3;
  return t;
}

MixturePair VoicePair(uint64_t seed, int64_t len) {
  return MixAtSnr(SyntheticVoice(LowVoice(), 2 * seed, len),
                  SyntheticVoice(HighVoice(), 2 * seed + 1, len), 0.0);
}

Dataset VoiceDataset(int pairs, int64_t len) {
  Dataset ds;
  for (int i = 0; i < pairs; ++i) {
    ds.pairs.push_back(VoicePair(i, len + 300 * i));
    ds.sources.emplace_back("t" + std::to_string(i), "z" + std::to_string(i));
  }
  return ds;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("aetsep_tr_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(TrainConfigTest, Validate) {
  EXPECT_NO_THROW(TrainConfig{}.Validate());
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    ExpectCode(ErrorCode::kConfigError, [&] { c.Validate(); });
  };
  bad([](TrainConfig& c) { c.cost = "nope"; });
  bad([](TrainConfig& c) { c.learning_rate = 0.0; });
  bad([](TrainConfig& c) { c.beta1 = 1.0; });
  bad([](TrainConfig& c) { c.adam_epsilon = 0.0; });
  bad([](TrainConfig& c) { c.epochs = -1; });
  bad([](TrainConfig& c) { c.excerpt_len = 4095; });
  bad([](TrainConfig& c) { c.trim = -1; });
  bad([](TrainConfig& c) { c.normalization_pairs = 0; });
  TrainConfig full;
  full.excerpt_len = 0;
  EXPECT_NO_THROW(full.Validate());
}

TEST(ScheduleTest, EpochOrderIsASeededPermutation) {
  std::set<std::vector<int64_t>> distinct;
  for (int64_t epoch = 0; epoch < 8; ++epoch) {
    std::vector<int64_t> order = EpochOrder(5, epoch, 10);
    EXPECT_EQ(order, EpochOrder(5, epoch, 10));
    distinct.insert(order);
    std::sort(order.begin(), order.end());
    std::vector<int64_t> ident(10);
    std::iota(ident.begin(), ident.end(), 0);
    EXPECT_EQ(order, ident);
  }
  EXPECT_GT(distinct.size(), 4u);
  EXPECT_NE(EpochOrder(5, 0, 10), EpochOrder(6, 0, 10));
  EXPECT_EQ(EpochOrder(5, 0, 1), (std::vector<int64_t>{0}));
}

TEST(ScheduleTest, ExcerptOffsetStaysInRange) {
  std::set<int64_t> seen;
  for (int64_t s = 0; s < 500; ++s) {
    const int64_t o = ExcerptOffset(1, s, 5000, 4096);
    ASSERT_GE(o, 0);
    ASSERT_LE(o, 5000 - 4096);
    EXPECT_EQ(o, ExcerptOffset(1, s, 5000, 4096));
    seen.insert(o);
  }
  EXPECT_GT(seen.size(), 200u);
  EXPECT_EQ(ExcerptOffset(1, 7, 4096, 4096), 0);
  EXPECT_EQ(ExcerptOffset(1, 7, 9000, 0), 0);
}

TEST(TrainingGraphTest, TrimmedSignalsAlign) {
  const CompositeCost cost = CompositeCost::Parse("sdr:0.5+sir:0.5");
  const TrainingGraph g(Tiny(), cost, StoiConfig{}, 4096, 256, kDefaultLossEpsilon);
  EXPECT_EQ(g.loss_len(), Tiny().OutputLength(4096) - 512);
  EXPECT_EQ(g.graph().shape(g.output()), (Shape{g.loss_len()}));
  const MixturePair pair = VoicePair(0, 6000);
  const Excerpt e = CutExcerpt(pair, 100, g);
  EXPECT_EQ(e.mixture.size(), 4096);
  EXPECT_EQ(e.target.size(), g.loss_len());
  EXPECT_EQ(e.interference.size(), g.loss_len());
  EXPECT_EQ(e.mixture[0], pair.mixture.samples[100]);
  EXPECT_EQ(e.target[0], pair.target.samples[356]);
  EXPECT_EQ(e.interference[g.loss_len() - 1], pair.interference.samples[355 + g.loss_len()]);
  ExpectCode(ErrorCode::kSignalTooShort, [&] { CutExcerpt(pair, 6000 - 4095, g); });
  ExpectCode(ErrorCode::kSignalTooShort, [&] {
    TrainingGraph(Tiny(), cost, StoiConfig{}, 4096, 2048, kDefaultLossEpsilon);
  });
}

TEST(TrainStepTest, ZeroLearningRateIsIdentity) {
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    TrainConfig cfg = Quick("sdr");
    cfg.optimizer = kind;
    cfg.learning_rate = 0.0;
    const TrainingGraph g(Tiny(), CompositeCost::Parse("sdr"), StoiConfig{}, 4096, 256,
                          kDefaultLossEpsilon);
    const SeparatorParams start = InitParams(1, Tiny());
    SeparatorParams p = start;
    OptimizerState state;
    const Excerpt e = CutExcerpt(VoicePair(1, 5000), 0, g);
    for (int i = 0; i < 3; ++i) TrainStep(p, state, g, e, cfg);
    EXPECT_TRUE(p.BitwiseEqual(start));
    EXPECT_EQ(state.step, 3);
  }
}

TEST(TrainStepTest, SmallStepDescendsOnMse) {
  const TrainingGraph g(Tiny(), CompositeCost::Parse("mse"), StoiConfig{}, 4096, 256,
                        kDefaultLossEpsilon);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg = Quick("mse");
    cfg.optimizer = OptimizerKind::kSgd;
    cfg.learning_rate = 1e-3;
    SeparatorParams p = InitParams(seed, Tiny());
    OptimizerState state;
    const Excerpt e = CutExcerpt(VoicePair(seed, 4096), 0, g);
    const StepResult before = TrainStep(p, state, g, e, cfg);
    const StepResult after = EvaluateLoss(p, g, e);
    EXPECT_LT(after.loss, before.loss) << "seed " << seed;
    EXPECT_EQ(before.components.size(), 1u);
    EXPECT_EQ(before.components[0], before.loss);
  }
}

TEST(TrainStepTest, AdamMatchesHandComputedFirstStep) {
  // One parameter tensor at a time: after the first step the bias-corrected
  // update is lr * g / (|g| + eps) for every coordinate.
  const TrainingGraph g(Tiny(), CompositeCost::Parse("sdr"), StoiConfig{}, 4096, 256,
                        kDefaultLossEpsilon);
  TrainConfig cfg = Quick("sdr");
  cfg.learning_rate = 1e-2;
  const SeparatorParams start = InitParams(4, Tiny());
  SeparatorParams p = start;
  OptimizerState state;
  const Excerpt e = CutExcerpt(VoicePair(4, 4096), 0, g);
  Inputs in;
  start.Bind(in);
  in.Bind("mixture", e.mixture).Bind("target", e.target).Bind("interference", e.interference);
  const std::vector<std::string> names = start.names();
  const GradientResult grad =
      EvaluateWithGradient(g.graph(), in, std::set<std::string>(names.begin(), names.end()));
  TrainStep(p, state, g, e, cfg);
  for (const std::string& name : names) {
    const Tensor& gr = grad.gradients.at(name);
    for (int64_t i = 0; i < gr.size(); ++i) {
      const double want = start.tensor(name)[i] -
                          cfg.learning_rate * gr[i] / (std::abs(gr[i]) + cfg.adam_epsilon);
      ASSERT_NEAR(p.tensor(name)[i], want, 1e-15) << name << "[" << i << "]";
    }
  }
}

TEST(TrainStepTest, NonFiniteLossLeavesStateUntouched) {
  const TrainingGraph g(Tiny(), CompositeCost::Parse("sdr"), StoiConfig{}, 4096, 256,
                        kDefaultLossEpsilon);
  SeparatorParams p = InitParams(2, Tiny());
  p.mutable_tensor(param::kDense2Bias)[0] = std::nan("");
  const SeparatorParams before = p;
  OptimizerState state;
  const Excerpt e = CutExcerpt(VoicePair(2, 4096), 0, g);
  ExpectCode(ErrorCode::kNumericalDivergence, [&] { TrainStep(p, state, g, e, Quick("sdr")); });
  EXPECT_TRUE(p.BitwiseEqual(before));
  EXPECT_EQ(state.step, 0);
  EXPECT_TRUE(state.first_moment.empty());
}

// Multiplying a raw component by a power of two before normalization changes
// nothing downstream: the scale absorbs it exactly.
TEST(TrainStepTest, NormalizationAbsorbsComponentGain) {
  const StoiConfig stoi;
  const MixturePair pair = VoicePair(5, 6000);
  auto run = [&](double kappa) {
    CompositeCost cost = CompositeCost::Parse("sir:0.75+sar:0.25");
    cost.components[0].gain = kappa;
    const TrainingGraph raw(Tiny(), cost, stoi, 4096, 256, kDefaultLossEpsilon);
    SeparatorParams p = InitParams(6, Tiny());
    cost = NormalizeCostScales(cost, EvaluateLoss(p, raw, CutExcerpt(pair, 0, raw)).components);
    const TrainingGraph g(Tiny(), cost, stoi, 4096, 256, kDefaultLossEpsilon);
    OptimizerState state;
    std::vector<double> totals = {EvaluateLoss(p, g, CutExcerpt(pair, 0, g)).loss};
    for (int64_t s = 0; s < 10; ++s) {
      const Excerpt e = CutExcerpt(pair, ExcerptOffset(1, s, pair.mixture.size(), 4096), g);
      totals.push_back(TrainStep(p, state, g, e, Quick(cost.ToString())).loss);
    }
    return std::make_pair(totals, p);
  };
  const double cost_weight_sum = 1.0;
  const auto [base, p1] = run(1.0);
  const auto [scaled, p4] = run(4.0);
  EXPECT_EQ(base, scaled);
  EXPECT_TRUE(p1.BitwiseEqual(p4));
  EXPECT_NEAR(base.front(), cost_weight_sum, 1e-12);
}

TEST(FitTest, ZeroEpochsOnlyNormalizes) {
  const Dataset ds = VoiceDataset(3, 5000);
  TrainConfig cfg = Quick("sdr:0.75+mse:0.25");
  cfg.epochs = 0;
  const FitResult r = Fit(ds, Tiny(), cfg, StoiConfig{});
  ASSERT_EQ(r.log.size(), 3u);
  for (const LogEntry& e : r.log) EXPECT_EQ(e.phase, "normalize");
  EXPECT_TRUE(r.checkpoint.params.BitwiseEqual(InitParams(cfg.seed, Tiny())));
  EXPECT_EQ(r.checkpoint.progress.steps_completed, 0);
  ASSERT_EQ(r.checkpoint.progress.cost_scales.size(), 2u);
  // Each normalized component averages to one over the normalization batch.
  for (size_t k = 0; k < 2; ++k) {
    double mean = 0.0;
    for (const LogEntry& e : r.log) mean += e.components[k].second / 3.0;
    EXPECT_NEAR(r.cost.components[k].scale * mean, 1.0, 1e-6);
  }
  cfg.normalization_pairs = 2;
  EXPECT_EQ(Fit(ds, Tiny(), cfg, StoiConfig{}).log.size(), 2u);
  ExpectCode(ErrorCode::kNoData, [&] { Fit(Dataset{}, Tiny(), cfg, StoiConfig{}); });
}

TEST(FitTest, DeterministicAndResumable) {
  const Dataset ds = VoiceDataset(3, 5000);
  TrainConfig cfg = Quick("sdr");
  cfg.epochs = 2;
  const FitResult full = Fit(ds, Tiny(), cfg, StoiConfig{});
  EXPECT_EQ(full.log.size(), 3u + 6u);
  const FitResult again = Fit(ds, Tiny(), cfg, StoiConfig{});
  EXPECT_EQ(SerializeCheckpoint(full.checkpoint), SerializeCheckpoint(again.checkpoint));

  TrainConfig first = cfg;
  first.epochs = 1;
  const FitResult half = Fit(ds, Tiny(), first, StoiConfig{});
  FitOptions opt;
  opt.resume = DeserializeCheckpoint(SerializeCheckpoint(half.checkpoint));
  const FitResult resumed = Fit(ds, Tiny(), cfg, StoiConfig{}, opt);
  EXPECT_EQ(SerializeCheckpoint(resumed.checkpoint), SerializeCheckpoint(full.checkpoint));
  ASSERT_EQ(resumed.log.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ToJsonLine(resumed.log[i]), ToJsonLine(full.log[6 + i]));
  }
  EXPECT_EQ(full.checkpoint.progress.epochs_completed, 2);
  EXPECT_EQ(full.checkpoint.progress.steps_completed, 6);

  TrainConfig other = cfg;
  other.cost = "mse";
  ExpectCode(ErrorCode::kIncompatibleCheckpoint, [&] { Fit(ds, Tiny(), other, StoiConfig{}, opt); });
}

TEST(FitTest, LogLines) {
  const Dataset ds = VoiceDataset(2, 5000);
  TrainConfig cfg = Quick("sdr:0.5+sir:0.5");
  std::vector<std::string> lines;
  FitOptions opt;
  opt.on_log = [&](const LogEntry& e) { lines.push_back(ToJsonLine(e)); };
  const FitResult r = Fit(ds, Tiny(), cfg, StoiConfig{}, opt);
  ASSERT_EQ(lines.size(), 4u);
  const nlohmann::ordered_json j = nlohmann::ordered_json::parse(lines[3]);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"phase", "epoch", "step", "components", "total"}));
  EXPECT_EQ(j["phase"], "train");
  EXPECT_EQ(j["epoch"], 0);
  EXPECT_EQ(j["step"], 1);
  EXPECT_EQ(j["components"].size(), 2u);
  EXPECT_EQ(j["total"].get<double>(), r.log[3].total);
  EXPECT_EQ(j["components"]["sir"].get<double>(), r.log[3].components[1].second);
}

TEST(FitTest, DivergenceCarriesLastGoodState) {
  const Dataset ds = VoiceDataset(1, 5000);
  TrainConfig cfg = Quick("sdr");
  cfg.learning_rate = 1e300;
  cfg.epochs = 5;
  int64_t steps = 0;
  FitOptions opt;
  opt.on_step = [&](const SeparatorParams&, int64_t s) { steps = s; };
  try {
    Fit(ds, Tiny(), cfg, StoiConfig{}, opt);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalDivergence);
    EXPECT_EQ(e.last_good().progress.steps_completed, steps);
    EXPECT_LT(steps, 5);
    for (const auto& [name, t] : e.last_good().params.tensors()) EXPECT_TRUE(t.AllFinite()) << name;
  }
}

double Mean(const std::vector<LogEntry>& log, size_t begin, size_t count, int component) {
  double s = 0.0;
  for (size_t i = begin; i < begin + count; ++i) {
    s += component < 0 ? log[i].total : log[i].components[component].second;
  }
  return s / static_cast<double>(count);
}

TEST(FitTest, OverfitsOnePairWithSdr) {
  Dataset ds;
  ds.pairs.push_back(VoicePair(8, 4096));
  TrainConfig cfg = Quick("sdr");
  cfg.epochs = 500;
  cfg.learning_rate = 3e-3;
  const FitResult r = Fit(ds, Tiny(), cfg, StoiConfig{});
  ASSERT_EQ(r.log.size(), 501u);
  const double first = Mean(r.log, 1, 10, -1), last = Mean(r.log, 491, 10, -1);
  EXPECT_LT(last, 0.5 * first) << first << " -> " << last;
}

TEST(FitTest, SdrAndStoiBothImprove) {
  Dataset ds;
  ds.pairs.push_back(VoicePair(9, 8192));
  TrainConfig cfg = Quick("sdr:0.75+stoi:0.25");
  cfg.excerpt_len = 8192;
  cfg.trim = 512;
  cfg.epochs = 150;
  cfg.learning_rate = 3e-3;
  const FitResult r = Fit(ds, Tiny(), cfg, StoiConfig{});
  ASSERT_TRUE(r.stoi_bands.has_value());
  EXPECT_EQ(*r.stoi_bands, 15);
  for (int k = 0; k < 2; ++k) {
    const double first = Mean(r.log, 1, 10, k), last = Mean(r.log, r.log.size() - 10, 10, k);
    EXPECT_LT(last, first) << r.log[1].components[k].first;
  }
}

TEST(DatasetTest, PairsFilesDeterministically) {
  TempDir dir;
  fs::create_directories(dir.path() / "t");
  fs::create_directories(dir.path() / "z");
  fs::create_directories(dir.path() / "empty");
  for (int i = 0; i < 4; ++i) {
    WriteWav(SyntheticVoice(LowVoice(), i, 3000 + 100 * i), dir.path() / "t" / ("t" + std::to_string(i) + ".wav"));
  }
  for (int i = 0; i < 3; ++i) {
    WriteWav(SyntheticVoice(HighVoice(), 10 + i, 1500 + 100 * i, 8000.0),
             dir.path() / "z" / ("z" + std::to_string(i) + ".WAV"));
  }
  std::ofstream(dir.path() / "z" / "notes.txt") << "ignored";
  const Dataset a = BuildDataset(dir.path() / "t", dir.path() / "z", 0.0, 4, 16000.0);
  ASSERT_EQ(a.pairs.size(), 3u);
  ASSERT_EQ(a.sources.size(), 3u);
  std::set<std::string> targets, interferers;
  for (size_t i = 0; i < 3; ++i) {
    const MixturePair& p = a.pairs[i];
    EXPECT_EQ(p.mixture.sample_rate, 16000.0);
    EXPECT_EQ(p.target.size(), p.interference.size());
    EXPECT_NEAR(Rms(p.interference.samples) / Rms(p.target.samples), 1.0, 1e-9);
    targets.insert(a.sources[i].first);
    interferers.insert(a.sources[i].second);
  }
  EXPECT_EQ(targets.size(), 3u);
  EXPECT_EQ(interferers.size(), 3u);
  const Dataset b = BuildDataset(dir.path() / "t", dir.path() / "z", 0.0, 4, 16000.0);
  EXPECT_EQ(a.sources, b.sources);
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(a.pairs[i].mixture.samples, b.pairs[i].mixture.samples);
  bool differs = false;
  for (uint64_t seed = 5; seed < 12 && !differs; ++seed) {
    differs = BuildDataset(dir.path() / "t", dir.path() / "z", 0.0, seed, 16000.0).sources != a.sources;
  }
  EXPECT_TRUE(differs);

  ExpectCode(ErrorCode::kNoData,
             [&] { BuildDataset(dir.path() / "empty", dir.path() / "z", 0.0, 1, 16000.0); });
  ExpectCode(ErrorCode::kNoData,
             [&] { BuildDataset(dir.path() / "t", dir.path() / "missing", 0.0, 1, 16000.0); });

  Dataset other;
  other.sources.emplace_back((dir.path() / "elsewhere.wav").string(), "x.wav");
  EXPECT_TRUE(SourcesDisjoint(a, other));
  // The same file reached through a different spelling of its path.
  const fs::path used = a.sources[0].first;
  other.sources.emplace_back("y.wav", (used.parent_path() / ".." / "t" / used.filename()).string());
  EXPECT_FALSE(SourcesDisjoint(a, other));
  EXPECT_FALSE(SourcesDisjoint(other, a));
}

}  // namespace
}  // namespace aetsep
