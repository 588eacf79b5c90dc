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

// Acceptance runner. Each criterion prints one PASS/FAIL line; the exit
// status is nonzero if any criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aetsep/aet_net.h"
#include "aetsep/checkpoint.h"
#include "aetsep/gradcheck.h"
#include "aetsep/losses.h"
#include "aetsep/metrics.h"
#include "aetsep/trainer.h"
#include "test_util.h"

namespace aetsep {
namespace {

using testing::Cut;
using testing::Gaussian;
using testing::GaussianTensor;
using testing::GaussianWave;
using testing::SyntheticVoice;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

long double DotL(const std::vector<double>& a, const std::vector<double>& b) {
  long double acc = 0.0L;
  for (size_t i = 0; i < a.size(); ++i) acc += static_cast<long double>(a[i]) * b[i];
  return acc;
}

// ---------------------------------------------------------------------------
// 1. Gradients against central differences.

double CheckSignalLoss(LossKind kind, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int64_t n = std::uniform_int_distribution<int64_t>(2048, 4000)(rng);
  const Tensor y = GaussianTensor(rng, {n});
  const Tensor z = GaussianTensor(rng, {n});
  Tensor x = GaussianTensor(rng, {n}, 0.5);
  for (int64_t i = 0; i < n; ++i) x[i] += 0.8 * y[i] + 0.3 * z[i];
  Graph g;
  const NodeId xn = g.Input("x", {n});
  const NodeId yn = g.Input("y", {n});
  const NodeId zn = g.Input("z", {n});
  NodeId loss;
  switch (kind) {
    case LossKind::kMse: loss = AddMseLoss(g, xn, yn); break;
    case LossKind::kSdr: loss = AddSdrLoss(g, xn, yn, kDefaultLossEpsilon); break;
    case LossKind::kSir: loss = AddSirLoss(g, xn, yn, zn, kDefaultLossEpsilon); break;
    case LossKind::kSar: loss = AddSarLoss(g, xn, yn, zn, kDefaultLossEpsilon); break;
    case LossKind::kStoi: std::abort();
  }
  g.SetOutput(loss);
  Inputs in;
  in.Bind("x", x).Bind("y", y).Bind("z", z);
  GradCheckOptions opt;
  opt.seed = seed;
  const std::vector<std::string> wrt =
      kind == LossKind::kMse || kind == LossKind::kSdr ? std::vector<std::string>{"x", "y"}
                                                       : std::vector<std::string>{"x", "y", "z"};
  return CheckGradients(g, in, wrt, opt).max_relative_error;
}

double CheckStoi(uint64_t seed) {
  // 4000 samples at the analysis rate give exactly one 30-frame segment.
  std::mt19937_64 rng(seed);
  const int64_t n = 4000;
  StoiConfig cfg;
  const Waveform clean = SyntheticVoice(testing::HighVoice(), seed + 100, n, cfg.analysis_rate);
  Tensor y = Tensor::Vector(clean.samples);
  Tensor x = Tensor::Vector(clean.samples);
  const std::vector<double> noise = Gaussian(rng, n, 0.2);
  for (int64_t i = 0; i < n; ++i) x[i] += noise[i];
  Graph g;
  const NodeId xn = g.Input("x", {n});
  const NodeId yn = g.Input("y", {n});
  g.SetOutput(AddStoiLoss(g, xn, yn, n, cfg.analysis_rate, cfg).loss);
  Inputs in;
  in.Bind("x", x).Bind("y", y);
  GradCheckOptions opt;
  opt.seed = seed;
  opt.max_coords = 400;
  return CheckGradients(g, in, {"x", "y"}, opt).max_relative_error;
}

double CheckNetwork(uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int64_t n = std::uniform_int_distribution<int64_t>(2048, 4000)(rng);
  const NetworkConfig net;  // full-size network
  const TrainingGraph tg(net, CompositeCost::Parse("sdr"), StoiConfig{}, n, 0,
                         kDefaultLossEpsilon);
  const Waveform t = SyntheticVoice(testing::LowVoice(), seed, n);
  const Waveform i = SyntheticVoice(testing::HighVoice(), seed + 1, n);
  const MixturePair pair = MixAtSnr(t, i, 0.0);
  const Excerpt ex = CutExcerpt(pair, 0, tg);
  const SeparatorParams params = InitParams(seed, net);
  Inputs in;
  params.Bind(in);
  in.Bind("mixture", ex.mixture).Bind("target", ex.target).Bind("interference", ex.interference);
  GradCheckOptions opt;
  opt.seed = seed;
  opt.max_coords = 6;
  return CheckGradients(tg.graph(), in, params.names(), opt).max_relative_error;
}

Outcome Criterion1() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  const std::vector<std::pair<const char*, std::function<double(uint64_t)>>> cases = {
      {"mse", [](uint64_t s) { return CheckSignalLoss(LossKind::kMse, s); }},
      {"sdr", [](uint64_t s) { return CheckSignalLoss(LossKind::kSdr, s); }},
      {"sir", [](uint64_t s) { return CheckSignalLoss(LossKind::kSir, s); }},
      {"sar", [](uint64_t s) { return CheckSignalLoss(LossKind::kSar, s); }},
      {"stoi", CheckStoi},
      {"network+sdr", CheckNetwork},
  };
  for (const auto& [name, fn] : cases) {
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) worst = std::max(worst, fn(seed));
    if (!(worst <= 1e-4)) o.pass = false;
    o.detail += std::string(name) + Fmt("=%.2e ", worst);
  }
  const double secs = Seconds(start);
  if (secs > 120.0) o.pass = false;
  o.detail += Fmt("(%.1f s)", secs);
  return o;
}

// ---------------------------------------------------------------------------
// 2. SDR surrogate against the projection metric.

Outcome Criterion2() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int64_t n = std::uniform_int_distribution<int64_t>(16, 512)(rng);
    const double a = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    const double sigma = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
    const Waveform y = GaussianWave(rng, n);
    const Waveform z = GaussianWave(rng, n);
    Waveform x = GaussianWave(rng, n);
    for (int64_t i = 0; i < n; ++i) x.samples[i] = a * y.samples[i] + sigma * x.samples[i];
    const long double xy = DotL(x.samples, y.samples);
    const long double xx = DotL(x.samples, x.samples);
    const long double yy = DotL(y.samples, y.samples);
    const double surrogate =
        static_cast<double>(10.0L * std::log10(xy * xy / (yy * xx - xy * xy)));
    const double metric = BssEvalMetrics(x, y, z).sdr_db;
    worst = std::max(worst, std::abs(surrogate - metric));
  }
  return {worst <= 1e-9, Fmt("max |diff| = %.3e dB over 1000 pairs", worst)};
}

// ---------------------------------------------------------------------------
// 3. Decomposition identity and the SIR closed form.

Outcome Criterion3() {
  std::mt19937_64 rng(3);
  double worst_rel = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int64_t n = std::uniform_int_distribution<int64_t>(64, 2048)(rng);
    const Waveform x = GaussianWave(rng, n);
    const Waveform y = GaussianWave(rng, n);
    const Waveform z = GaussianWave(rng, n);
    const BssDecomposition d = BssDecompose(x, y, z);
    for (int64_t i = 0; i < n; ++i) {
      const double t = d.target.samples[i], e = d.interference.samples[i],
                   a = d.artifacts.samples[i];
      const double scale = std::abs(t) + std::abs(e) + std::abs(a) + std::abs(x.samples[i]);
      const double rel = std::abs(x.samples[i] - (t + e + a)) /
                         (scale * std::numeric_limits<double>::epsilon());
      worst_rel = std::max(worst_rel, rel);
    }
  }
  // y and z with disjoint support are exactly orthogonal.
  const int64_t n = 4096;
  Waveform y{std::vector<double>(n, 0.0), 16000.0};
  Waveform z{std::vector<double>(n, 0.0), 16000.0};
  std::normal_distribution<double> nd;
  for (int64_t i = 0; i < n; ++i) (i % 2 == 0 ? y : z).samples[i] = nd(rng);
  const double ny = std::sqrt(static_cast<double>(DotL(y.samples, y.samples)));
  const double nz = std::sqrt(static_cast<double>(DotL(z.samples, z.samples)));
  double worst_sir = 0.0;
  for (double beta : {0.1, 0.5, 1.0, 2.0}) {
    Waveform x = y;
    for (int64_t i = 0; i < n; ++i) x.samples[i] += beta * z.samples[i];
    const double expected = -20.0 * std::log10(beta * nz / ny);
    worst_sir = std::max(worst_sir, std::abs(BssEvalMetrics(x, y, z).sir_db - expected));
  }
  const bool pass = worst_rel <= 4.0 && worst_sir <= 1e-9;
  return {pass, Fmt("reconstruction within %.2f ulp-scale; max SIR error %.3e dB", worst_rel,
                    worst_sir)};
}

// ---------------------------------------------------------------------------
// 4. STOI properties.

Outcome Criterion4() {
  const StoiConfig cfg;
  const int64_t n = 24000;
  Outcome o;
  const Waveform clean = SyntheticVoice(testing::LowVoice(), 4, n);
  const StoiResult self = StoiForward(clean, clean, cfg);
  const double self_err = std::abs(self.stoi - 1.0);
  if (!(self_err <= 1e-9)) o.pass = false;

  const std::vector<double> snrs = {20.0, 10.0, 0.0, -10.0};
  std::vector<double> means(snrs.size(), 0.0);
  double d_min = 1.0, d_max = -1.0;
  bool exact = true;
  for (uint64_t draw = 0; draw < 20; ++draw) {
    std::mt19937_64 rng(1000 + draw);
    const Waveform y = SyntheticVoice(draw % 2 ? testing::HighVoice() : testing::LowVoice(),
                                      draw, n);
    const std::vector<double> noise = Gaussian(rng, n);
    const double gain = Rms(y.samples) / Rms(noise);
    for (size_t s = 0; s < snrs.size(); ++s) {
      Waveform x = y;
      const double g = gain * std::pow(10.0, -snrs[s] / 20.0);
      for (int64_t i = 0; i < n; ++i) x.samples[i] += g * noise[i];
      const StoiResult r = StoiForward(x, y, cfg);
      means[s] += r.stoi / 20.0;
      for (int64_t i = 0; i < r.d.size(); ++i) {
        d_min = std::min(d_min, r.d[i]);
        d_max = std::max(d_max, r.d[i]);
      }
      if (StoiMetric(x, y, cfg) != 1.0 - StoiLoss(x, y, cfg)) exact = false;
    }
  }
  bool decreasing = true;
  for (size_t s = 1; s < means.size(); ++s) decreasing = decreasing && means[s] < means[s - 1];
  if (!decreasing || !exact || d_min < -1.0 || d_max > 1.0 + 1e-12) o.pass = false;
  o.detail = Fmt("|STOI(x,x)-1| = %.1e; d in [%.4f, %.12f]; ", self_err, d_min, d_max) +
             Fmt("means %.4f > %.4f > %.4f", means[0], means[1], means[2]) +
             Fmt(" > %.4f; metric == 1 - loss: ", means[3]) + (exact ? "yes" : "no");
  return o;
}

// ---------------------------------------------------------------------------
// 5. Loss minima and invariances.

// ||x||^2 / (||P x||^2 + eps) with P the projector onto span{y, z}, via the
// 2x2 Gram system.
long double SarOracle(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& z) {
  const long double a = DotL(y, y), b = DotL(y, z), c = DotL(z, z);
  const long double p = DotL(x, y), q = DotL(x, z);
  const long double det = a * c - b * b;
  const long double u = (c * p - b * q) / det, v = (a * q - b * p) / det;
  return DotL(x, x) / (u * p + v * q + static_cast<long double>(kDefaultLossEpsilon));
}

Outcome Criterion5() {
  std::mt19937_64 rng(5);
  Outcome o;
  double scale_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int64_t n = 1024;
    const Waveform y = GaussianWave(rng, n);
    Waveform x = GaussianWave(rng, n);
    for (int64_t i = 0; i < n; ++i) x.samples[i] += y.samples[i];
    const double base = SdrLoss(x, y);
    for (double alpha : {1e-2, 0.3, 7.0, 1e3}) {
      Waveform xs = x;
      for (double& v : xs.samples) v *= alpha;
      scale_err = std::max(scale_err, std::abs(SdrLoss(xs, y) - base) / base);
    }
  }
  // x = y with z supported where y is zero.
  const int64_t n = 2048;
  Waveform y{std::vector<double>(n, 0.0), 16000.0};
  Waveform z{std::vector<double>(n, 0.0), 16000.0};
  std::normal_distribution<double> nd;
  for (int64_t i = 0; i < n; ++i) (i < n / 2 ? y : z).samples[i] = nd(rng);
  const double sir_at_min = SirLoss(y, y, z);

  // Orthonormal y, z in 8 dimensions from Gram-Schmidt.
  std::vector<double> e1 = Gaussian(rng, 8), e2 = Gaussian(rng, 8);
  const double n1 = std::sqrt(static_cast<double>(DotL(e1, e1)));
  for (double& v : e1) v /= n1;
  const double proj = static_cast<double>(DotL(e1, e2));
  for (int i = 0; i < 8; ++i) e2[i] -= proj * e1[i];
  const double n2 = std::sqrt(static_cast<double>(DotL(e2, e2)));
  for (double& v : e2) v /= n2;
  const Waveform yo{e1, 16000.0}, zo{e2, 16000.0};
  Waveform sum = yo;
  for (int i = 0; i < 8; ++i) sum.samples[i] += e2[i];
  const double sar_sum = SarLoss(sum, yo, zo);
  double oracle_err = 0.0;
  int violations = 0;
  for (int k = 0; k < 10000; ++k) {
    std::vector<double> u = Gaussian(rng, 8);
    const double nu = std::sqrt(static_cast<double>(DotL(u, u)));
    for (double& v : u) v /= nu;
    const double l = SarLoss(Waveform{u, 16000.0}, yo, zo);
    const double oracle = static_cast<double>(SarOracle(u, e1, e2));
    oracle_err = std::max(oracle_err, std::abs(l - oracle) / oracle);
    if (!(sar_sum <= l)) ++violations;
  }
  o.pass = scale_err <= 1e-10 && sir_at_min == 0.0 && std::abs(sar_sum - 1.0) <= 1e-10 &&
           violations == 0 && oracle_err <= 1e-9;
  o.detail = Fmt("sdr scale drift %.1e; sir(y,y,z) = %g; ", scale_err, sir_at_min) +
             Fmt("sar(y+z) - 1 = %.1e; %.0f of 10000 below; oracle error %.1e", sar_sum - 1.0,
                 violations, oracle_err);
  return o;
}

// ---------------------------------------------------------------------------
// 6. Unity normalization for the seven composite costs.

Dataset VoiceDataset(int pairs, int64_t len, uint64_t seed) {
  Dataset ds;
  for (int p = 0; p < pairs; ++p) {
    testing::VoiceParams lo = testing::LowVoice(), hi = testing::HighVoice();
    lo.f0 += 7.0 * p;
    hi.f0 += 11.0 * p;
    ds.pairs.push_back(MixAtSnr(SyntheticVoice(hi, seed + 2 * p, len),
                                SyntheticVoice(lo, seed + 2 * p + 1, len), 0.0));
    ds.sources.emplace_back("target" + std::to_string(p), "interference" + std::to_string(p));
  }
  return ds;
}

NetworkConfig CompactNetwork(WeightSharing sharing) {
  NetworkConfig net;
  net.components = 256;
  net.taps = 256;
  net.hidden = 256;
  net.stride = 16;
  net.sharing = sharing;
  return net;
}

Outcome Criterion6() {
  const std::vector<std::string> costs = {
      "mse", "sdr", "sdr:0.75+stoi:0.25", "sdr:0.5+stoi:0.5",
      "sir:0.75+sar:0.25", "sir:0.5+sar:0.5", "sir:0.25+sar:0.75"};
  const Dataset ds = VoiceDataset(12, 12000, 60);
  const NetworkConfig net = CompactNetwork(WeightSharing::kIndependent);
  const StoiConfig stoi;
  TrainConfig tc;
  tc.epochs = 0;
  tc.excerpt_len = 10240;
  tc.seed = 6;
  double worst = 0.0;
  for (const std::string& cost : costs) {
    tc.cost = cost;
    const FitResult r = Fit(ds, net, tc, stoi);
    const TrainingGraph g(net, r.cost, stoi, tc.excerpt_len, tc.trim, tc.loss_epsilon);
    const int64_t batch = std::min<int64_t>(10, ds.pairs.size());
    std::vector<double> mean(r.cost.components.size(), 0.0);
    for (int64_t p = 0; p < batch; ++p) {
      const StepResult s =
          EvaluateLoss(r.checkpoint.params, g, CutExcerpt(ds.pairs[p], 0, g));
      for (size_t k = 0; k < mean.size(); ++k) mean[k] += s.components[k] / batch;
    }
    for (size_t k = 0; k < mean.size(); ++k) {
      worst = std::max(worst, std::abs(mean[k] * r.cost.components[k].scale - 1.0));
    }
  }
  return {worst <= 1e-6, Fmt("max |scaled - 1| = %.2e over 7 costs, batch of 10", worst)};
}

// ---------------------------------------------------------------------------
// 7-9. Training on a synthetic two-voice mixture.

struct OverfitRun {
  FitResult fit;
  double sdr_gain_db = 0.0;
  double est_sdr = 0.0, mix_sdr = 0.0;
  double est_stoi = 0.0, mix_stoi = 0.0;
  double seconds = 0.0;
  bool shared_tied = true;
  std::vector<std::string> log_lines;
};

constexpr int64_t kVoiceLen = 32000;  // 2 s at 16 kHz

OverfitRun RunOverfit(const std::string& cost, WeightSharing sharing) {
  Dataset ds;
  ds.pairs.push_back(MixAtSnr(SyntheticVoice(testing::HighVoice(), 71, kVoiceLen),
                              SyntheticVoice(testing::LowVoice(), 72, kVoiceLen), 0.0));
  ds.sources.emplace_back("high", "low");
  const NetworkConfig net = CompactNetwork(sharing);
  const StoiConfig stoi;
  TrainConfig tc;
  tc.cost = cost;
  tc.epochs = 500;
  tc.excerpt_len = kVoiceLen;
  tc.seed = 7;

  OverfitRun run;
  std::mt19937_64 rng(8);
  const Waveform probe_signal = GaussianWave(rng, 2048);
  FitOptions opt;
  opt.on_log = [&](const LogEntry& e) { run.log_lines.push_back(ToJsonLine(e)); };
  opt.on_step = [&](const SeparatorParams& p, int64_t) {
    if (p.config().sharing != WeightSharing::kShared) return;
    if (!p.synthesis().BitwiseEqual(p.analysis())) run.shared_tied = false;
  };
  const auto start = std::chrono::steady_clock::now();
  run.fit = Fit(ds, net, tc, stoi, opt);
  run.seconds = Seconds(start);

  const MixturePair& pair = ds.pairs.front();
  const Waveform est = Separate(pair.mixture, run.fit.checkpoint.params);
  const int64_t len = est.size() - 2 * tc.trim;
  const Waveform x = Cut(est, tc.trim, len), m = Cut(pair.mixture, tc.trim, len);
  const Waveform y = Cut(pair.target, tc.trim, len), z = Cut(pair.interference, tc.trim, len);
  const EvalReport e = EvaluateSeparation(x, y, z, stoi);
  const EvalReport b = EvaluateSeparation(m, y, z, stoi);
  run.est_sdr = e.sdr_db;
  run.mix_sdr = b.sdr_db;
  run.sdr_gain_db = e.sdr_db - b.sdr_db;
  run.est_stoi = e.stoi;
  run.mix_stoi = b.stoi;
  return run;
}

// The synthesis operator of a shared-weight network must be the adjoint of
// its analysis operator: <A s, F> == <s, A^T F>.
double AdjointMismatch(const SeparatorParams& p) {
  std::mt19937_64 rng(9);
  const NetworkConfig& c = p.config();
  const int64_t n = c.taps + 63 * c.stride;
  const Tensor s = GaussianTensor(rng, {n});
  const Tensor f = GaussianTensor(rng, {c.components, c.NumFrames(n)});
  Graph g;
  const NodeId sn = g.Input("s", {n});
  const NodeId fn = g.Input("f", f.shape());
  const NodeId an = g.Input("analysis", p.analysis().shape());
  const NodeId sy = g.Input("synthesis", p.synthesis().shape());
  const NodeId fwd = g.Conv1d(sn, an, c.stride);
  const NodeId adj = g.ConvTranspose1d(fn, sy, c.stride);
  Inputs in;
  in.Bind("s", s).Bind("f", f).Bind("analysis", p.analysis()).Bind("synthesis", p.synthesis());
  const Evaluation ev = Evaluate(g, in);
  const double lhs = InnerProduct(ev[fwd].values(), f.values());
  const double rhs = InnerProduct(s.values(), ev[adj].values());
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
}

const OverfitRun& SdrRun() {
  static const OverfitRun run = RunOverfit("sdr", WeightSharing::kShared);
  return run;
}

Outcome Criterion7() {
  const OverfitRun& a = SdrRun();
  const OverfitRun b = RunOverfit("sdr:0.75+stoi:0.25", WeightSharing::kShared);
  const double secs = a.seconds + b.seconds;
  Outcome o;
  o.pass = a.sdr_gain_db >= 6.0 && b.est_stoi > b.mix_stoi && secs <= 300.0;
  o.detail = Fmt("sdr run: SDR %.2f dB vs mixture %.2f dB", a.est_sdr, a.mix_sdr) +
             Fmt(" (+%.2f dB); ", a.sdr_gain_db) +
             Fmt("sdr+stoi run: STOI %.4f vs mixture %.4f; ", b.est_stoi, b.mix_stoi) +
             Fmt("%.1f s", secs);
  return o;
}

Outcome Criterion8() {
  const OverfitRun& a = SdrRun();
  const double adj = AdjointMismatch(a.fit.checkpoint.params);
  const bool stored = a.fit.checkpoint.params.tensors().count(param::kSynthesis) != 0;
  Outcome o;
  o.pass = a.shared_tied && !stored && adj <= 1e-12;
  o.detail = std::string("synthesis tied to analysis after all 500 steps: ") +
             (a.shared_tied ? "yes" : "no") + Fmt("; adjoint mismatch %.1e", adj);
  return o;
}

Outcome Criterion9() {
  const OverfitRun& a = SdrRun();
  const OverfitRun b = RunOverfit("sdr", WeightSharing::kShared);
  const bool same_ckpt =
      SerializeCheckpoint(a.fit.checkpoint) == SerializeCheckpoint(b.fit.checkpoint);
  const bool same_log = a.log_lines == b.log_lines;
  return {same_ckpt && same_log, std::string("checkpoint identical: ") +
                                     (same_ckpt ? "yes" : "no") +
                                     "; log identical: " + (same_log ? "yes" : "no") +
                                     Fmt(" (%.0f lines)", static_cast<double>(a.log_lines.size()))};
}

}  // namespace
}  // namespace aetsep

int main(int argc, char** argv) {
  using aetsep::Outcome;
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"gradient correctness", aetsep::Criterion1},
      {"SDR surrogate equals projection SDR", aetsep::Criterion2},
      {"BSS decomposition and SIR closed form", aetsep::Criterion3},
      {"STOI properties", aetsep::Criterion4},
      {"loss minima and invariances", aetsep::Criterion5},
      {"unity normalization", aetsep::Criterion6},
      {"overfit smoke test", aetsep::Criterion7},
      {"shared-weight invariant", aetsep::Criterion8},
      {"determinism", aetsep::Criterion9},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
