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

#include "aetsep/losses.h"

#include <cmath>
#include <cstdio>
#include <memory>
#include <regex>
#include <set>

#include "aetsep/error.h"

namespace aetsep {
namespace {

void RequireSameLength(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeError, "signals have lengths " + std::to_string(a.size()) +
                                            " and " + std::to_string(b.size()));
  }
}

Tensor AsTensor(const Waveform& w) { return Tensor({w.size()}, w.samples); }

// <a,b>^2 for rank-1 nodes.
NodeId SquaredInner(Graph& g, NodeId a, NodeId b) { return g.Square(g.Inner(a, b)); }

// Band envelopes [bands, frames] of a rank-1 node at the analysis rate.
NodeId BandEnvelope(Graph& g, NodeId signal, NodeId dft, NodeId band_weights, NodeId zero_bias,
                    int64_t bins, BandPool pool, int64_t hop) {
  const NodeId spec = g.Conv1d(signal, dft, hop);
  const NodeId re = g.Slice(spec, 0, 0, bins);
  const NodeId im = g.Slice(spec, 0, bins, 2 * bins);
  const NodeId power = g.Add(g.Square(re), g.Square(im));
  if (pool == BandPool::kL2) {
    return g.Sqrt(g.Dense(band_weights, power, zero_bias));
  }
  return g.Dense(band_weights, g.Sqrt(power), zero_bias);
}

}  // namespace

double StoiConfig::clip_factor() const { return 1.0 + std::pow(10.0, -clip_beta_db / 20.0); }

void StoiConfig::Validate() const {
  if (segment_frames < 1) throw Error(ErrorCode::kConfigError, "segment_frames must be >= 1");
  if (!(clip_beta_db < 0.0)) throw Error(ErrorCode::kConfigError, "clip beta must be negative");
  if (frame_len <= 0 || fft_len < frame_len) {
    throw Error(ErrorCode::kConfigError, "need 0 < frame_len <= fft_len");
  }
  if (hop * 2 != frame_len) throw Error(ErrorCode::kConfigError, "hop must be frame_len / 2");
  if (!(analysis_rate > 0.0) || !(lowest_center > 0.0) || num_bands < 1) {
    throw Error(ErrorCode::kConfigError, "invalid STOI band or rate settings");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kConfigError, "epsilon must be >= 0");
}

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kMse: return "mse";
    case LossKind::kSdr: return "sdr";
    case LossKind::kSir: return "sir";
    case LossKind::kSar: return "sar";
    case LossKind::kStoi: return "stoi";
  }
  return "unknown";
}

std::optional<LossKind> ParseLossKind(std::string_view name) {
  for (LossKind k : {LossKind::kMse, LossKind::kSdr, LossKind::kSir, LossKind::kSar,
                     LossKind::kStoi}) {
    if (LossKindName(k) == name) return k;
  }
  return std::nullopt;
}

CompositeCost CompositeCost::Parse(std::string_view spec) {
  static const std::regex kComponent(R"(^([a-z]+)(?::((?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)))?$)");
  CompositeCost cost;
  std::set<LossKind> seen;
  const std::string text(spec);
  if (text.empty()) throw Error(ErrorCode::kConfigError, "empty cost specification");
  size_t start = 0;
  while (true) {
    const size_t plus = text.find('+', start);
    const std::string part =
        text.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    std::smatch m;
    if (!std::regex_match(part, m, kComponent)) {
      throw Error(ErrorCode::kConfigError, "malformed cost component '" + part + "' in '" +
                                               text + "'");
    }
    const auto kind = ParseLossKind(m[1].str());
    if (!kind) throw Error(ErrorCode::kConfigError, "unknown loss '" + m[1].str() + "'");
    if (!seen.insert(*kind).second) {
      throw Error(ErrorCode::kConfigError, "loss '" + m[1].str() + "' listed twice");
    }
    CostComponent c;
    c.kind = *kind;
    c.weight = m[2].matched ? std::stod(m[2].str()) : 1.0;
    if (!(c.weight > 0.0)) {
      throw Error(ErrorCode::kConfigError, "weight of '" + m[1].str() + "' must be positive");
    }
    cost.components.push_back(c);
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return cost;
}

std::string CompositeCost::ToString() const {
  std::string out;
  for (const CostComponent& c : components) {
    if (!out.empty()) out += '+';
    out += LossKindName(c.kind);
    if (c.weight != 1.0 || components.size() > 1) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), ":%g", c.weight);
      out += buf;
    }
  }
  return out;
}

bool CompositeCost::Uses(LossKind kind) const {
  for (const CostComponent& c : components) {
    if (c.kind == kind) return true;
  }
  return false;
}

double CompositeCost::weight_sum() const {
  double s = 0.0;
  for (const CostComponent& c : components) s += c.weight;
  return s;
}

CompositeCost NormalizeCostScales(const CompositeCost& cost,
                                  std::span<const double> initial_losses) {
  if (initial_losses.size() != cost.components.size()) {
    throw Error(ErrorCode::kShapeError, "one initial loss per component is required");
  }
  CompositeCost out = cost;
  for (size_t i = 0; i < initial_losses.size(); ++i) {
    const double l = initial_losses[i];
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw Error(ErrorCode::kDegenerateScale,
                  std::string(LossKindName(cost.components[i].kind)) +
                      " has initial value " + std::to_string(l));
    }
    out.components[i].scale = 1.0 / l;
  }
  return out;
}

double InnerProduct(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeError, "inner product of vectors with different lengths");
  }
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

NodeId AddMseLoss(Graph& g, NodeId x, NodeId y) { return g.Mean(g.Square(g.Sub(x, y))); }

NodeId AddSdrLoss(Graph& g, NodeId x, NodeId y, double eps) {
  return g.Div(g.Inner(x, x), g.AddScalar(SquaredInner(g, x, y), eps));
}

NodeId AddSirLoss(Graph& g, NodeId x, NodeId y, NodeId z, double eps) {
  return g.Div(SquaredInner(g, x, z), g.AddScalar(SquaredInner(g, x, y), eps));
}

NodeId AddSarLoss(Graph& g, NodeId x, NodeId y, NodeId z, double eps) {
  const NodeId target = g.Div(SquaredInner(g, x, y), g.Inner(y, y));
  const NodeId interf = g.Div(SquaredInner(g, x, z), g.Inner(z, z));
  return g.Div(g.Inner(x, x), g.AddScalar(g.Add(target, interf), eps));
}

StoiNodes AddStoiLoss(Graph& g, NodeId x, NodeId y, int64_t length, double sample_rate,
                      const StoiConfig& cfg) {
  cfg.Validate();
  NodeId xr = x, yr = y;
  int64_t len = length;
  if (sample_rate != cfg.analysis_rate) {
    auto map = std::make_shared<const BandedLinearMap>(
        MakeResampler(length, sample_rate, cfg.analysis_rate));
    len = map->out_size();
    xr = g.LinearMap(x, map);
    yr = g.LinearMap(y, map);
  }
  const int64_t frames = NumFrames(len, cfg.frame_len, cfg.hop);
  if (frames < cfg.segment_frames) {
    throw Error(ErrorCode::kSignalTooShort,
                "STOI needs " + std::to_string(cfg.segment_frames) + " frames, got " +
                    std::to_string(frames));
  }
  const BandMatrix bands =
      OctaveBandMatrix(cfg.analysis_rate, cfg.fft_len, cfg.num_bands, cfg.lowest_center);
  const int64_t bins = cfg.fft_len / 2 + 1;
  const int64_t num_bands = bands.num_bands();
  const NodeId dft = g.Constant(HannDftFilters(cfg.frame_len, cfg.fft_len));
  const NodeId weights = g.Constant(bands.weights);
  const NodeId zero_bias = g.Constant(Tensor({num_bands}));
  const NodeId env_x = BandEnvelope(g, xr, dft, weights, zero_bias, bins, cfg.band_pool, cfg.hop);
  const NodeId env_y = BandEnvelope(g, yr, dft, weights, zero_bias, bins, cfg.band_pool, cfg.hop);

  const int64_t n = cfg.segment_frames;
  const double eps = cfg.epsilon;
  const NodeId clip = g.Scalar(cfg.clip_factor());
  std::vector<NodeId> d;
  d.reserve(num_bands * (frames - n + 1));
  for (int64_t j = 0; j < num_bands; ++j) {
    const NodeId row_x = g.Slice(env_x, 0, j, j + 1);
    const NodeId row_y = g.Slice(env_y, 0, j, j + 1);
    for (int64_t m = n - 1; m < frames; ++m) {
      const NodeId seg_x = g.Slice(row_x, 1, m - n + 1, m + 1);
      const NodeId seg_y = g.Slice(row_y, 1, m - n + 1, m + 1);
      // Normalize the processed segment to the clean energy, then clip it to
      // (1 + 10^(-beta/20)) times the clean segment.
      const NodeId gain = g.Div(g.L2Norm(seg_y), g.AddScalar(g.L2Norm(seg_x), eps));
      const NodeId clipped = g.Min(g.Mul(seg_x, gain), g.Mul(seg_y, clip));
      const NodeId cx = g.Sub(clipped, g.Mean(clipped));
      const NodeId cy = g.Sub(seg_y, g.Mean(seg_y));
      // A zero-variance segment has a zero numerator, so d = 0 there.
      const NodeId denom = g.AddScalar(g.Mul(g.L2Norm(cx), g.L2Norm(cy)), eps);
      d.push_back(g.Div(g.Inner(cx, cy), denom));
    }
  }
  StoiNodes out;
  out.num_bands = num_bands;
  out.num_segments = frames - n + 1;
  out.intelligibility = g.Concat(std::move(d));
  out.stoi = g.Mean(out.intelligibility);
  out.loss = g.Sub(g.Scalar(1.0), out.stoi);
  return out;
}

CompositeNodes AddCompositeLoss(Graph& g, const CompositeCost& cost, NodeId x, NodeId y,
                                NodeId z, int64_t length, double sample_rate,
                                const StoiConfig& cfg, double eps) {
  if (cost.components.empty()) throw Error(ErrorCode::kConfigError, "cost has no components");
  CompositeNodes out;
  std::vector<NodeId> terms;
  for (const CostComponent& c : cost.components) {
    NodeId raw;
    switch (c.kind) {
      case LossKind::kMse: raw = AddMseLoss(g, x, y); break;
      case LossKind::kSdr: raw = AddSdrLoss(g, x, y, eps); break;
      case LossKind::kSir: raw = AddSirLoss(g, x, y, z, eps); break;
      case LossKind::kSar: raw = AddSarLoss(g, x, y, z, eps); break;
      case LossKind::kStoi: {
        const StoiNodes stoi = AddStoiLoss(g, x, y, length, sample_rate, cfg);
        out.stoi_bands = stoi.num_bands;
        raw = stoi.loss;
        break;
      }
    }
    if (c.gain != 1.0) raw = g.Scale(raw, c.gain);
    out.raw.push_back(raw);
    terms.push_back(g.Scale(raw, c.weight * c.scale));
  }
  NodeId total = terms.front();
  for (size_t i = 1; i < terms.size(); ++i) total = g.Add(total, terms[i]);
  out.total = total;
  g.SetOutput(total);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct SignalGraph {
  Graph graph;
  NodeId x, y, z;
};

SignalGraph MakeSignalGraph(int64_t len, bool with_interference) {
  SignalGraph sg;
  sg.x = sg.graph.Input("x", {len});
  sg.y = sg.graph.Input("y", {len});
  if (with_interference) sg.z = sg.graph.Input("z", {len});
  return sg;
}

double EvalScalar(const SignalGraph& sg, NodeId out, const Waveform& x, const Waveform& y,
                  const Waveform* z) {
  const Tensor tx = AsTensor(x), ty = AsTensor(y);
  Tensor tz;
  Inputs in;
  in.Bind("x", tx).Bind("y", ty);
  if (z != nullptr) {
    tz = AsTensor(*z);
    in.Bind("z", tz);
  }
  return Evaluate(sg.graph, in)[out][0];
}

}  // namespace

double MseLoss(const Waveform& x, const Waveform& y) {
  RequireSameLength(x, y);
  SignalGraph sg = MakeSignalGraph(x.size(), false);
  const NodeId out = AddMseLoss(sg.graph, sg.x, sg.y);
  return EvalScalar(sg, out, x, y, nullptr);
}

double SdrLoss(const Waveform& x, const Waveform& y, double eps) {
  RequireSameLength(x, y);
  SignalGraph sg = MakeSignalGraph(x.size(), false);
  const NodeId out = AddSdrLoss(sg.graph, sg.x, sg.y, eps);
  return EvalScalar(sg, out, x, y, nullptr);
}

double SirLoss(const Waveform& x, const Waveform& y, const Waveform& z, double eps) {
  RequireSameLength(x, y);
  RequireSameLength(x, z);
  SignalGraph sg = MakeSignalGraph(x.size(), true);
  const NodeId out = AddSirLoss(sg.graph, sg.x, sg.y, sg.z, eps);
  return EvalScalar(sg, out, x, y, &z);
}

double SarLoss(const Waveform& x, const Waveform& y, const Waveform& z, double eps) {
  RequireSameLength(x, y);
  RequireSameLength(x, z);
  SignalGraph sg = MakeSignalGraph(x.size(), true);
  const NodeId out = AddSarLoss(sg.graph, sg.x, sg.y, sg.z, eps);
  return EvalScalar(sg, out, x, y, &z);
}

StoiResult StoiForward(const Waveform& x, const Waveform& y, const StoiConfig& cfg) {
  RequireSameLength(x, y);
  if (x.sample_rate != y.sample_rate) {
    throw Error(ErrorCode::kShapeError, "STOI inputs have different sample rates");
  }
  SignalGraph sg = MakeSignalGraph(x.size(), false);
  const StoiNodes nodes = AddStoiLoss(sg.graph, sg.x, sg.y, x.size(), x.sample_rate, cfg);
  const Tensor tx = AsTensor(x), ty = AsTensor(y);
  Inputs in;
  in.Bind("x", tx).Bind("y", ty);
  const Evaluation ev = Evaluate(sg.graph, in);
  StoiResult r;
  r.stoi = ev[nodes.stoi][0];
  r.loss = ev[nodes.loss][0];
  r.d = Tensor({nodes.num_bands, nodes.num_segments}, ev[nodes.intelligibility].storage());
  return r;
}

double StoiLoss(const Waveform& x, const Waveform& y, const StoiConfig& cfg) {
  return StoiForward(x, y, cfg).loss;
}

std::vector<double> ComponentLosses(const CompositeCost& cost, const Waveform& x,
                                    const Waveform& y, const Waveform& z,
                                    const StoiConfig& cfg, double eps) {
  RequireSameLength(x, y);
  RequireSameLength(x, z);
  SignalGraph sg = MakeSignalGraph(x.size(), true);
  const CompositeNodes nodes = AddCompositeLoss(sg.graph, cost, sg.x, sg.y, sg.z, x.size(),
                                                x.sample_rate, cfg, eps);
  const Tensor tx = AsTensor(x), ty = AsTensor(y), tz = AsTensor(z);
  Inputs in;
  in.Bind("x", tx).Bind("y", ty).Bind("z", tz);
  const Evaluation ev = Evaluate(sg.graph, in);
  std::vector<double> out;
  for (NodeId id : nodes.raw) out.push_back(ev[id][0]);
  return out;
}

double CompositeLoss(const CompositeCost& cost, const Waveform& x, const Waveform& y,
                     const Waveform& z, const StoiConfig& cfg, double eps) {
  RequireSameLength(x, y);
  RequireSameLength(x, z);
  SignalGraph sg = MakeSignalGraph(x.size(), true);
  const CompositeNodes nodes = AddCompositeLoss(sg.graph, cost, sg.x, sg.y, sg.z, x.size(),
                                                x.sample_rate, cfg, eps);
  return EvalScalar(sg, nodes.total, x, y, &z);
}

}  // namespace aetsep
