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

#include "aetsep/aet_net.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "aetsep/error.h"

namespace aetsep {
namespace {

constexpr int64_t kBasisDftSize = 4096;

NodeId ParamInput(Graph& g, const std::string& name, Shape shape) {
  if (auto id = g.FindInput(name)) {
    if (g.shape(*id) != shape) {
      throw Error(ErrorCode::kShapeError, "parameter '" + name + "' declared twice");
    }
    return *id;
  }
  return g.Input(name, std::move(shape));
}

Shape ShapeOf(const NetworkConfig& c, const std::string& name) {
  if (name == param::kAnalysis || name == param::kSynthesis) return {c.components, c.taps};
  if (name == param::kSmoothing) return {c.smoothing_width};
  if (name == param::kDense1Weight) return {c.hidden, c.components};
  if (name == param::kDense1Bias) return {c.hidden};
  if (name == param::kDense2Weight) return {c.components, c.hidden};
  if (name == param::kDense2Bias) return {c.components};
  throw Error(ErrorCode::kShapeError, "unknown parameter '" + name + "'");
}

std::vector<std::string> ParamNames(const NetworkConfig& c) {
  std::vector<std::string> names = {param::kAnalysis,     param::kSmoothing,
                                    param::kDense1Weight, param::kDense1Bias,
                                    param::kDense2Weight, param::kDense2Bias};
  if (c.sharing == WeightSharing::kIndependent) names.push_back(param::kSynthesis);
  return names;
}

struct AnalysisNodes {
  NodeId x, m, p;
};

AnalysisNodes AddAnalysis(Graph& g, NodeId signal, const NetworkConfig& c) {
  const NodeId filters = ParamInput(g, param::kAnalysis, ShapeOf(c, param::kAnalysis));
  const NodeId raw = ParamInput(g, param::kSmoothing, ShapeOf(c, param::kSmoothing));
  AnalysisNodes n;
  n.x = g.Conv1d(signal, filters, c.stride);
  const NodeId soft = g.Softplus(raw);
  const NodeId kernel =
      g.Div(soft, g.Scale(g.Mean(soft), static_cast<double>(c.smoothing_width)));
  n.m = g.AddScalar(g.RowConv(g.Abs(n.x), kernel), c.modulation_epsilon);
  n.p = g.Div(n.x, n.m);
  return n;
}

NodeId AddSeparator(Graph& g, NodeId modulation, const NetworkConfig& c) {
  const NodeId w1 = ParamInput(g, param::kDense1Weight, ShapeOf(c, param::kDense1Weight));
  const NodeId b1 = ParamInput(g, param::kDense1Bias, ShapeOf(c, param::kDense1Bias));
  const NodeId w2 = ParamInput(g, param::kDense2Weight, ShapeOf(c, param::kDense2Weight));
  const NodeId b2 = ParamInput(g, param::kDense2Bias, ShapeOf(c, param::kDense2Bias));
  const NodeId hidden = g.Softplus(g.Dense(w1, modulation, b1));
  return g.Softplus(g.Dense(w2, hidden, b2));
}

NodeId AddSynthesis(Graph& g, NodeId estimate, NodeId carrier, const NetworkConfig& c) {
  const char* bank =
      c.sharing == WeightSharing::kShared ? param::kAnalysis : param::kSynthesis;
  const NodeId filters = ParamInput(g, bank, ShapeOf(c, bank));
  return g.ConvTranspose1d(g.Mul(estimate, carrier), filters, c.stride);
}

Tensor SignalTensor(const Waveform& w) { return Tensor({w.size()}, w.samples); }

void RequireRate(const Waveform& w, const NetworkConfig& c) {
  if (w.sample_rate != c.sample_rate) {
    throw Error(ErrorCode::kConfigError,
                "input sample rate " + std::to_string(w.sample_rate) +
                    " differs from the network rate " + std::to_string(c.sample_rate));
  }
}

void RequireLength(const Waveform& w, const NetworkConfig& c) {
  if (w.size() < c.taps) {
    throw Error(ErrorCode::kSignalTooShort, "input has " + std::to_string(w.size()) +
                                                " samples, network needs " +
                                                std::to_string(c.taps));
  }
}

}  // namespace

void NetworkConfig::Validate() const {
  if (components < 1 || taps < 1 || stride < 1 || hidden < 1) {
    throw Error(ErrorCode::kConfigError, "network sizes must be positive");
  }
  if (smoothing_width < 1 || smoothing_width % 2 == 0) {
    throw Error(ErrorCode::kConfigError, "smoothing width must be a positive odd number");
  }
  if (!(modulation_epsilon > 0.0)) {
    throw Error(ErrorCode::kConfigError, "modulation epsilon must be positive");
  }
  if (!(sample_rate > 0.0)) throw Error(ErrorCode::kConfigError, "sample rate must be positive");
}

int64_t NetworkConfig::NumFrames(int64_t length) const {
  return length < taps ? 0 : (length - taps) / stride + 1;
}

int64_t NetworkConfig::OutputLength(int64_t length) const {
  const int64_t frames = NumFrames(length);
  return frames == 0 ? 0 : (frames - 1) * stride + taps;
}

SeparatorParams::SeparatorParams(NetworkConfig config, std::map<std::string, Tensor> tensors)
    : config_(config), tensors_(std::move(tensors)) {
  config_.Validate();
  const std::vector<std::string> expected = ParamNames(config_);
  if (tensors_.size() != expected.size()) {
    throw Error(ErrorCode::kShapeError, "parameter set does not match the weight-sharing mode");
  }
  for (const std::string& name : expected) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw Error(ErrorCode::kShapeError, "missing parameter " + name);
    if (it->second.shape() != ShapeOf(config_, name)) {
      throw Error(ErrorCode::kShapeError, "parameter " + name + " has shape " +
                                              ShapeToString(it->second.shape()));
    }
  }
}

const Tensor& SeparatorParams::synthesis() const {
  return config_.sharing == WeightSharing::kShared ? analysis()
                                                   : tensors_.at(param::kSynthesis);
}

std::vector<double> SeparatorParams::SmoothingKernel() const {
  const Tensor& raw = smoothing_raw();
  std::vector<double> k(raw.size());
  double sum = 0.0;
  for (int64_t i = 0; i < raw.size(); ++i) {
    k[i] = std::max(raw[i], 0.0) + std::log1p(std::exp(-std::abs(raw[i])));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<std::string> SeparatorParams::names() const { return ParamNames(config_); }

void SeparatorParams::Bind(Inputs& inputs) const {
  for (const auto& [name, t] : tensors_) inputs.Bind(name, t);
}

bool SeparatorParams::BitwiseEqual(const SeparatorParams& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (const auto& [name, t] : tensors_) {
    auto it = other.tensors_.find(name);
    if (it == other.tensors_.end() || !t.BitwiseEqual(it->second)) return false;
  }
  return true;
}

SeparatorParams InitParams(uint64_t seed, const NetworkConfig& config) {
  config.Validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](const std::string& name, int64_t fan_in, int64_t fan_out) {
    Tensor t(ShapeOf(config, name));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.values()) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = bound * (2.0 * u - 1.0);
    }
    return t;
  };
  std::map<std::string, Tensor> tensors;
  tensors[param::kAnalysis] = uniform(param::kAnalysis, config.taps, config.components);
  tensors[param::kDense1Weight] = uniform(param::kDense1Weight, config.components, config.hidden);
  tensors[param::kDense2Weight] = uniform(param::kDense2Weight, config.hidden, config.components);
  if (config.sharing == WeightSharing::kIndependent) {
    tensors[param::kSynthesis] = uniform(param::kSynthesis, config.components, config.taps);
  }
  tensors[param::kSmoothing] = Tensor(ShapeOf(config, param::kSmoothing));
  tensors[param::kDense1Bias] = Tensor(ShapeOf(config, param::kDense1Bias));
  tensors[param::kDense2Bias] = Tensor(ShapeOf(config, param::kDense2Bias));
  return SeparatorParams(config, std::move(tensors));
}

NetworkNodes AddSeparatorNetwork(Graph& g, NodeId signal, int64_t length,
                                 const NetworkConfig& config) {
  config.Validate();
  if (length < config.taps) {
    throw Error(ErrorCode::kSignalTooShort, "input shorter than the analysis filters");
  }
  const AnalysisNodes a = AddAnalysis(g, signal, config);
  NetworkNodes n;
  n.representation = a.x;
  n.modulation = a.m;
  n.carrier = a.p;
  n.estimate = AddSeparator(g, a.m, config);
  n.output = AddSynthesis(g, n.estimate, a.p, config);
  return n;
}

AetRepresentation AnalysisForward(const Waveform& w, const SeparatorParams& params) {
  const NetworkConfig& c = params.config();
  RequireLength(w, c);
  Graph g;
  const NodeId signal = g.Input("signal", {w.size()});
  const AnalysisNodes a = AddAnalysis(g, signal, c);
  const Tensor input = SignalTensor(w);
  Inputs in;
  in.Bind("signal", input);
  params.Bind(in);
  const Evaluation ev = Evaluate(g, in);
  return AetRepresentation{ev[a.x], ev[a.m], ev[a.p]};
}

Tensor SeparatorForward(const Tensor& modulation, const SeparatorParams& params) {
  const NetworkConfig& c = params.config();
  if (modulation.rank() != 2 || modulation.dim(0) != c.components) {
    throw Error(ErrorCode::kShapeError, "modulation must have " + std::to_string(c.components) +
                                            " rows, got " + ShapeToString(modulation.shape()));
  }
  Graph g;
  const NodeId m = g.Input("modulation", modulation.shape());
  const NodeId out = AddSeparator(g, m, c);
  Inputs in;
  in.Bind("modulation", modulation);
  params.Bind(in);
  return Evaluate(g, in)[out];
}

Waveform SynthesisForward(const Tensor& estimate, const Tensor& carrier,
                          const SeparatorParams& params) {
  const NetworkConfig& c = params.config();
  if (estimate.shape() != carrier.shape() || estimate.rank() != 2 ||
      estimate.dim(0) != c.components) {
    throw Error(ErrorCode::kShapeError, "estimate " + ShapeToString(estimate.shape()) +
                                            " and carrier " + ShapeToString(carrier.shape()) +
                                            " do not match the network");
  }
  Graph g;
  const NodeId e = g.Input("estimate", estimate.shape());
  const NodeId p = g.Input("carrier", carrier.shape());
  const NodeId out = AddSynthesis(g, e, p, c);
  Inputs in;
  in.Bind("estimate", estimate).Bind("carrier", carrier);
  params.Bind(in);
  Waveform w;
  w.sample_rate = c.sample_rate;
  w.samples = Evaluate(g, in)[out].storage();
  return w;
}

Waveform Separate(const Waveform& mixture, const SeparatorParams& params) {
  const NetworkConfig& c = params.config();
  RequireRate(mixture, c);
  RequireLength(mixture, c);
  Graph g;
  const NodeId signal = g.Input("signal", {mixture.size()});
  const NetworkNodes n = AddSeparatorNetwork(g, signal, mixture.size(), c);
  const Tensor input = SignalTensor(mixture);
  Inputs in;
  in.Bind("signal", input);
  params.Bind(in);
  Waveform w;
  w.sample_rate = c.sample_rate;
  w.samples = Evaluate(g, in)[n.output].storage();
  return w;
}

Waveform SeparateFullLength(const Waveform& mixture, const SeparatorParams& params) {
  const NetworkConfig& c = params.config();
  RequireRate(mixture, c);
  const int64_t pad = c.taps - c.stride;
  int64_t padded = mixture.size() + 2 * pad;
  padded = std::max(padded, c.taps);
  padded += (c.stride - (padded - c.taps) % c.stride) % c.stride;
  Waveform in;
  in.sample_rate = mixture.sample_rate;
  in.samples.assign(padded, 0.0);
  std::copy(mixture.samples.begin(), mixture.samples.end(), in.samples.begin() + pad);
  const Waveform full = Separate(in, params);
  Waveform out;
  out.sample_rate = mixture.sample_rate;
  out.samples.assign(full.samples.begin() + pad, full.samples.begin() + pad + mixture.size());
  return out;
}

BasisOrder OrderBasesByDominantFrequency(const SeparatorParams& params, double sample_rate) {
  const Tensor& filters = params.analysis();
  const int64_t count = filters.dim(0), taps = filters.dim(1);
  if (taps > kBasisDftSize) {
    throw Error(ErrorCode::kShapeError, "filters longer than the basis DFT size");
  }
  const int64_t bins = kBasisDftSize / 2 + 1;
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat cos_basis(taps, bins), sin_basis(taps, bins);
  for (int64_t n = 0; n < taps; ++n) {
    for (int64_t k = 0; k < bins; ++k) {
      const double phase =
          2.0 * M_PI * static_cast<double>((n * k) % kBasisDftSize) / kBasisDftSize;
      cos_basis(n, k) = std::cos(phase);
      sin_basis(n, k) = std::sin(phase);
    }
  }
  const Eigen::Map<const RowMat> w(filters.data(), count, taps);
  const RowMat re = w * cos_basis;
  const RowMat im = w * sin_basis;

  BasisOrder order;
  order.dominant_frequency.resize(count);
  for (int64_t f = 0; f < count; ++f) {
    int64_t best = 0;
    double best_power = -1.0;
    for (int64_t k = 0; k < bins; ++k) {
      const double p = re(f, k) * re(f, k) + im(f, k) * im(f, k);
      if (p > best_power) {
        best_power = p;
        best = k;
      }
    }
    order.dominant_frequency[f] = static_cast<double>(best) * sample_rate / kBasisDftSize;
  }
  order.permutation.resize(count);
  std::iota(order.permutation.begin(), order.permutation.end(), 0);
  std::stable_sort(order.permutation.begin(), order.permutation.end(),
                   [&](int64_t a, int64_t b) {
                     return order.dominant_frequency[a] < order.dominant_frequency[b];
                   });
  return order;
}

std::string ExportBasesCsv(const SeparatorParams& params, double sample_rate) {
  const BasisOrder order = OrderBasesByDominantFrequency(params, sample_rate);
  const Tensor& filters = params.analysis();
  std::string out;
  char buf[40];
  for (int64_t f : order.permutation) {
    std::snprintf(buf, sizeof(buf), "%.17g", order.dominant_frequency[f]);
    out += buf;
    for (int64_t k = 0; k < filters.dim(1); ++k) {
      std::snprintf(buf, sizeof(buf), ",%.17g", filters.at(f, k));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace aetsep
