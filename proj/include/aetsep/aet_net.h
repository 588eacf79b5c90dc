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

#ifndef AETSEP_AET_NET_H_
#define AETSEP_AET_NET_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aetsep/graph.h"
#include "aetsep/signal_io.h"
#include "aetsep/tensor.h"

namespace aetsep {

enum class WeightSharing { kIndependent, kShared };

struct NetworkConfig {
  int64_t components = 1024;  // size of the adaptive representation
  int64_t taps = 1024;        // analysis / synthesis filter length
  int64_t stride = 16;
  int64_t smoothing_width = 5;
  int64_t hidden = 1024;
  WeightSharing sharing = WeightSharing::kIndependent;
  double modulation_epsilon = 1e-8;
  double sample_rate = 16000.0;

  void Validate() const;
  int64_t NumFrames(int64_t length) const;
  int64_t OutputLength(int64_t length) const;
};

// Parameter tensor names, also used as graph input names and checkpoint keys.
namespace param {
inline constexpr const char* kAnalysis = "analysis";
inline constexpr const char* kSmoothing = "smoothing";
inline constexpr const char* kDense1Weight = "dense1.weight";
inline constexpr const char* kDense1Bias = "dense1.bias";
inline constexpr const char* kDense2Weight = "dense2.weight";
inline constexpr const char* kDense2Bias = "dense2.bias";
inline constexpr const char* kSynthesis = "synthesis";
}  // namespace param

// Network weights. In shared mode no synthesis tensor is stored: synthesis()
// returns the analysis bank, so the tie survives any update.
class SeparatorParams {
 public:
  SeparatorParams() = default;
  SeparatorParams(NetworkConfig config, std::map<std::string, Tensor> tensors);

  const NetworkConfig& config() const { return config_; }

  const Tensor& analysis() const { return tensors_.at(param::kAnalysis); }
  const Tensor& synthesis() const;
  const Tensor& smoothing_raw() const { return tensors_.at(param::kSmoothing); }
  // softplus(raw) / sum(softplus(raw)): nonnegative, sums to one.
  std::vector<double> SmoothingKernel() const;

  const Tensor& tensor(const std::string& name) const { return tensors_.at(name); }
  Tensor& mutable_tensor(const std::string& name) { return tensors_.at(name); }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }
  std::vector<std::string> names() const;

  void Bind(Inputs& inputs) const;
  bool BitwiseEqual(const SeparatorParams& other) const;

 private:
  NetworkConfig config_;
  std::map<std::string, Tensor> tensors_;
};

// Uniform Glorot initialization, bound sqrt(6 / (fan_in + fan_out)); biases
// zero; smoothing kernel uniform.
SeparatorParams InitParams(uint64_t seed, const NetworkConfig& config);

struct NetworkNodes {
  NodeId representation;  // X  [components, frames]
  NodeId modulation;      // M
  NodeId carrier;         // P = X / M
  NodeId estimate;        // separator output, modulation of the target
  NodeId output;          // waveform [(frames - 1) * stride + taps]
};

// Declares the parameter inputs (see `param`) on first use.
NetworkNodes AddSeparatorNetwork(Graph& g, NodeId signal, int64_t length,
                                 const NetworkConfig& config);

struct AetRepresentation {
  Tensor representation;  // X
  Tensor modulation;      // M
  Tensor carrier;         // P
};

AetRepresentation AnalysisForward(const Waveform& w, const SeparatorParams& params);
Tensor SeparatorForward(const Tensor& modulation, const SeparatorParams& params);
Waveform SynthesisForward(const Tensor& estimate, const Tensor& carrier,
                          const SeparatorParams& params);
// Output covers input samples [0, OutputLength(len)).
Waveform Separate(const Waveform& mixture, const SeparatorParams& params);
// Zero-pads so every input sample is covered by full filter overlap, runs
// Separate and removes the padding; output length equals input length.
Waveform SeparateFullLength(const Waveform& mixture, const SeparatorParams& params);

struct BasisOrder {
  std::vector<int64_t> permutation;        // filter indices, ascending frequency
  std::vector<double> dominant_frequency;  // Hz, indexed by original filter
};

// Peak of each analysis filter's 4096-point magnitude spectrum.
BasisOrder OrderBasesByDominantFrequency(const SeparatorParams& params, double sample_rate);

// One row per analysis filter in ascending dominant frequency:
// frequency_hz, tap_0, ..., tap_{K-1}.
std::string ExportBasesCsv(const SeparatorParams& params, double sample_rate);

}  // namespace aetsep

#endif  // AETSEP_AET_NET_H_
