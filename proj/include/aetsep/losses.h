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

#ifndef AETSEP_LOSSES_H_
#define AETSEP_LOSSES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aetsep/dsp.h"
#include "aetsep/graph.h"
#include "aetsep/signal_io.h"

namespace aetsep {

inline constexpr double kDefaultLossEpsilon = 1e-12;

struct StoiConfig {
  int64_t frame_len = 256;
  int64_t fft_len = 512;
  int64_t hop = 128;
  int num_bands = 15;
  double lowest_center = 150.0;
  int64_t segment_frames = 30;
  double clip_beta_db = -15.0;
  double analysis_rate = 10000.0;
  double epsilon = 1e-12;
  BandPool band_pool = BandPool::kL2;

  // Upper clipping factor 1 + 10^(-beta / 20).
  double clip_factor() const;
  void Validate() const;
};

enum class LossKind { kMse, kSdr, kSir, kSar, kStoi };

std::string_view LossKindName(LossKind kind);
std::optional<LossKind> ParseLossKind(std::string_view name);

struct CostComponent {
  LossKind kind = LossKind::kMse;
  double weight = 1.0;
  // Unity-normalization factor c_i; 1 until NormalizeCostScales runs.
  double scale = 1.0;
  // Multiplier applied to the raw loss before anything else (e.g. a unit
  // change); the normalization absorbs it.
  double gain = 1.0;
};

// Weighted sum of loss components: sum_i w_i * c_i * gain_i * L_i.
struct CompositeCost {
  std::vector<CostComponent> components;

  // Accepts "mse", "sdr", "sir:0.75+sar:0.25", ... Weights are positive
  // decimals and default to 1; repeated components are rejected.
  static CompositeCost Parse(std::string_view spec);
  std::string ToString() const;
  bool Uses(LossKind kind) const;
  double weight_sum() const;
};

// c_i = 1 / initial_losses[i]. Throws kDegenerateScale for non-positive or
// non-finite initial losses.
CompositeCost NormalizeCostScales(const CompositeCost& cost,
                                  std::span<const double> initial_losses);

double InnerProduct(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Graph builders. x, y, z are rank-1 nodes of equal length.

NodeId AddMseLoss(Graph& g, NodeId x, NodeId y);
// <x,x> / (<x,y>^2 + eps)
NodeId AddSdrLoss(Graph& g, NodeId x, NodeId y, double eps);
// <x,z>^2 / (<x,y>^2 + eps)
NodeId AddSirLoss(Graph& g, NodeId x, NodeId y, NodeId z, double eps);
// <x,x> / (<x,y>^2/<y,y> + <x,z>^2/<z,z> + eps)
NodeId AddSarLoss(Graph& g, NodeId x, NodeId y, NodeId z, double eps);

struct StoiNodes {
  NodeId loss;           // 1 - stoi
  NodeId stoi;           // mean of d
  NodeId intelligibility;  // d flattened band-major, [bands * segments]
  int64_t num_bands = 0;
  int64_t num_segments = 0;
};

// `length` and `sample_rate` describe x and y. Signals are resampled to the
// analysis rate inside the graph when the rates differ.
StoiNodes AddStoiLoss(Graph& g, NodeId x, NodeId y, int64_t length, double sample_rate,
                      const StoiConfig& cfg);

struct CompositeNodes {
  NodeId total;
  std::vector<NodeId> raw;  // gain_i * L_i, one per component
  std::optional<int64_t> stoi_bands;
};

CompositeNodes AddCompositeLoss(Graph& g, const CompositeCost& cost, NodeId x, NodeId y,
                                NodeId z, int64_t length, double sample_rate,
                                const StoiConfig& cfg, double eps = kDefaultLossEpsilon);

// ---------------------------------------------------------------------------
// Value-level entry points; each evaluates the graph builders above.

double MseLoss(const Waveform& x, const Waveform& y);
double SdrLoss(const Waveform& x, const Waveform& y, double eps = kDefaultLossEpsilon);
double SirLoss(const Waveform& x, const Waveform& y, const Waveform& z,
               double eps = kDefaultLossEpsilon);
double SarLoss(const Waveform& x, const Waveform& y, const Waveform& z,
               double eps = kDefaultLossEpsilon);

struct StoiResult {
  double stoi = 0.0;
  double loss = 0.0;  // 1 - stoi as computed in the loss graph
  Tensor d;           // [bands, segments]
};

StoiResult StoiForward(const Waveform& x, const Waveform& y, const StoiConfig& cfg);
double StoiLoss(const Waveform& x, const Waveform& y, const StoiConfig& cfg);

// Raw per-component values gain_i * L_i, in component order.
std::vector<double> ComponentLosses(const CompositeCost& cost, const Waveform& x,
                                    const Waveform& y, const Waveform& z,
                                    const StoiConfig& cfg, double eps = kDefaultLossEpsilon);
double CompositeLoss(const CompositeCost& cost, const Waveform& x, const Waveform& y,
                     const Waveform& z, const StoiConfig& cfg,
                     double eps = kDefaultLossEpsilon);

}  // namespace aetsep

#endif  // AETSEP_LOSSES_H_
