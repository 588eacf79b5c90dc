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

#ifndef AETSEP_TRAINER_H_
#define AETSEP_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aetsep/aet_net.h"
#include "aetsep/checkpoint.h"
#include "aetsep/error.h"
#include "aetsep/graph.h"
#include "aetsep/losses.h"
#include "aetsep/signal_io.h"

namespace aetsep {

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  std::string cost = "sdr";
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int64_t epochs = 1;
  uint64_t seed = 0;
  double snr_db = 0.0;
  int64_t excerpt_len = 32768;  // 0 trains on full utterances
  int64_t trim = 1024;          // samples removed at each end before the loss
  double loss_epsilon = kDefaultLossEpsilon;
  int64_t normalization_pairs = 10;

  void Validate() const;
};

enum class Split { kTrain, kTest };

struct Dataset {
  std::vector<MixturePair> pairs;
  // Source file of each pair's target and interference.
  std::vector<std::pair<std::string, std::string>> sources;
  Split split = Split::kTrain;
};

// Pairs the WAV files of two directories after independent seeded shuffles
// (zip, truncated to the shorter list), resamples to `sample_rate` and mixes
// at `snr_db`. Throws kNoData if a directory holds no WAV file.
Dataset BuildDataset(const std::filesystem::path& target_dir,
                     const std::filesystem::path& interference_dir, double snr_db,
                     uint64_t seed, double sample_rate, Split split = Split::kTrain);

// True if no source file appears in both datasets.
bool SourcesDisjoint(const Dataset& a, const Dataset& b);

// Network + composite loss for one excerpt length. The network output is
// trimmed by `trim` samples at both ends; the bound target and interference
// must already be cut to the same span.
class TrainingGraph {
 public:
  TrainingGraph(const NetworkConfig& network, const CompositeCost& cost,
                const StoiConfig& stoi, int64_t excerpt_len, int64_t trim,
                double loss_epsilon);

  const Graph& graph() const { return graph_; }
  int64_t excerpt_len() const { return excerpt_len_; }
  int64_t trim() const { return trim_; }
  // Length of the trimmed signals that enter the loss.
  int64_t loss_len() const { return loss_len_; }
  NodeId total() const { return total_; }
  const std::vector<NodeId>& components() const { return components_; }
  NodeId output() const { return output_; }
  std::optional<int64_t> stoi_bands() const { return stoi_bands_; }

 private:
  Graph graph_;
  int64_t excerpt_len_;
  int64_t trim_;
  int64_t loss_len_ = 0;
  NodeId total_;
  NodeId output_;
  std::vector<NodeId> components_;
  std::optional<int64_t> stoi_bands_;
};

// Aligned slices of a mixture pair.
struct Excerpt {
  Tensor mixture;       // [excerpt_len]
  Tensor target;        // [loss_len], already trimmed
  Tensor interference;  // [loss_len]
};

Excerpt CutExcerpt(const MixturePair& pair, int64_t offset, const TrainingGraph& graph);

struct StepResult {
  double loss = 0.0;               // scaled composite, before the update
  std::vector<double> components;  // raw component values
};

// Evaluates the composite loss and its exact gradient, then applies one
// optimizer step. Throws kNumericalDivergence on a non-finite loss or
// gradient, leaving params and state untouched.
StepResult TrainStep(SeparatorParams& params, OptimizerState& state,
                     const TrainingGraph& graph, const Excerpt& excerpt,
                     const TrainConfig& config);

// Loss components without an update.
StepResult EvaluateLoss(const SeparatorParams& params, const TrainingGraph& graph,
                        const Excerpt& excerpt);

struct LogEntry {
  std::string phase;  // "normalize" or "train"
  int64_t epoch = 0;
  int64_t step = 0;
  std::vector<std::pair<std::string, double>> components;  // raw values
  double total = 0.0;
};

std::string ToJsonLine(const LogEntry& entry);

struct FitOptions {
  std::optional<Checkpoint> resume;
  std::function<void(const LogEntry&)> on_log;
  // Called after every optimizer step.
  std::function<void(const SeparatorParams&, int64_t step)> on_step;
};

struct FitResult {
  Checkpoint checkpoint;
  CompositeCost cost;  // normalized
  std::vector<LogEntry> log;
  std::optional<int64_t> stoi_bands;
};

// Raised when training diverges; carries the state before the failing step.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::shared_ptr<const Checkpoint> last_good)
      : Error(ErrorCode::kNumericalDivergence, message), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return *last_good_; }

 private:
  std::shared_ptr<const Checkpoint> last_good_;
};

// Offset of the training excerpt for a given global step.
int64_t ExcerptOffset(uint64_t seed, int64_t step, int64_t pair_len, int64_t excerpt_len);
// Pair visiting order of an epoch.
std::vector<int64_t> EpochOrder(uint64_t seed, int64_t epoch, int64_t count);

FitResult Fit(const Dataset& dataset, const NetworkConfig& network, const TrainConfig& config,
              const StoiConfig& stoi, const FitOptions& options = {});

}  // namespace aetsep

#endif  // AETSEP_TRAINER_H_
