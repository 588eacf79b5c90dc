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

#ifndef AETSEP_CHECKPOINT_H_
#define AETSEP_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aetsep/aet_net.h"
#include "aetsep/tensor.h"

namespace aetsep {

inline constexpr int kCheckpointFormatVersion = 1;

// First and second moment estimates of the adaptive optimizer, keyed by
// parameter name. Empty for plain SGD.
struct OptimizerState {
  int64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

struct TrainingProgress {
  int64_t epochs_completed = 0;
  int64_t steps_completed = 0;
  std::string cost;                 // cost specification string
  std::vector<double> cost_scales;  // unity-normalization factors
};

struct Checkpoint {
  SeparatorParams params;
  OptimizerState optimizer;
  TrainingProgress progress;
};

std::string Base64Encode(std::string_view bytes);
// Throws kCorruptFile on malformed input.
std::string Base64Decode(std::string_view text);

// JSON: {format_version, config, tensors: {name: {shape, data}}, training}.
// Tensor data is base64 of little-endian IEEE doubles, row-major.
std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DeserializeCheckpoint(std::string_view text);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace aetsep

#endif  // AETSEP_CHECKPOINT_H_
