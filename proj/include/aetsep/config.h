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

#ifndef AETSEP_CONFIG_H_
#define AETSEP_CONFIG_H_

#include <filesystem>

#include "json.hpp"

#include "aetsep/aet_net.h"
#include "aetsep/losses.h"
#include "aetsep/trainer.h"

namespace aetsep {

// Everything an experiment needs, as read from a JSON config file.
struct ExperimentConfig {
  NetworkConfig network;
  TrainConfig train;
  StoiConfig stoi;
};

nlohmann::json NetworkConfigToJson(const NetworkConfig& c);
nlohmann::json TrainConfigToJson(const TrainConfig& c);
nlohmann::json StoiConfigToJson(const StoiConfig& c);
nlohmann::json ExperimentConfigToJson(const ExperimentConfig& c);

// Keys missing from `j` keep the value in `base`; unknown keys and
// ill-typed values throw kConfigError.
NetworkConfig NetworkConfigFromJson(const nlohmann::json& j, NetworkConfig base = {});
TrainConfig TrainConfigFromJson(const nlohmann::json& j, TrainConfig base = {});
StoiConfig StoiConfigFromJson(const nlohmann::json& j, StoiConfig base = {});
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j, ExperimentConfig base = {});

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

}  // namespace aetsep

#endif  // AETSEP_CONFIG_H_
