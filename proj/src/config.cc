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

#include "aetsep/config.h"

#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "aetsep/error.h"

namespace aetsep {
namespace {

using nlohmann::json;

// Applies each key of `j` through the matching setter; rejects unknown keys.
void ApplyKeys(const json& j, const std::string& section,
               const std::map<std::string, std::function<void(const json&)>>& setters) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kConfigError, "'" + section + "' must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw Error(ErrorCode::kConfigError, "unknown key '" + section + "." + key + "'");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfigError, "bad value for '" + section + "." + key + "': " +
                                               e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> Set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::string SharingName(WeightSharing s) {
  return s == WeightSharing::kShared ? "shared" : "independent";
}

WeightSharing ParseSharing(const std::string& s) {
  if (s == "shared") return WeightSharing::kShared;
  if (s == "independent") return WeightSharing::kIndependent;
  throw Error(ErrorCode::kConfigError, "weight_sharing must be 'shared' or 'independent'");
}

std::string PoolName(BandPool p) { return p == BandPool::kL1 ? "l1" : "l2"; }

BandPool ParsePool(const std::string& s) {
  if (s == "l2") return BandPool::kL2;
  if (s == "l1") return BandPool::kL1;
  throw Error(ErrorCode::kConfigError, "band_pool must be 'l2' or 'l1'");
}

std::string OptimizerName(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind ParseOptimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorCode::kConfigError, "optimizer must be 'sgd' or 'adam'");
}

}  // namespace

json NetworkConfigToJson(const NetworkConfig& c) {
  return json{{"components", c.components},
              {"taps", c.taps},
              {"stride", c.stride},
              {"smoothing_width", c.smoothing_width},
              {"hidden", c.hidden},
              {"weight_sharing", SharingName(c.sharing)},
              {"modulation_epsilon", c.modulation_epsilon},
              {"sample_rate", c.sample_rate}};
}

json TrainConfigToJson(const TrainConfig& c) {
  return json{{"cost", c.cost},
              {"learning_rate", c.learning_rate},
              {"optimizer", OptimizerName(c.optimizer)},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_epsilon", c.adam_epsilon},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"snr_db", c.snr_db},
              {"excerpt_len", c.excerpt_len},
              {"trim", c.trim},
              {"loss_epsilon", c.loss_epsilon},
              {"normalization_pairs", c.normalization_pairs}};
}

json StoiConfigToJson(const StoiConfig& c) {
  return json{{"frame_len", c.frame_len},
              {"fft_len", c.fft_len},
              {"hop", c.hop},
              {"num_bands", c.num_bands},
              {"lowest_center", c.lowest_center},
              {"segment_frames", c.segment_frames},
              {"clip_beta_db", c.clip_beta_db},
              {"analysis_rate", c.analysis_rate},
              {"epsilon", c.epsilon},
              {"band_pool", PoolName(c.band_pool)}};
}

json ExperimentConfigToJson(const ExperimentConfig& c) {
  return json{{"network", NetworkConfigToJson(c.network)},
              {"train", TrainConfigToJson(c.train)},
              {"stoi", StoiConfigToJson(c.stoi)}};
}

NetworkConfig NetworkConfigFromJson(const json& j, NetworkConfig c) {
  ApplyKeys(j, "network",
            {{"components", Set(c.components)},
             {"taps", Set(c.taps)},
             {"stride", Set(c.stride)},
             {"smoothing_width", Set(c.smoothing_width)},
             {"hidden", Set(c.hidden)},
             {"weight_sharing",
              [&c](const json& v) { c.sharing = ParseSharing(v.get<std::string>()); }},
             {"modulation_epsilon", Set(c.modulation_epsilon)},
             {"sample_rate", Set(c.sample_rate)}});
  c.Validate();
  return c;
}

TrainConfig TrainConfigFromJson(const json& j, TrainConfig c) {
  ApplyKeys(j, "train",
            {{"cost", Set(c.cost)},
             {"learning_rate", Set(c.learning_rate)},
             {"optimizer",
              [&c](const json& v) { c.optimizer = ParseOptimizer(v.get<std::string>()); }},
             {"beta1", Set(c.beta1)},
             {"beta2", Set(c.beta2)},
             {"adam_epsilon", Set(c.adam_epsilon)},
             {"epochs", Set(c.epochs)},
             {"seed", Set(c.seed)},
             {"snr_db", Set(c.snr_db)},
             {"excerpt_len", Set(c.excerpt_len)},
             {"trim", Set(c.trim)},
             {"loss_epsilon", Set(c.loss_epsilon)},
             {"normalization_pairs", Set(c.normalization_pairs)}});
  c.Validate();
  return c;
}

StoiConfig StoiConfigFromJson(const json& j, StoiConfig c) {
  ApplyKeys(j, "stoi",
            {{"frame_len", Set(c.frame_len)},
             {"fft_len", Set(c.fft_len)},
             {"hop", Set(c.hop)},
             {"num_bands", Set(c.num_bands)},
             {"lowest_center", Set(c.lowest_center)},
             {"segment_frames", Set(c.segment_frames)},
             {"clip_beta_db", Set(c.clip_beta_db)},
             {"analysis_rate", Set(c.analysis_rate)},
             {"epsilon", Set(c.epsilon)},
             {"band_pool", [&c](const json& v) { c.band_pool = ParsePool(v.get<std::string>()); }}});
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfigFromJson(const json& j, ExperimentConfig c) {
  ApplyKeys(j, "config",
            {{"network", [&c](const json& v) { c.network = NetworkConfigFromJson(v, c.network); }},
             {"train", [&c](const json& v) { c.train = TrainConfigFromJson(v, c.train); }},
             {"stoi", [&c](const json& v) { c.stoi = StoiConfigFromJson(v, c.stoi); }}});
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return ExperimentConfigFromJson(j);
}

}  // namespace aetsep
