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

#include "aetsep/checkpoint.h"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>

#include "aetsep/config.h"
#include "aetsep/error.h"

namespace aetsep {
namespace {

using nlohmann::json;

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

[[noreturn]] void Corrupt(const std::string& what) {
  throw Error(ErrorCode::kCorruptFile, "checkpoint: " + what);
}

json TensorToJson(const Tensor& t) {
  std::string bytes(t.size() * 8, '\0');
  for (int64_t i = 0; i < t.size(); ++i) {
    const auto bits = std::bit_cast<uint64_t>(t[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return json{{"shape", t.shape()}, {"data", Base64Encode(bytes)}};
}

Tensor TensorFromJson(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    Corrupt("tensor '" + name + "' lacks shape or data");
  }
  const Shape shape = j.at("shape").get<Shape>();
  const std::string bytes = Base64Decode(j.at("data").get<std::string>());
  const int64_t n = NumElements(shape);
  if (static_cast<int64_t>(bytes.size()) != n * 8) {
    Corrupt("tensor '" + name + "' has " + std::to_string(bytes.size()) + " bytes for shape " +
            ShapeToString(shape));
  }
  std::vector<double> data(n);
  for (int64_t i = 0; i < n; ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    data[i] = std::bit_cast<double>(bits);
  }
  return Tensor(shape, std::move(data));
}

}  // namespace

std::string Base64Encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const size_t rest = bytes.size() - i;
  if (rest > 0) {
    uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string Base64Decode(std::string_view text) {
  static const std::array<int, 256> kLookup = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
    return t;
  }();
  if (text.size() % 4 != 0) Corrupt("base64 length is not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    uint32_t v = 0;
    for (size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = kLookup[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) Corrupt("invalid base64 character");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<char>(v & 0xFF));
  }
  return out;
}

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  json tensors = json::object();
  for (const auto& [name, t] : checkpoint.params.tensors()) tensors[name] = TensorToJson(t);
  json first = json::object(), second = json::object();
  for (const auto& [name, t] : checkpoint.optimizer.first_moment) first[name] = TensorToJson(t);
  for (const auto& [name, t] : checkpoint.optimizer.second_moment) second[name] = TensorToJson(t);
  const TrainingProgress& p = checkpoint.progress;
  json doc = {
      {"format_version", kCheckpointFormatVersion},
      {"config", NetworkConfigToJson(checkpoint.params.config())},
      {"tensors", tensors},
      {"optimizer",
       {{"step", checkpoint.optimizer.step}, {"first_moment", first}, {"second_moment", second}}},
      {"training",
       {{"epochs_completed", p.epochs_completed},
        {"steps_completed", p.steps_completed},
        {"cost", p.cost},
        {"cost_scales", json::array()}}},
  };
  // Scales travel as raw bits so the round trip is exact.
  for (double s : p.cost_scales) {
    doc["training"]["cost_scales"].push_back(TensorToJson(Tensor::Scalar(s)));
  }
  return doc.dump(1) + "\n";
}

Checkpoint DeserializeCheckpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    Corrupt(std::string("unparseable JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("format_version")) Corrupt("missing format_version");
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw Error(ErrorCode::kIncompatibleCheckpoint,
                  "checkpoint format " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointFormatVersion));
    }
    NetworkConfig config;
    try {
      config = NetworkConfigFromJson(doc.at("config"));
    } catch (const Error& e) {
      Corrupt(std::string("bad config: ") + e.what());
    }
    std::map<std::string, Tensor> tensors;
    for (const auto& [name, t] : doc.at("tensors").items()) {
      tensors.emplace(name, TensorFromJson(t, name));
    }
    Checkpoint c;
    try {
      c.params = SeparatorParams(config, std::move(tensors));
    } catch (const Error& e) {
      Corrupt(e.what());
    }
    if (doc.contains("optimizer")) {
      const json& o = doc.at("optimizer");
      c.optimizer.step = o.at("step").get<int64_t>();
      for (const auto& [name, t] : o.at("first_moment").items()) {
        c.optimizer.first_moment.emplace(name, TensorFromJson(t, name));
      }
      for (const auto& [name, t] : o.at("second_moment").items()) {
        c.optimizer.second_moment.emplace(name, TensorFromJson(t, name));
      }
    }
    if (doc.contains("training")) {
      const json& t = doc.at("training");
      c.progress.epochs_completed = t.at("epochs_completed").get<int64_t>();
      c.progress.steps_completed = t.at("steps_completed").get<int64_t>();
      c.progress.cost = t.at("cost").get<std::string>();
      for (const json& s : t.at("cost_scales")) {
        c.progress.cost_scales.push_back(TensorFromJson(s, "cost_scale").item());
      }
    }
    return c;
  } catch (const json::exception& e) {
    Corrupt(e.what());
  }
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string text = SerializeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(text);
}

}  // namespace aetsep
