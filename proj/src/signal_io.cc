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

#include "aetsep/signal_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "aetsep/error.h"

namespace aetsep {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

constexpr int kResampleTaps = 64;
constexpr double kKaiserBeta = 8.0;

uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

double Kaiser(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  static const double kNorm = std::cyl_bessel_i(0.0, kKaiserBeta);
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) / kNorm;
}

}  // namespace

void Waveform::Validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw Error(ErrorCode::kShapeError, "sample rate must be positive");
  }
  if (samples.empty()) {
    throw Error(ErrorCode::kSignalTooShort, "waveform has no samples");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kShapeError, "waveform contains non-finite samples");
    }
  }
}

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const size_t n = bytes.size();
  if (n < 12) throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > n) {
        throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated fmt chunk");
      }
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) {
          throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated extensible fmt");
        }
        format = ReadU16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > n) {
        throw Error(ErrorCode::kCorruptFile, path.string() + ": truncated data chunk");
      }
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || data == nullptr) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": missing fmt or data chunk");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": only PCM16 and float32 are supported (format " +
                    std::to_string(format) + ", " + std::to_string(bits) + " bits)");
  }
  if (channels == 0 || rate == 0) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": zero channels or rate");
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t frames = data_size / frame_bytes;
  if (frames == 0) throw Error(ErrorCode::kCorruptFile, path.string() + ": no samples");

  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(frames);
  for (size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + f * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        sum += static_cast<int16_t>(ReadU16(p)) / 32768.0;
      } else {
        sum += std::bit_cast<float>(ReadU32(p));
      }
    }
    w.samples[f] = sum / channels;
  }
  return w;
}

void WriteWav(const Waveform& w, const std::filesystem::path& path) {
  for (double s : w.samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kShapeError, "cannot write non-finite samples");
    }
  }
  const auto rate = static_cast<uint32_t>(std::lround(w.sample_rate));
  const auto data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, kFormatPcm);
  PutU16(out, 1);
  PutU32(out, rate);
  PutU32(out, rate * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_bytes);
  for (double s : w.samples) {
    const double q = std::nearbyint(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<int16_t>(std::clamp(q, -32768.0, 32767.0));
    PutU16(out, static_cast<uint16_t>(v));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

int64_t ResampledLength(int64_t input_length, double source_rate,
                        double target_rate) {
  return std::llround(static_cast<double>(input_length) * target_rate / source_rate);
}

BandedLinearMap MakeResampler(int64_t input_length, double source_rate,
                              double target_rate) {
  if (!(target_rate > 0.0) || !(source_rate > 0.0)) {
    throw Error(ErrorCode::kShapeError, "sample rates must be positive");
  }
  const int64_t out_len = ResampledLength(input_length, source_rate, target_rate);
  BandedLinearMap map(input_length, out_len);
  const double step = source_rate / target_rate;
  const double cutoff = std::min(1.0, target_rate / source_rate);
  constexpr int kHalf = kResampleTaps / 2;
  // With integer rates the output instants fall on a handful of fractional
  // phases; interior rows are computed once per phase.
  const bool integral = source_rate == std::floor(source_rate) &&
                        target_rate == std::floor(target_rate) && source_rate < 1e9 &&
                        target_rate < 1e9;
  const auto sr = static_cast<int64_t>(source_rate);
  const auto tr = static_cast<int64_t>(target_rate);
  std::map<int64_t, std::vector<double>> interior;
  std::vector<double> row;
  for (int64_t n = 0; n < out_len; ++n) {
    int64_t center;
    double frac;
    int64_t phase = -1;
    if (integral) {
      center = n * sr / tr;
      phase = n * sr % tr;
      frac = static_cast<double>(phase) / static_cast<double>(tr);
    } else {
      const double t = static_cast<double>(n) * step;
      center = static_cast<int64_t>(std::floor(t));
      frac = t - static_cast<double>(center);
    }
    const int64_t lo = std::max<int64_t>(0, center - kHalf + 1);
    const int64_t hi = std::min<int64_t>(input_length - 1, center + kHalf);
    const bool full = lo == center - kHalf + 1 && hi == center + kHalf;
    if (full && phase >= 0) {
      auto it = interior.find(phase);
      if (it != interior.end()) {
        map.SetRow(n, lo, it->second);
        continue;
      }
    }
    row.clear();
    double sum = 0.0;
    for (int64_t k = lo; k <= hi; ++k) {
      const double d = frac + static_cast<double>(center - k);
      const double c = cutoff * Sinc(cutoff * d) * Kaiser(d / (kHalf + 1));
      row.push_back(c);
      sum += c;
    }
    if (sum != 0.0) {
      for (double& c : row) c /= sum;
    }
    if (full && phase >= 0) interior.emplace(phase, row);
    map.SetRow(n, lo, row);
  }
  return map;
}

Waveform Resample(const Waveform& w, double target_rate) {
  if (!(target_rate > 0.0)) {
    throw Error(ErrorCode::kShapeError, "target rate must be positive");
  }
  if (target_rate == w.sample_rate) return w;
  const BandedLinearMap map = MakeResampler(w.size(), w.sample_rate, target_rate);
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(map.out_size());
  map.Apply(w.samples, out.samples);
  return out;
}

double Rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

MixturePair MixAtSnr(const Waveform& target, const Waveform& interference,
                     double snr_db) {
  if (target.sample_rate != interference.sample_rate) {
    throw Error(ErrorCode::kShapeError, "sample rates differ");
  }
  if (!std::isfinite(snr_db)) {
    throw Error(ErrorCode::kShapeError, "SNR must be finite");
  }
  const size_t len = std::min(target.samples.size(), interference.samples.size());
  MixturePair pair;
  pair.target.sample_rate = target.sample_rate;
  pair.target.samples.assign(target.samples.begin(), target.samples.begin() + len);
  pair.interference.sample_rate = target.sample_rate;
  pair.interference.samples.assign(interference.samples.begin(),
                                   interference.samples.begin() + len);
  const double target_rms = Rms(pair.target.samples);
  const double interf_rms = Rms(pair.interference.samples);
  if (target_rms <= 1e-8 || interf_rms <= 1e-8) {
    throw Error(ErrorCode::kSilentSignal, "cannot mix a silent signal");
  }
  const double scale = target_rms / (interf_rms * std::pow(10.0, snr_db / 20.0));
  for (double& v : pair.interference.samples) v *= scale;
  pair.mixture.sample_rate = target.sample_rate;
  pair.mixture.samples.resize(len);
  for (size_t i = 0; i < len; ++i) {
    pair.mixture.samples[i] = pair.target.samples[i] + pair.interference.samples[i];
  }
  return pair;
}

}  // namespace aetsep
