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

#ifndef AETSEP_SIGNAL_IO_H_
#define AETSEP_SIGNAL_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aetsep/tensor.h"

namespace aetsep {

// Mono time-domain signal. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration_seconds() const { return size() / sample_rate; }

  // Throws kShapeError / kSignalTooShort if the invariants do not hold
  // (rate > 0, at least one sample, all samples finite).
  void Validate() const;
};

struct MixturePair {
  Waveform mixture;
  Waveform target;
  Waveform interference;  // already scaled to the requested SNR
};

// RIFF/WAVE reader. Accepts PCM16 and IEEE float32, any channel count;
// channels are averaged to mono.
Waveform ReadWav(const std::filesystem::path& path);

// Writes mono PCM16. Samples are clamped to [-1, 1] and rounded to nearest.
void WriteWav(const Waveform& w, const std::filesystem::path& path);

// Windowed-sinc resampler: 64 taps, Kaiser window with beta 8, cutoff at the
// lower Nyquist frequency. Each output row is normalized to unit DC gain.
BandedLinearMap MakeResampler(int64_t input_length, double source_rate,
                              double target_rate);
int64_t ResampledLength(int64_t input_length, double source_rate,
                        double target_rate);
Waveform Resample(const Waveform& w, double target_rate);

double Rms(std::span<const double> x);

// Truncates both inputs to the shorter length and scales the interference so
// that 10 log10(rms(target)^2 / rms(interference)^2) == snr_db.
MixturePair MixAtSnr(const Waveform& target, const Waveform& interference,
                     double snr_db);

}  // namespace aetsep

#endif  // AETSEP_SIGNAL_IO_H_
