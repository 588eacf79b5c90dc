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

#ifndef AETSEP_DSP_H_
#define AETSEP_DSP_H_

#include <cstdint>
#include <vector>

#include "aetsep/signal_io.h"
#include "aetsep/tensor.h"

namespace aetsep {

enum class BandPool { kL2, kL1 };

// |STFT|, bins x frames.
struct MagnitudeFrames {
  Tensor values;  // [fft_len / 2 + 1, num_frames]
  int64_t frame_len = 0;
  int64_t fft_len = 0;
  int64_t hop = 0;
  double sample_rate = 0.0;

  int64_t num_bins() const { return values.dim(0); }
  int64_t num_frames() const { return values.dim(1); }
};

struct BandEdges {
  double low = 0.0;
  double center = 0.0;
  double high = 0.0;
};

// One-third octave band assignment; entries are 0 or 1 and every bin belongs
// to at most one band.
struct BandMatrix {
  Tensor weights;  // [num_bands, fft_len / 2 + 1]
  std::vector<BandEdges> bands;

  int64_t num_bands() const { return weights.dim(0); }
  int64_t num_bins() const { return weights.dim(1); }
};

struct OctaveBandFrames {
  Tensor values;  // [num_bands, num_frames]
  std::vector<BandEdges> bands;
};

// Periodic (DFT-even) Hann window.
std::vector<double> HannWindow(int64_t length);

// Hann-windowed DFT analysis filters for a zero-padded frame, stacked as
// [real rows; imaginary rows], shape [2 * (fft_len / 2 + 1), frame_len].
Tensor HannDftFilters(int64_t frame_len, int64_t fft_len);

int64_t NumFrames(int64_t length, int64_t frame_len, int64_t hop);

MagnitudeFrames FrameStft(const Waveform& w, int64_t frame_len, int64_t fft_len,
                          int64_t hop);

BandMatrix OctaveBandMatrix(double sample_rate, int64_t fft_len, int num_bands,
                            double lowest_center);

// L2 pooling: sqrt(sum_i W(j,i) |X(i,m)|^2). L1 pooling: sum_i W(j,i) |X(i,m)|.
OctaveBandFrames BandEnergies(const MagnitudeFrames& mag, const BandMatrix& bands,
                              BandPool pool = BandPool::kL2);

}  // namespace aetsep

#endif  // AETSEP_DSP_H_
