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

#include "aetsep/dsp.h"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

#include "aetsep/error.h"

namespace aetsep {

std::vector<double> HannWindow(int64_t length) {
  std::vector<double> w(length);
  for (int64_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) / length);
  }
  return w;
}

Tensor HannDftFilters(int64_t frame_len, int64_t fft_len) {
  if (frame_len <= 0 || frame_len > fft_len) {
    throw Error(ErrorCode::kShapeError, "frame length must be in (0, fft_len]");
  }
  const int64_t bins = fft_len / 2 + 1;
  const std::vector<double> window = HannWindow(frame_len);
  Tensor filters({2 * bins, frame_len});
  for (int64_t k = 0; k < bins; ++k) {
    for (int64_t n = 0; n < frame_len; ++n) {
      // Reduce k*n modulo fft_len so the phase argument stays small.
      const double phase = 2.0 * M_PI * static_cast<double>((k * n) % fft_len) / fft_len;
      filters.at(k, n) = window[n] * std::cos(phase);
      filters.at(bins + k, n) = -window[n] * std::sin(phase);
    }
  }
  return filters;
}

int64_t NumFrames(int64_t length, int64_t frame_len, int64_t hop) {
  if (length < frame_len) return 0;
  return (length - frame_len) / hop + 1;
}

MagnitudeFrames FrameStft(const Waveform& w, int64_t frame_len, int64_t fft_len,
                          int64_t hop) {
  if (hop <= 0) throw Error(ErrorCode::kShapeError, "hop must be positive");
  if (w.size() < frame_len) {
    throw Error(ErrorCode::kSignalTooShort,
                "signal of " + std::to_string(w.size()) + " samples is shorter than one frame");
  }
  const Tensor filters = HannDftFilters(frame_len, fft_len);
  const int64_t bins = fft_len / 2 + 1;
  const int64_t frames = NumFrames(w.size(), frame_len, hop);

  Eigen::MatrixXd cols(frame_len, frames);
  for (int64_t m = 0; m < frames; ++m) {
    std::memcpy(cols.col(m).data(), w.samples.data() + m * hop, frame_len * sizeof(double));
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat spec =
      Eigen::Map<const RowMat>(filters.data(), 2 * bins, frame_len) * cols;

  MagnitudeFrames out;
  out.values = Tensor({bins, frames});
  for (int64_t k = 0; k < bins; ++k) {
    for (int64_t m = 0; m < frames; ++m) {
      const double re = spec(k, m);
      const double im = spec(bins + k, m);
      out.values.at(k, m) = std::sqrt(re * re + im * im);
    }
  }
  out.frame_len = frame_len;
  out.fft_len = fft_len;
  out.hop = hop;
  out.sample_rate = w.sample_rate;
  return out;
}

BandMatrix OctaveBandMatrix(double sample_rate, int64_t fft_len, int num_bands,
                            double lowest_center) {
  if (!(lowest_center > 0.0) || num_bands < 1) {
    throw Error(ErrorCode::kConfigError, "need lowest_center > 0 and at least one band");
  }
  const int64_t bins = fft_len / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  std::vector<std::vector<int64_t>> members;
  BandMatrix out;
  for (int k = 0; k < num_bands; ++k) {
    BandEdges edges;
    edges.center = lowest_center * std::pow(2.0, k / 3.0);
    edges.low = edges.center * std::pow(2.0, -1.0 / 6.0);
    edges.high = edges.center * std::pow(2.0, 1.0 / 6.0);
    if (edges.high > nyquist) continue;
    std::vector<int64_t> bins_in_band;
    for (int64_t i = 0; i < bins; ++i) {
      const double f = static_cast<double>(i) * sample_rate / static_cast<double>(fft_len);
      if (f >= edges.low && f < edges.high) bins_in_band.push_back(i);
    }
    if (bins_in_band.empty()) continue;
    out.bands.push_back(edges);
    members.push_back(std::move(bins_in_band));
  }
  out.weights = Tensor({static_cast<int64_t>(members.size()), bins});
  for (size_t j = 0; j < members.size(); ++j) {
    for (int64_t i : members[j]) out.weights.at(static_cast<int64_t>(j), i) = 1.0;
  }
  return out;
}

OctaveBandFrames BandEnergies(const MagnitudeFrames& mag, const BandMatrix& bands,
                              BandPool pool) {
  if (bands.num_bins() != mag.num_bins()) {
    throw Error(ErrorCode::kShapeError,
                "band matrix has " + std::to_string(bands.num_bins()) + " bins, spectrum has " +
                    std::to_string(mag.num_bins()));
  }
  const int64_t num_bands = bands.num_bands(), frames = mag.num_frames();
  OctaveBandFrames out;
  out.bands = bands.bands;
  out.values = Tensor({num_bands, frames});
  for (int64_t j = 0; j < num_bands; ++j) {
    for (int64_t m = 0; m < frames; ++m) {
      double acc = 0.0;
      for (int64_t i = 0; i < mag.num_bins(); ++i) {
        const double v = mag.values.at(i, m);
        acc += bands.weights.at(j, i) * (pool == BandPool::kL2 ? v * v : v);
      }
      out.values.at(j, m) = pool == BandPool::kL2 ? std::sqrt(acc) : acc;
    }
  }
  return out;
}

}  // namespace aetsep
