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

#ifndef AETSEP_METRICS_H_
#define AETSEP_METRICS_H_

#include <limits>
#include <string>

#include "aetsep/losses.h"
#include "aetsep/signal_io.h"

namespace aetsep {

inline constexpr double kInfiniteDb = std::numeric_limits<double>::infinity();

struct BssDecomposition {
  Waveform target;        // (<x,y>/<y,y>) y
  Waveform interference;  // (<x,z>/<z,z>) z
  Waveform artifacts;     // x - target - interference
};

struct EvalReport {
  double sdr_db = 0.0;
  double sir_db = 0.0;
  double sar_db = 0.0;
  double stoi = 0.0;
};

// Plain time-domain projections of x onto the target and interference.
BssDecomposition BssDecompose(const Waveform& x, const Waveform& y, const Waveform& z);

// SDR/SIR/SAR in dB; stoi is left at 0. A ratio whose error energy is below
// 1e-30 of the estimate energy is reported as +infinity.
EvalReport BssEvalMetrics(const Waveform& x, const Waveform& y, const Waveform& z);

// Runs the STOI loss graph without recording gradients; equals
// 1 - StoiLoss(x, y, cfg).
double StoiMetric(const Waveform& x, const Waveform& y, const StoiConfig& cfg);

EvalReport EvaluateSeparation(const Waveform& x, const Waveform& y, const Waveform& z,
                              const StoiConfig& cfg);

// "file,sdr_db,sir_db,sar_db,stoi"
std::string CsvHeader();
// Six significant digits; "inf" for infinite ratios.
std::string FormatMetric(double value);
// STOI lies in [-1, 1] and is printed with six decimals.
std::string FormatStoi(double value);
std::string CsvRow(const std::string& file, const EvalReport& report);

}  // namespace aetsep

#endif  // AETSEP_METRICS_H_
