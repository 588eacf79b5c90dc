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

#include "aetsep/metrics.h"

#include <cmath>
#include <cstdio>

#include "aetsep/error.h"

namespace aetsep {
namespace {

double Energy(std::span<const double> v) { return InnerProduct(v, v); }

double RatioDb(double signal, double error, double floor) {
  if (error < floor) return kInfiniteDb;
  return 10.0 * std::log10(signal / error);
}

}  // namespace

BssDecomposition BssDecompose(const Waveform& x, const Waveform& y, const Waveform& z) {
  if (x.size() != y.size() || x.size() != z.size()) {
    throw Error(ErrorCode::kShapeError, "estimate, target and interference lengths differ");
  }
  const double yy = Energy(y.samples);
  const double zz = Energy(z.samples);
  if (!(yy > 0.0)) throw Error(ErrorCode::kSilentSignal, "target is silent");
  if (!(zz > 0.0)) throw Error(ErrorCode::kSilentSignal, "interference is silent");
  const double ty = InnerProduct(x.samples, y.samples) / yy;
  const double tz = InnerProduct(x.samples, z.samples) / zz;

  BssDecomposition d;
  const size_t n = x.samples.size();
  d.target.sample_rate = d.interference.sample_rate = d.artifacts.sample_rate = x.sample_rate;
  d.target.samples.resize(n);
  d.interference.samples.resize(n);
  d.artifacts.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    d.target.samples[i] = ty * y.samples[i];
    d.interference.samples[i] = tz * z.samples[i];
    d.artifacts.samples[i] = x.samples[i] - d.target.samples[i] - d.interference.samples[i];
  }
  return d;
}

EvalReport BssEvalMetrics(const Waveform& x, const Waveform& y, const Waveform& z) {
  const BssDecomposition d = BssDecompose(x, y, z);
  const size_t n = x.samples.size();
  std::vector<double> distortion(n), explained(n);
  for (size_t i = 0; i < n; ++i) {
    distortion[i] = d.interference.samples[i] + d.artifacts.samples[i];
    explained[i] = d.target.samples[i] + d.interference.samples[i];
  }
  const double floor = 1e-30 * Energy(x.samples);
  const double s_target = Energy(d.target.samples);
  EvalReport r;
  r.sdr_db = RatioDb(s_target, Energy(distortion), floor);
  r.sir_db = RatioDb(s_target, Energy(d.interference.samples), floor);
  r.sar_db = RatioDb(Energy(explained), Energy(d.artifacts.samples), floor);
  return r;
}

double StoiMetric(const Waveform& x, const Waveform& y, const StoiConfig& cfg) {
  return 1.0 - StoiLoss(x, y, cfg);
}

EvalReport EvaluateSeparation(const Waveform& x, const Waveform& y, const Waveform& z,
                              const StoiConfig& cfg) {
  EvalReport r = BssEvalMetrics(x, y, z);
  r.stoi = StoiMetric(x, y, cfg);
  return r;
}

std::string CsvHeader() { return "file,sdr_db,sir_db,sar_db,stoi"; }

std::string FormatMetric(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::string FormatStoi(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

std::string CsvRow(const std::string& file, const EvalReport& report) {
  return file + "," + FormatMetric(report.sdr_db) + "," + FormatMetric(report.sir_db) + "," +
         FormatMetric(report.sar_db) + "," + FormatStoi(report.stoi);
}

}  // namespace aetsep
