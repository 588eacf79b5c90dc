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

#include "aetsep/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace aetsep {

double RelativeError(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  if (denom == 0.0) return 0.0;
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport CheckGradients(const Graph& graph, const Inputs& inputs,
                               const std::vector<std::string>& wrt,
                               const GradCheckOptions& options) {
  const std::set<std::string> names(wrt.begin(), wrt.end());
  GradientResult analytic = EvaluateWithGradient(graph, inputs, names);
  GradCheckReport report;
  report.value = analytic.value;

  std::mt19937_64 rng(options.seed);
  for (const std::string& name : wrt) {
    const Tensor& grad = analytic.gradients.at(name);
    std::vector<int64_t> coords(grad.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords > 0 && options.max_coords < grad.size()) {
      // Partial Fisher-Yates with an explicit modulo keeps the draw
      // independent of the standard library's distribution code.
      for (int64_t i = 0; i < options.max_coords; ++i) {
        const auto span = static_cast<uint64_t>(grad.size() - i);
        std::swap(coords[i], coords[i + static_cast<int64_t>(rng() % span)]);
      }
      coords.resize(options.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    const std::vector<double> numeric =
        FiniteDifferenceAt(graph, inputs, name, coords, options.step);
    double scale = 0.0;
    for (size_t i = 0; i < coords.size(); ++i) {
      scale = std::max({scale, std::abs(grad[coords[i]]), std::abs(numeric[i])});
    }
    const double floor = options.floor_fraction * scale;
    double worst = 0.0;
    for (size_t i = 0; i < coords.size(); ++i) {
      worst = std::max(worst, RelativeError(grad[coords[i]], numeric[i], floor));
    }
    report.per_input[name] = worst;
    report.max_relative_error = std::max(report.max_relative_error, worst);
    report.coordinates_checked += static_cast<int64_t>(coords.size());
  }
  return report;
}

}  // namespace aetsep
