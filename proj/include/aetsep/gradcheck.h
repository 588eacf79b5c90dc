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

#ifndef AETSEP_GRADCHECK_H_
#define AETSEP_GRADCHECK_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aetsep/graph.h"

namespace aetsep {

struct GradCheckOptions {
  double step = 1e-5;
  // Coordinates checked per input; 0 checks every coordinate. Sampled
  // coordinates are drawn without replacement from a seeded generator.
  int64_t max_coords = 0;
  uint64_t seed = 0;
  // Coordinates where both gradients are below this fraction of the largest
  // checked magnitude are compared on that absolute scale instead. Central
  // differences cannot resolve much below ulp(loss) / step, so a vanishing
  // coordinate would otherwise report rounding noise as a relative error.
  double floor_fraction = 1e-3;
};

struct GradCheckReport {
  double value = 0.0;
  double max_relative_error = 0.0;
  std::map<std::string, double> per_input;  // max relative error per input
  int64_t coordinates_checked = 0;
};

// |analytic - numeric| / max(|analytic|, |numeric|, floor), maximized over the
// checked coordinates of every listed input.
double RelativeError(double analytic, double numeric, double floor);

GradCheckReport CheckGradients(const Graph& graph, const Inputs& inputs,
                               const std::vector<std::string>& wrt,
                               const GradCheckOptions& options = {});

}  // namespace aetsep

#endif  // AETSEP_GRADCHECK_H_
