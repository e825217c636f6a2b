// Copyright 2026 The OPVForge Authors.
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

#pragma once

#include <functional>

#include "opvforge/ad/tape.hpp"

namespace opv::ad {

// |a - n| / max(1e-6, |a| + |n|). The floor sits above the round-off noise
// of central differences, so two vanishing gradients compare as equal.
double relative_error(double analytic, double numeric);

// f maps a leaf to a scalar. Compares the tape gradient at `point` with
// central differences, step 1e-5 * max(1, |x|) per coordinate, and returns
// the largest relative error.
double grad_check(const std::function<Var<double>(Tape<double>&, Var<double>)>& f, const Tensor<double>& point);

struct GradCheckOptions {
  // Coordinates checked per parameter; all when <= 0 or when the parameter
  // is smaller. Chosen coordinates are evenly spaced.
  int max_coords_per_param = 0;
};

// loss builds a scalar from parameters bound on the given tape; it must be
// deterministic (no dropout). Returns the largest relative error over the
// checked coordinates of every parameter.
double grad_check_params(const std::function<Var<double>(Tape<double>&)>& loss, const ParameterRefs<double>& params,
                         GradCheckOptions options = {});

}  // namespace opv::ad
