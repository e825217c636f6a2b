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

#include <cmath>

#include "opvforge/ad/tensor.hpp"
#include "opvforge/common/random.hpp"

namespace opv::ad {

// Glorot uniform over the first and last axes.
template <typename T>
void xavier_uniform(Parameter<T>& p, Rng& rng, double gain = 1.0) {
  const Shape& s = p.value.shape();
  const double fan_in = static_cast<double>(s.front());
  const double fan_out = static_cast<double>(s.back());
  const double bound = gain * std::sqrt(6.0 / (fan_in + fan_out));
  for (T& v : p.value.vec()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
void normal_init(Parameter<T>& p, Rng& rng, double stddev) {
  for (T& v : p.value.vec()) v = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T>
void constant_init(Parameter<T>& p, T value) {
  p.value.fill(value);
}

// Copies values across precisions; names and shapes must line up.
template <typename From, typename To>
void copy_parameters(const ParameterRefs<From>& from, const ParameterRefs<To>& to) {
  if (from.size() != to.size()) throw ShapeError("copy_parameters: parameter count differs");
  for (size_t i = 0; i < from.size(); ++i) {
    if (from[i]->value.shape() != to[i]->value.shape() || from[i]->name != to[i]->name) {
      throw ShapeError("copy_parameters: mismatch at " + from[i]->name);
    }
    to[i]->value = from[i]->value.template cast<To>();
  }
}

template <typename T>
int64_t parameter_count(const ParameterRefs<T>& params) {
  int64_t n = 0;
  for (const Parameter<T>* p : params) n += p->value.size();
  return n;
}

}  // namespace opv::ad
