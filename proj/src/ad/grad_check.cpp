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

#include "opvforge/ad/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace opv::ad {

namespace {

double step_for(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

std::vector<int64_t> chosen_coords(int64_t size, int limit) {
  std::vector<int64_t> coords;
  if (limit <= 0 || size <= limit) {
    for (int64_t i = 0; i < size; ++i) coords.push_back(i);
    return coords;
  }
  for (int i = 0; i < limit; ++i) coords.push_back(i * size / limit);
  return coords;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
}

double grad_check(const std::function<Var<double>(Tape<double>&, Var<double>)>& f, const Tensor<double>& point) {
  Tensor<double> analytic;
  {
    Tape<double> tape;
    Var<double> x = tape.leaf(point);
    Var<double> y = f(tape, x);
    tape.backward(y);
    const Tensor<double>* g = tape.grad(x);
    analytic = g ? *g : Tensor<double>(point.shape());
  }
  auto eval = [&](const Tensor<double>& at) {
    Tape<double> tape(false);
    return f(tape, tape.constant(at)).value().item();
  };
  double worst = 0.0;
  Tensor<double> probe = point;
  for (int64_t i = 0; i < point.size(); ++i) {
    const double x0 = point[i];
    const double h = step_for(x0);
    probe[i] = x0 + h;
    const double up = eval(probe);
    probe[i] = x0 - h;
    const double down = eval(probe);
    probe[i] = x0;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

double grad_check_params(const std::function<Var<double>(Tape<double>&)>& loss, const ParameterRefs<double>& params,
                         GradCheckOptions options) {
  for (Parameter<double>* p : params) p->zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  auto eval = [&]() {
    Tape<double> tape(false);
    return loss(tape).value().item();
  };
  double worst = 0.0;
  for (Parameter<double>* p : params) {
    for (int64_t i : chosen_coords(p->value.size(), options.max_coords_per_param)) {
      const double analytic = p->has_grad ? p->grad[i] : 0.0;
      const double x0 = p->value[i];
      const double h = step_for(x0);
      p->value[i] = x0 + h;
      const double up = eval();
      p->value[i] = x0 - h;
      const double down = eval();
      p->value[i] = x0;
      worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace opv::ad
