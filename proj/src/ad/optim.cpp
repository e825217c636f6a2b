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

#include "opvforge/ad/optim.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace opv::ad {

AdamW::AdamW(ParameterRefs<float> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
  for (const Parameter<float>* p : params_) {
    state_.m.emplace_back(static_cast<size_t>(p->value.size()), 0.0f);
    state_.v.emplace_back(static_cast<size_t>(p->value.size()), 0.0f);
  }
}

void adam_update(std::vector<float>& param, const std::vector<float>& grad, std::vector<float>& m,
                 std::vector<float>& v, int64_t step, const AdamConfig& config) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw ShapeError("adam_update: parameter, gradient and moment sizes differ");
  }
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  const float lr = static_cast<float>(config.lr);
  const float eps = static_cast<float>(config.eps);
  const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
  const float fc1 = static_cast<float>(c1), fc2 = static_cast<float>(c2);
  for (size_t i = 0; i < param.size(); ++i) {
    const float g = grad[i];
    m[i] = fb1 * m[i] + (1.0f - fb1) * g;
    v[i] = fb2 * v[i] + (1.0f - fb2) * g * g;
    const float mhat = m[i] / fc1;
    const float vhat = v[i] / fc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void AdamW::step() {
  ++state_.step;
  const AdamConfig& c = state_.config;
  const float keep = static_cast<float>(1.0 - c.lr * c.weight_decay);
  for (size_t k = 0; k < params_.size(); ++k) {
    Parameter<float>& p = *params_[k];
    if (!p.has_grad) continue;
    if (p.grad.size() != p.value.size()) {
      throw ShapeError("AdamW: gradient of " + p.name + " has shape " + shape_string(p.grad.shape()) +
                       ", parameter " + shape_string(p.value.shape()));
    }
    if (keep != 1.0f) {
      for (float& x : p.value.vec()) x *= keep;
    }
    adam_update(p.value.vec(), p.grad.vec(), state_.m[k], state_.v[k], state_.step, c);
  }
}

void AdamW::zero_grad() {
  for (Parameter<float>* p : params_) p->zero_grad();
}

std::vector<std::pair<std::string, Tensor<float>>> optimizer_tensors(const AdamW& opt, const std::string& prefix) {
  std::vector<std::pair<std::string, Tensor<float>>> out;
  const OptimizerState& st = opt.state();
  for (size_t k = 0; k < opt.params().size(); ++k) {
    const Parameter<float>& p = *opt.params()[k];
    out.emplace_back(prefix + "m." + p.name, Tensor<float>(p.value.shape(), st.m[k]));
    out.emplace_back(prefix + "v." + p.name, Tensor<float>(p.value.shape(), st.v[k]));
  }
  return out;
}

void restore_optimizer(AdamW& opt, const std::vector<std::pair<std::string, Tensor<float>>>& tensors, int64_t step,
                       double lr, const std::string& prefix) {
  OptimizerState& st = opt.state();
  for (size_t k = 0; k < opt.params().size(); ++k) {
    const Parameter<float>& p = *opt.params()[k];
    bool found_m = false, found_v = false;
    for (const auto& [name, t] : tensors) {
      if (t.size() != p.value.size()) continue;
      if (name == prefix + "m." + p.name) {
        st.m[k] = t.vec();
        found_m = true;
      } else if (name == prefix + "v." + p.name) {
        st.v[k] = t.vec();
        found_v = true;
      }
    }
    if (!found_m || !found_v) throw DataError("optimizer state is missing moments for " + p.name);
  }
  st.step = step;
  st.config.lr = lr;
}

PlateauScheduler::PlateauScheduler(double lr, PlateauConfig config)
    : config_(config), lr_(lr), best_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::update(double metric) {
  if (!std::isfinite(metric)) throw NumericError("NonFiniteMetric: plateau scheduler got " + std::to_string(metric));
  history_.push_back(metric);
  if (metric < best_ - config_.min_delta) {
    best_ = metric;
    bad_epochs_ = 0;
    return lr_;
  }
  ++bad_epochs_;
  if (bad_epochs_ > config_.patience) {
    lr_ = std::max(config_.min_lr, lr_ * config_.factor);
    bad_epochs_ = 0;
  }
  return lr_;
}

void PlateauScheduler::restore(double lr, double best, int epochs_since_improvement, std::vector<double> history) {
  lr_ = lr;
  best_ = best;
  bad_epochs_ = epochs_since_improvement;
  history_ = std::move(history);
}

}  // namespace opv::ad
