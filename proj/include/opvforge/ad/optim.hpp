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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "opvforge/ad/tensor.hpp"

namespace opv::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Moments are indexed in the order parameters were registered.
struct OptimizerState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

// Decoupled weight decay: every parameter first shrinks by lr * weight_decay,
// then takes the bias-corrected Adam step. Parameters without a gradient this
// step (has_grad == false) are left untouched, moments included.
class AdamW {
 public:
  AdamW(ParameterRefs<float> params, AdamConfig config);

  void step();
  void zero_grad();

  double lr() const { return state_.config.lr; }
  void set_lr(double lr) { state_.config.lr = lr; }
  const OptimizerState& state() const { return state_; }
  OptimizerState& state() { return state_; }
  const ParameterRefs<float>& params() const { return params_; }

 private:
  ParameterRefs<float> params_;
  OptimizerState state_;
};

// Moments as "<prefix>m.<param>" / "<prefix>v.<param>" tensors for
// checkpointing; the step count and lr travel separately.
std::vector<std::pair<std::string, Tensor<float>>> optimizer_tensors(const AdamW& opt, const std::string& prefix = "adam.");
void restore_optimizer(AdamW& opt, const std::vector<std::pair<std::string, Tensor<float>>>& tensors, int64_t step,
                       double lr, const std::string& prefix = "adam.");

// Textbook Adam (no weight decay) on a single array. Reference for the
// lambda = 0 case of AdamW.
void adam_update(std::vector<float>& param, const std::vector<float>& grad, std::vector<float>& m,
                 std::vector<float>& v, int64_t step, const AdamConfig& config);

struct PlateauConfig {
  double factor = 0.5;
  int patience = 5;
  double min_delta = 1e-4;
  double min_lr = 0.0;
};

// Lowers the learning rate when a monitored loss stops improving.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, PlateauConfig config = {});

  // Returns the (possibly reduced) learning rate. Throws NumericError on a
  // non-finite metric.
  double update(double metric);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int epochs_since_improvement() const { return bad_epochs_; }
  const std::vector<double>& history() const { return history_; }
  const PlateauConfig& config() const { return config_; }

  // Reinstates a saved state when resuming training.
  void restore(double lr, double best, int epochs_since_improvement, std::vector<double> history);

 private:
  PlateauConfig config_;
  double lr_;
  double best_;
  int bad_epochs_ = 0;
  std::vector<double> history_;
};

}  // namespace opv::ad
