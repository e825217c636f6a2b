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
#include <vector>

namespace opv::data {

struct EpochMetrics {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
};

// Shared report for every PCE regressor so runs compare field-for-field.
struct RegressionReport {
  std::string model;  // "pair-predictor" or "fingerprint-forest"
  std::string init;   // "pretrained", "random" or "n/a"
  uint64_t split_seed = 0;
  size_t train_size = 0;
  size_t val_size = 0;
  size_t test_size = 0;
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double test_mse = 0.0;
};

void write_report_json(const std::string& path, const RegressionReport& report);
RegressionReport read_report_json(const std::string& path);

// Mean of (a_i - b_i)^2; the sizes must agree and be non-zero.
double mean_squared_error(const std::vector<double>& predicted, const std::vector<double>& actual);

}  // namespace opv::data
