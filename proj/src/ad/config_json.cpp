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

#include "opvforge/ad/config_json.hpp"

#include "opvforge/common/json_util.hpp"

namespace opv::ad {

void to_json(nlohmann::json& j, const AdamConfig& c) {
  j = {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"weight_decay", c.weight_decay}};
}

void from_json(const nlohmann::json& j, AdamConfig& c) {
  reject_unknown_keys(j, {"lr", "beta1", "beta2", "eps", "weight_decay"}, "optimizer config");
  read_optional(j, "lr", c.lr);
  read_optional(j, "beta1", c.beta1);
  read_optional(j, "beta2", c.beta2);
  read_optional(j, "eps", c.eps);
  read_optional(j, "weight_decay", c.weight_decay);
}

void to_json(nlohmann::json& j, const PlateauConfig& c) {
  j = {{"factor", c.factor}, {"patience", c.patience}, {"min_delta", c.min_delta}, {"min_lr", c.min_lr}};
}

void from_json(const nlohmann::json& j, PlateauConfig& c) {
  reject_unknown_keys(j, {"factor", "patience", "min_delta", "min_lr"}, "plateau config");
  read_optional(j, "factor", c.factor);
  read_optional(j, "patience", c.patience);
  read_optional(j, "min_delta", c.min_delta);
  read_optional(j, "min_lr", c.min_lr);
}

}  // namespace opv::ad
