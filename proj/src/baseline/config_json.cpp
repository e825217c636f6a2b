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

#include "opvforge/baseline/config_json.hpp"

#include "opvforge/common/json_util.hpp"

namespace opv::baseline {

void to_json(nlohmann::json& j, const FingerprintConfig& c) { j = {{"radius", c.radius}, {"bits", c.bits}}; }

void from_json(const nlohmann::json& j, FingerprintConfig& c) {
  reject_unknown_keys(j, {"radius", "bits"}, "fingerprint config");
  read_optional(j, "radius", c.radius);
  read_optional(j, "bits", c.bits);
}

void to_json(nlohmann::json& j, const ForestConfig& c) {
  j = {{"trees", c.trees}, {"max_depth", c.max_depth}, {"min_samples_split", c.min_samples_split}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ForestConfig& c) {
  reject_unknown_keys(j, {"trees", "max_depth", "min_samples_split", "seed"}, "forest config");
  read_optional(j, "trees", c.trees);
  read_optional(j, "max_depth", c.max_depth);
  read_optional(j, "min_samples_split", c.min_samples_split);
  read_optional(j, "seed", c.seed);
}

}  // namespace opv::baseline
