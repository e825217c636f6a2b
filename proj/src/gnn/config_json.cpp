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

#include "opvforge/gnn/config_json.hpp"

#include "opvforge/ad/config_json.hpp"
#include "opvforge/common/json_util.hpp"

namespace opv::gnn {

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"layers", c.layers},   {"hidden", c.hidden},   {"heads", c.heads}, {"negative_slope", c.negative_slope},
       {"dropout", c.dropout}, {"mask_ratio", c.mask_ratio}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  reject_unknown_keys(j, {"layers", "hidden", "heads", "negative_slope", "dropout", "mask_ratio"}, "encoder config");
  read_optional(j, "layers", c.layers);
  read_optional(j, "hidden", c.hidden);
  read_optional(j, "heads", c.heads);
  read_optional(j, "negative_slope", c.negative_slope);
  read_optional(j, "dropout", c.dropout);
  read_optional(j, "mask_ratio", c.mask_ratio);
}

void to_json(nlohmann::json& j, const PretrainConfig& c) {
  j = {{"encoder", c.encoder}, {"epochs", c.epochs}, {"batch_size", c.batch_size},
       {"adam", c.adam},       {"plateau", c.plateau}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PretrainConfig& c) {
  reject_unknown_keys(j, {"encoder", "epochs", "batch_size", "adam", "plateau", "seed"}, "pretraining config");
  read_optional(j, "encoder", c.encoder);
  read_optional(j, "epochs", c.epochs);
  read_optional(j, "batch_size", c.batch_size);
  read_optional(j, "adam", c.adam);
  read_optional(j, "plateau", c.plateau);
  read_optional(j, "seed", c.seed);
}

}  // namespace opv::gnn
