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

#include "opvforge/gen/config_json.hpp"

#include "opvforge/ad/config_json.hpp"
#include "opvforge/common/json_util.hpp"

namespace opv::gen {

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"layers", c.layers},
       {"width", c.width},
       {"heads", c.heads},
       {"max_length", c.max_length},
       {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  reject_unknown_keys(j, {"layers", "width", "heads", "max_length", "dropout"}, "generator config");
  read_optional(j, "layers", c.layers);
  read_optional(j, "width", c.width);
  read_optional(j, "heads", c.heads);
  read_optional(j, "max_length", c.max_length);
  read_optional(j, "dropout", c.dropout);
}

void to_json(nlohmann::json& j, const PretrainConfig& c) {
  j = {{"model", c.model}, {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"adam", c.adam}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PretrainConfig& c) {
  reject_unknown_keys(j, {"model", "epochs", "batch_size", "adam", "seed"}, "generator pretraining config");
  read_optional(j, "model", c.model);
  read_optional(j, "epochs", c.epochs);
  read_optional(j, "batch_size", c.batch_size);
  read_optional(j, "adam", c.adam);
  read_optional(j, "seed", c.seed);
}

}  // namespace opv::gen
