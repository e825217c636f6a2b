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

#include "opvforge/predictor/config_json.hpp"

#include "opvforge/ad/config_json.hpp"
#include "opvforge/common/json_util.hpp"
#include "opvforge/gnn/config_json.hpp"

namespace opv::predictor {

void to_json(nlohmann::json& j, const PredictorConfig& c) {
  j = {{"encoder", c.encoder},
       {"attention_heads", c.attention_heads},
       {"attention_dropout", c.attention_dropout},
       {"head_hidden", c.head_hidden},
       {"head_dropout", c.head_dropout}};
}

void from_json(const nlohmann::json& j, PredictorConfig& c) {
  reject_unknown_keys(j, {"encoder", "attention_heads", "attention_dropout", "head_hidden", "head_dropout"},
                      "predictor config");
  read_optional(j, "encoder", c.encoder);
  read_optional(j, "attention_heads", c.attention_heads);
  read_optional(j, "attention_dropout", c.attention_dropout);
  read_optional(j, "head_hidden", c.head_hidden);
  read_optional(j, "head_dropout", c.head_dropout);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"model", c.model},     {"epochs", c.epochs},         {"batch_size", c.batch_size},
       {"adam", c.adam},       {"plateau", c.plateau},       {"split_seed", c.split_seed},
       {"seed", c.seed},       {"pretrained_dir", c.pretrained_dir}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  reject_unknown_keys(j, {"model", "epochs", "batch_size", "adam", "plateau", "split_seed", "seed", "pretrained_dir"},
                      "predictor training config");
  read_optional(j, "model", c.model);
  read_optional(j, "epochs", c.epochs);
  read_optional(j, "batch_size", c.batch_size);
  read_optional(j, "adam", c.adam);
  read_optional(j, "plateau", c.plateau);
  read_optional(j, "split_seed", c.split_seed);
  read_optional(j, "seed", c.seed);
  read_optional(j, "pretrained_dir", c.pretrained_dir);
}

}  // namespace opv::predictor
