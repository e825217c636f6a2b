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

#include "opvforge/rl/config_json.hpp"

#include <string>

#include "opvforge/ad/config_json.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/json_util.hpp"

namespace opv::rl {

namespace {

void read_rl(const nlohmann::json& j, RlConfig& c) {
  read_optional(j, "total_steps", c.total_steps);
  read_optional(j, "batch_size", c.batch_size);
  read_optional(j, "sigma0", c.sigma0);
  read_optional(j, "replay_fraction", c.replay_fraction);
  read_optional(j, "memory_capacity", c.memory_capacity);
  read_optional(j, "target_smiles", c.target_smiles);
  if (j.contains("target_role")) {
    try {
      c.target_role = data::parse_role(j.at("target_role").get<std::string>());
    } catch (const DataError& e) {
      throw UsageError(std::string("campaign config: ") + e.what());
    }
  }
  read_optional(j, "max_new", c.max_new);
  read_optional(j, "chunk_size", c.chunk_size);
  read_optional(j, "adam", c.adam);
  read_optional(j, "seed", c.seed);
}

}  // namespace

void CampaignFile::check() const {
  rl.check();
  if (reward != "predictor" && reward != "aromatic") {
    throw UsageError("reward must be \"predictor\" or \"aromatic\", got \"" + reward + "\"");
  }
  if (prior_dir.empty()) throw UsageError("campaign config needs a prior directory");
  if (reward == "predictor" && predictor_dir.empty()) {
    throw UsageError("the predictor reward needs a predictor directory");
  }
}

void to_json(nlohmann::json& j, const RlConfig& c) {
  j = {{"total_steps", c.total_steps},
       {"batch_size", c.batch_size},
       {"sigma0", c.sigma0},
       {"replay_fraction", c.replay_fraction},
       {"memory_capacity", c.memory_capacity},
       {"target_smiles", c.target_smiles},
       {"target_role", std::string(data::role_name(c.target_role))},
       {"max_new", c.max_new},
       {"chunk_size", c.chunk_size},
       {"adam", c.adam},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RlConfig& c) {
  reject_unknown_keys(j,
                     {"total_steps", "batch_size", "sigma0", "replay_fraction", "memory_capacity", "target_smiles",
                      "target_role", "max_new", "chunk_size", "adam", "seed"},
                     "campaign config");
  read_rl(j, c);
}

void to_json(nlohmann::json& j, const CampaignFile& c) {
  to_json(j, c.rl);
  j["prior"] = c.prior_dir;
  j["predictor"] = c.predictor_dir;
  j["reward"] = c.reward;
}

void from_json(const nlohmann::json& j, CampaignFile& c) {
  reject_unknown_keys(j,
                     {"total_steps", "batch_size", "sigma0", "replay_fraction", "memory_capacity", "target_smiles",
                      "target_role", "max_new", "chunk_size", "adam", "seed", "prior", "predictor", "reward"},
                     "campaign config");
  read_rl(j, c.rl);
  read_optional(j, "prior", c.prior_dir);
  read_optional(j, "predictor", c.predictor_dir);
  read_optional(j, "reward", c.reward);
}

}  // namespace opv::rl
