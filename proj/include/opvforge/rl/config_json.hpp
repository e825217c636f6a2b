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

#include <string>

#include <json.hpp>

#include "opvforge/rl/campaign.hpp"

namespace opv::rl {

// A campaign file: every RlConfig field plus where the frozen models live.
struct CampaignFile {
  RlConfig rl;
  std::string prior_dir;      // directory written by save_generator
  std::string predictor_dir;  // directory written by save_predictor; unused for the aromatic reward
  std::string reward = "predictor";  // "predictor" | "aromatic"

  void check() const;  // throws UsageError
};

// Missing keys keep their defaults; unknown keys throw UsageError.
void to_json(nlohmann::json& j, const RlConfig& c);
void from_json(const nlohmann::json& j, RlConfig& c);
void to_json(nlohmann::json& j, const CampaignFile& c);
void from_json(const nlohmann::json& j, CampaignFile& c);

}  // namespace opv::rl
