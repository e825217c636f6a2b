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

#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "commands.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/json_util.hpp"
#include "opvforge/gen/pretrain.hpp"
#include "opvforge/predictor/predictor.hpp"
#include "opvforge/rl/config_json.hpp"

namespace opv::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateConfig {
  std::string generator;  // directory written by pretrain-gen or rl-run (agent/)
  std::string predictor;
  std::string target_smiles;
  data::Role target_role = data::Role::Acceptor;
  int samples = 100;
  int max_new = 128;
  uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const GenerateConfig& c) {
  j = {{"generator", c.generator},
       {"predictor", c.predictor},
       {"target_smiles", c.target_smiles},
       {"target_role", std::string(data::role_name(c.target_role))},
       {"samples", c.samples},
       {"max_new", c.max_new},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GenerateConfig& c) {
  reject_unknown_keys(j, {"generator", "predictor", "target_smiles", "target_role", "samples", "max_new", "seed"},
                      "generate config");
  read_optional(j, "generator", c.generator);
  read_optional(j, "predictor", c.predictor);
  read_optional(j, "target_smiles", c.target_smiles);
  if (j.contains("target_role")) {
    try {
      c.target_role = data::parse_role(j.at("target_role").get<std::string>());
    } catch (const DataError& e) {
      throw UsageError(std::string("generate config: ") + e.what());
    }
  }
  read_optional(j, "samples", c.samples);
  read_optional(j, "max_new", c.max_new);
  read_optional(j, "seed", c.seed);
}

// The predictor is not movable, so callers own the storage.
void load_predictor_into(const std::string& dir, std::unique_ptr<predictor::PairPredictor<float>>& model) {
  model = std::make_unique<predictor::PairPredictor<float>>(predictor::read_predictor_config(dir), 0);
  predictor::load_predictor(dir, *model);
}

}  // namespace

nlohmann::json campaign_command_defaults(const std::string& command) {
  if (command == "rl-run") return rl::CampaignFile{};
  if (command == "generate") return GenerateConfig{};
  return nullptr;
}

void cmd_rl_run(const Invocation& inv) {
  rl::CampaignFile c = inv.config.get<rl::CampaignFile>();
  if (!inv.input.empty()) c.prior_dir = inv.input;
  if (inv.seed) c.rl.seed = *inv.seed;
  c.check();
  require_out_dir(inv);

  std::unique_ptr<predictor::PairPredictor<float>> model;
  rl::RewardFn reward;
  if (c.reward == "predictor") {
    load_predictor_into(c.predictor_dir, model);
    reward = rl::predictor_reward(*model, c.rl.target_smiles, c.rl.target_role);
  } else {
    reward = rl::aromatic_fraction_reward();
  }
  rl::Campaign campaign(c.rl, gen::load_generator(c.prior_dir), reward);
  const std::vector<rl::StepReport> trend = campaign.run([&](const rl::StepReport& r) {
    if (r.step % 10 == 0 || r.step + 1 == c.rl.total_steps) {
      *inv.out << fmt::format("step {:4d}  sigma {:7.3f}  mean s {:.4f}  valid {:.3f}  top-1 pce {:.4f}\n", r.step,
                              r.sigma, r.mean_score, r.validity, r.top1_pce);
    }
  });
  rl::write_trend_csv(out_path(inv, "trend.csv"), trend);
  rl::write_memory_csv(out_path(inv, "memory.csv"), campaign.memory());
  gen::save_generator(out_path(inv, "agent"), campaign.agent());
  write_resolved_config(inv, c);
  *inv.out << fmt::format("{} steps, {} molecules in memory\n", trend.size(), campaign.memory().size());
}

void cmd_generate(const Invocation& inv) {
  GenerateConfig c = inv.config.get<GenerateConfig>();
  if (!inv.input.empty()) c.generator = inv.input;
  if (inv.seed) c.seed = *inv.seed;
  if (c.generator.empty() || c.predictor.empty()) throw UsageError("generate needs generator and predictor directories");
  if (c.samples < 1 || c.max_new < 1) throw UsageError("samples and max_new must be positive");
  if (!chem::is_valid_smiles(c.target_smiles)) throw DataError("target molecule is not valid: " + c.target_smiles);
  require_out_dir(inv);

  std::unique_ptr<predictor::PairPredictor<float>> model;
  load_predictor_into(c.predictor, model);
  const std::unique_ptr<gen::Generator<float>> generator = gen::load_generator(c.generator);
  const std::vector<int> prompt = gen::encode_prompt(generator->vocabulary(), c.target_role, c.target_smiles).ids;
  const std::vector<gen::Sample> samples = gen::sample(
      *generator, std::vector<std::vector<int>>(static_cast<size_t>(c.samples), prompt), {c.max_new, c.seed});

  std::vector<std::string> valid;
  for (const gen::Sample& s : samples) {
    if (!s.finished) continue;
    std::string smiles = gen::decode_completion(generator->vocabulary(), s.ids);
    if (chem::is_valid_smiles(smiles)) valid.push_back(std::move(smiles));
  }
  // Ranked like the campaign memory: unique molecules by descending score.
  rl::EpisodicMemory ranked(static_cast<size_t>(c.samples));
  if (!valid.empty()) {
    const std::vector<rl::RewardValue> values = rl::predictor_reward(*model, c.target_smiles, c.target_role)(valid);
    for (size_t i = 0; i < valid.size(); ++i) {
      ranked.insert({valid[i], values[i].score, values[i].pce, rl::molecule_digest(valid[i])});
    }
  }
  rl::write_memory_csv(out_path(inv, "candidates.csv"), ranked);
  write_resolved_config(inv, c);
  *inv.out << fmt::format("{} samples, {} valid, {} unique candidates\n", samples.size(), valid.size(), ranked.size());
}

}  // namespace opv::cli
