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
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "opvforge/ad/optim.hpp"
#include "opvforge/data/corpus.hpp"
#include "opvforge/gen/generator.hpp"
#include "opvforge/predictor/predictor.hpp"

namespace opv::rl {

struct RlConfig {
  int total_steps = 1000;
  int batch_size = 128;
  double sigma0 = 100.0;
  double replay_fraction = 0.05;
  int memory_capacity = 1000;
  std::string target_smiles;                   // the fixed prompt molecule
  data::Role target_role = data::Role::Acceptor;  // role of the prompt; the agent designs the counterpart
  int max_new = 128;                           // generated-token cap per sample
  int chunk_size = 32;                         // sequences per forward/backward pass
  ad::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8, 0.0};
  uint64_t seed = 0;

  void check() const;  // throws UsageError
};

// s = clamp(pce / 25, 0, 1).
double score_from_pce(double pce);

// (prior_logp - agent_logp + sigma * s)^2. Throws NumericError("NonFiniteInput")
// on a non-finite argument.
double rl_loss(double prior_logp, double agent_logp, double score, double sigma);

// Batch mean of rl_loss with the agent term differentiable. agent_logp is
// [N, 1]; prior_logp and scores hold N values.
ad::Var<float> rl_loss(ad::Var<float> agent_logp, const std::vector<double>& prior_logp,
                       const std::vector<double>& scores, double sigma);

// sigma0 * (1 - step / total). Throws UsageError("StepOutOfRange") outside
// [0, total].
double sigma_schedule(int step, const RlConfig& config);

// ceil(fraction * batch) without floating-point surprises at exact products.
int replay_count(double fraction, int batch);

struct MemoryEntry {
  std::string smiles;  // the generated molecule
  double score = 0.0;
  double pce = 0.0;    // value the score was derived from
  std::string digest;  // WL hash, 16 hex digits
};

std::string molecule_digest(const std::string& smiles);

// Score-ordered store of unique valid molecules. Ties keep insertion order.
class EpisodicMemory {
 public:
  explicit EpisodicMemory(size_t capacity = 1000);

  // False when the digest is already stored or the entry would fall off the
  // end of a full memory.
  bool insert(MemoryEntry entry);

  const std::vector<MemoryEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t capacity() const { return capacity_; }
  bool contains(const std::string& digest) const;

 private:
  size_t capacity_;
  std::vector<MemoryEntry> entries_;
};

struct RewardValue {
  double score = 0.0;
  double pce = 0.0;
};

// Scores a batch of valid completion SMILES.
using RewardFn = std::function<std::vector<RewardValue>(const std::vector<std::string>& completions)>;

// Predicted PCE of (completion, target) assembled in their proper roles.
RewardFn predictor_reward(predictor::PairPredictor<float>& model, const std::string& target_smiles,
                          data::Role target_role);

// s = aromatic-atom fraction of the completion; reported as its pce value too.
RewardFn aromatic_fraction_reward();

struct StepReport {
  int step = 0;
  double sigma = 0.0;
  double mean_score = 0.0;  // over the sampled batch, invalid samples count 0
  double max_score = 0.0;
  double validity = 0.0;    // valid samples / batch
  int replayed = 0;
  double loss = 0.0;
  double top1_pce = 0.0;    // after the step's memory update; 0 while empty
  double top1_score = 0.0;
};

// Agent fine-tuning against a frozen prior. Each step samples a batch from
// the agent, screens and scores it, appends the best memory entries, takes
// one AdamW step on the mean squared-error loss over completion-only
// log-likelihoods, and then stores the new valid molecules.
class Campaign {
 public:
  // The agent starts as an exact copy of the prior. Throws DataError when the
  // target does not parse, validate or encode.
  Campaign(RlConfig config, std::unique_ptr<gen::Generator<float>> prior, RewardFn reward);

  const RlConfig& config() const { return config_; }
  int step_index() const { return step_; }
  StepReport step();
  std::vector<StepReport> run(const std::function<void(const StepReport&)>& on_step = {});

  gen::Generator<float>& prior() { return *prior_; }
  gen::Generator<float>& agent() { return *agent_; }
  const EpisodicMemory& memory() const { return memory_; }
  const std::vector<int>& prompt() const { return prompt_; }

 private:
  RlConfig config_;
  std::unique_ptr<gen::Generator<float>> prior_;
  std::unique_ptr<gen::Generator<float>> agent_;
  RewardFn reward_;
  std::unique_ptr<ad::AdamW> optimizer_;
  EpisodicMemory memory_;
  std::vector<int> prompt_;
  int step_ = 0;
};

// step,top1_pce,mean_s,validity_rate,sigma
void write_trend_csv(const std::string& path, const std::vector<StepReport>& trend);
// rank,smiles,pce,score,digest
void write_memory_csv(const std::string& path, const EpisodicMemory& memory);

}  // namespace opv::rl
