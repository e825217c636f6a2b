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

#include "opvforge/rl/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "opvforge/ad/checkpoint.hpp"
#include "opvforge/chem/descriptors.hpp"
#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/chem/wl_hash.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"

namespace opv::rl {

void RlConfig::check() const {
  if (total_steps < 1) throw UsageError("total_steps must be positive");
  if (batch_size < 1) throw UsageError("batch_size must be positive");
  if (!(sigma0 > 0.0)) throw UsageError("sigma0 must be positive");
  if (!(replay_fraction > 0.0 && replay_fraction < 1.0)) throw UsageError("replay_fraction must be in (0, 1)");
  if (memory_capacity < 1) throw UsageError("memory_capacity must be positive");
  if (max_new < 1) throw UsageError("max_new must be positive");
  if (chunk_size < 1) throw UsageError("chunk_size must be positive");
  if (target_smiles.empty()) throw UsageError("target_smiles is required");
}

double score_from_pce(double pce) { return std::clamp(pce / 25.0, 0.0, 1.0); }

double rl_loss(double prior_logp, double agent_logp, double score, double sigma) {
  if (!std::isfinite(prior_logp) || !std::isfinite(agent_logp) || !std::isfinite(score) || !std::isfinite(sigma)) {
    throw NumericError("NonFiniteInput: rl_loss arguments must be finite");
  }
  const double d = prior_logp - agent_logp + sigma * score;
  return d * d;
}

ad::Var<float> rl_loss(ad::Var<float> agent_logp, const std::vector<double>& prior_logp,
                       const std::vector<double>& scores, double sigma) {
  const int64_t n = agent_logp.dim(0);
  if (static_cast<int64_t>(prior_logp.size()) != n || static_cast<int64_t>(scores.size()) != n) {
    throw ShapeError("rl_loss: batch sizes differ");
  }
  ad::Tensor<float> target({n, 1});
  for (int64_t i = 0; i < n; ++i) {
    const double t = prior_logp[static_cast<size_t>(i)] + sigma * scores[static_cast<size_t>(i)];
    if (!std::isfinite(t) || !std::isfinite(agent_logp.value()[i])) {
      throw NumericError("NonFiniteInput: rl_loss arguments must be finite");
    }
    target[i] = static_cast<float>(t);
  }
  return ad::mse_loss(agent_logp, target);
}

double sigma_schedule(int step, const RlConfig& config) {
  if (step < 0 || step > config.total_steps) {
    throw UsageError(fmt::format("StepOutOfRange: step {} outside [0, {}]", step, config.total_steps));
  }
  return config.sigma0 * (1.0 - static_cast<double>(step) / static_cast<double>(config.total_steps));
}

int replay_count(double fraction, int batch) {
  // Round first so that 0.05 * 120 counts as 6, not 6.000000000000001.
  const double exact = std::round(fraction * batch * 1e9) / 1e9;
  return static_cast<int>(std::ceil(exact));
}

std::string molecule_digest(const std::string& smiles) {
  return fmt::format("{:016x}", chem::wl_hash(chem::parse(smiles)));
}

EpisodicMemory::EpisodicMemory(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw UsageError("memory capacity must be positive");
}

bool EpisodicMemory::contains(const std::string& digest) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const MemoryEntry& e) { return e.digest == digest; });
}

bool EpisodicMemory::insert(MemoryEntry entry) {
  if (contains(entry.digest)) return false;
  const auto at = std::upper_bound(entries_.begin(), entries_.end(), entry.score,
                                   [](double s, const MemoryEntry& e) { return s > e.score; });
  if (at == entries_.end() && entries_.size() >= capacity_) return false;
  entries_.insert(at, std::move(entry));
  if (entries_.size() > capacity_) entries_.pop_back();
  return true;
}

RewardFn predictor_reward(predictor::PairPredictor<float>& model, const std::string& target_smiles,
                          data::Role target_role) {
  return [&model, target_smiles, target_role](const std::vector<std::string>& completions) {
    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(completions.size());
    for (const std::string& c : completions) {
      if (target_role == data::Role::Acceptor) {
        pairs.emplace_back(c, target_smiles);
      } else {
        pairs.emplace_back(target_smiles, c);
      }
    }
    std::vector<RewardValue> out;
    for (double pce : predictor::predict_smiles(model, pairs)) out.push_back({score_from_pce(pce), pce});
    return out;
  };
}

RewardFn aromatic_fraction_reward() {
  return [](const std::vector<std::string>& completions) {
    std::vector<RewardValue> out;
    for (const std::string& c : completions) {
      const double f = chem::aromatic_fraction(chem::parse(c));
      out.push_back({f, f});
    }
    return out;
  };
}

namespace {

enum Stream : uint64_t { kSample = 0x71 };

}  // namespace

Campaign::Campaign(RlConfig config, std::unique_ptr<gen::Generator<float>> prior, RewardFn reward)
    : config_(std::move(config)),
      prior_(std::move(prior)),
      reward_(std::move(reward)),
      memory_(static_cast<size_t>(std::max(1, config_.memory_capacity))) {
  config_.check();
  if (!prior_) throw UsageError("campaign needs a prior generator");
  if (!chem::is_valid_smiles(config_.target_smiles)) {
    throw DataError("target molecule does not parse or validate: " + config_.target_smiles);
  }
  prompt_ = gen::encode_prompt(prior_->vocabulary(), config_.target_role, config_.target_smiles).ids;
  if (static_cast<int>(prompt_.size()) >= prior_->config().max_length) {
    throw DataError("SequenceTooLong: target prompt leaves no room for a completion");
  }
  agent_ = std::make_unique<gen::Generator<float>>(prior_->config(), prior_->vocabulary(), 0);
  ad::assign_tensors(ad::snapshot(prior_->parameters()), agent_->parameters());
  optimizer_ = std::make_unique<ad::AdamW>(agent_->parameters(), config_.adam);
}

StepReport Campaign::step() {
  if (step_ >= config_.total_steps) throw UsageError("campaign already finished");
  StepReport report;
  report.step = step_;
  report.sigma = sigma_schedule(step_, config_);
  const chem::Vocabulary& vocab = prior_->vocabulary();
  const size_t batch = static_cast<size_t>(config_.batch_size);

  // (1) sample, (2) screen and score.
  const std::vector<gen::Sample> samples =
      gen::sample(*agent_, std::vector<std::vector<int>>(batch, prompt_),
                  gen::SampleOptions{config_.max_new, derive_seed(config_.seed, kSample, static_cast<uint64_t>(step_))});
  std::vector<std::vector<int>> sequences;
  std::vector<double> scores(batch, 0.0);
  std::vector<std::string> valid_smiles;
  std::vector<size_t> valid_index;
  for (size_t i = 0; i < batch; ++i) {
    sequences.push_back(samples[i].ids);
    if (!samples[i].finished) continue;
    std::string smiles = gen::decode_completion(vocab, samples[i].ids);
    if (!chem::is_valid_smiles(smiles)) continue;
    valid_smiles.push_back(std::move(smiles));
    valid_index.push_back(i);
  }
  std::vector<RewardValue> rewards;
  if (!valid_smiles.empty()) rewards = reward_(valid_smiles);
  if (rewards.size() != valid_smiles.size()) throw ShapeError("reward returned a wrong number of values");
  for (size_t k = 0; k < valid_index.size(); ++k) {
    if (!std::isfinite(rewards[k].score)) throw NumericError("non-finite reward for " + valid_smiles[k]);
    scores[valid_index[k]] = rewards[k].score;
  }

  // (4) replay the best stored molecules with their stored scores.
  const size_t replay = std::min(memory_.size(), static_cast<size_t>(replay_count(config_.replay_fraction,
                                                                                  config_.batch_size)));
  for (size_t r = 0; r < replay; ++r) {
    const MemoryEntry& e = memory_.entries()[r];
    sequences.push_back(gen::encode_pair(vocab, config_.target_role, config_.target_smiles, e.smiles).ids);
    scores.push_back(e.score);
  }
  report.replayed = static_cast<int>(replay);

  // (3) completion-only log-likelihoods, (5) one update on the mean loss.
  const std::vector<double> prior_logp = gen::sequence_log_probs(*prior_, sequences, gen::Scope::Completion);
  std::vector<size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return sequences[a].size() < sequences[b].size(); });
  const double n = static_cast<double>(sequences.size());
  optimizer_->zero_grad();
  double loss = 0.0;
  for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config_.chunk_size)) {
    const size_t end = std::min(order.size(), begin + static_cast<size_t>(config_.chunk_size));
    std::vector<std::vector<int>> chunk;
    std::vector<double> chunk_prior, chunk_scores;
    for (size_t k = begin; k < end; ++k) {
      chunk.push_back(sequences[order[k]]);
      chunk_prior.push_back(prior_logp[order[k]]);
      chunk_scores.push_back(scores[order[k]]);
    }
    ad::Tape<float> tape;
    const ad::Var<float> agent_logp = agent_->log_prob(tape, chunk, gen::Scope::Completion, nullptr, false);
    const ad::Var<float> chunk_loss =
        ad::scale(rl_loss(agent_logp, chunk_prior, chunk_scores, report.sigma), static_cast<float>(chunk.size() / n));
    loss += chunk_loss.value().item();
    tape.backward(chunk_loss);
  }
  if (!std::isfinite(loss)) throw NumericError(fmt::format("non-finite RL loss at step {}", step_));
  optimizer_->step();
  report.loss = loss;

  // (6) store new valid molecules.
  for (size_t k = 0; k < valid_index.size(); ++k) {
    memory_.insert(MemoryEntry{valid_smiles[k], rewards[k].score, rewards[k].pce, molecule_digest(valid_smiles[k])});
  }

  // (7) report over the sampled batch.
  report.mean_score = std::accumulate(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(batch), 0.0) /
                      static_cast<double>(batch);
  report.max_score = *std::max_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(batch));
  report.validity = static_cast<double>(valid_index.size()) / static_cast<double>(batch);
  if (memory_.size() > 0) {
    report.top1_pce = memory_.entries().front().pce;
    report.top1_score = memory_.entries().front().score;
  }
  ++step_;
  return report;
}

std::vector<StepReport> Campaign::run(const std::function<void(const StepReport&)>& on_step) {
  std::vector<StepReport> trend;
  while (step_ < config_.total_steps) {
    trend.push_back(step());
    if (on_step) on_step(trend.back());
  }
  return trend;
}

void write_trend_csv(const std::string& path, const std::vector<StepReport>& trend) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "step,top1_pce,mean_s,validity_rate,sigma\n";
  for (const StepReport& r : trend) {
    out << join_csv({std::to_string(r.step), format_fixed(r.top1_pce), format_fixed(r.mean_score),
                     format_fixed(r.validity), format_fixed(r.sigma)})
        << '\n';
  }
}

void write_memory_csv(const std::string& path, const EpisodicMemory& memory) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "rank,smiles,pce,score,digest\n";
  int rank = 1;
  for (const MemoryEntry& e : memory.entries()) {
    out << join_csv({std::to_string(rank++), e.smiles, format_fixed(e.pce), format_fixed(e.score), e.digest}) << '\n';
  }
}

}  // namespace opv::rl
