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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "opvforge/ad/checkpoint.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/gen/pretrain.hpp"
#include "opvforge/rl/campaign.hpp"
#include "opvforge/rl/config_json.hpp"

namespace opv::rl {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTarget = "c1ccsc1";

const std::vector<std::string>& completions() {
  static const std::vector<std::string> c = {"CCO", "c1ccccc1", "CC(C)O", "c1ccncc1", "CCN", "c1ccoc1", "CCCl", "OCCO"};
  return c;
}

gen::GeneratorConfig tiny_model() {
  gen::GeneratorConfig c;
  c.layers = 2;
  c.width = 32;
  c.heads = 4;
  c.max_length = 40;
  c.dropout = 0.0;
  return c;
}

// A prior that has memorised eight short completions of one acceptor prompt,
// so that sampling yields valid molecules most of the time.
std::unique_ptr<gen::Generator<float>> memorising_prior() {
  std::vector<std::string> smiles = completions();
  smiles.push_back(kTarget);
  chem::Vocabulary vocab = gen::generator_vocabulary(smiles);
  std::vector<data::PairSequenceEntry> entries;
  for (const std::string& c : completions()) entries.push_back({data::Role::Acceptor, kTarget, c});
  const std::vector<std::vector<int>> seqs = gen::encode_corpus(vocab, entries, 40);
  gen::PretrainConfig config;
  config.model = tiny_model();
  config.epochs = 60;
  config.batch_size = 8;
  config.adam.lr = 3e-3;
  config.adam.weight_decay = 0.0;
  config.seed = 5;
  auto prior = std::make_unique<gen::Generator<float>>(config.model, vocab, 3);
  gen::pretrain_generator(*prior, seqs, config);
  return prior;
}

// Trained once and copied for each campaign.
std::unique_ptr<gen::Generator<float>> prior_copy() {
  static const std::unique_ptr<gen::Generator<float>> trained = memorising_prior();
  auto copy = std::make_unique<gen::Generator<float>>(trained->config(), trained->vocabulary(), 0);
  ad::assign_tensors(ad::snapshot(trained->parameters()), copy->parameters());
  return copy;
}

RlConfig small_config(int steps = 4) {
  RlConfig c;
  c.total_steps = steps;
  c.batch_size = 16;
  c.replay_fraction = 0.2;
  c.memory_capacity = 50;
  c.target_smiles = kTarget;
  c.max_new = 20;
  c.chunk_size = 5;
  c.adam.lr = 1e-3;
  c.seed = 17;
  return c;
}

TEST(RlLoss, WorkedValues) {
  EXPECT_DOUBLE_EQ(rl_loss(-20.0, -20.0, 0.0, 100.0), 0.0);
  EXPECT_NEAR(rl_loss(-25.0, -5.0, 0.2, 100.0), 0.0, 1e-12);
  EXPECT_NEAR(rl_loss(-10.0, -12.0, 0.2, 100.0), 484.0, 1e-9);
  EXPECT_THROW(rl_loss(std::nan(""), -1.0, 0.0, 1.0), NumericError);
  EXPECT_THROW(rl_loss(-1.0, -1.0, INFINITY, 1.0), NumericError);
}

TEST(RlLoss, ScoreClamp) {
  EXPECT_NEAR(score_from_pce(20.99), 0.8396, 1e-12);
  EXPECT_EQ(score_from_pce(-3.0), 0.0);
  EXPECT_EQ(score_from_pce(40.0), 1.0);
  EXPECT_EQ(score_from_pce(25.0), 1.0);
}

TEST(RlLoss, BatchMeanAndGradient) {
  const std::vector<double> agent = {-3.0, -7.5, -1.25};
  const std::vector<double> prior = {-4.0, -6.0, -2.0};
  const std::vector<double> score = {0.1, 0.0, 0.5};
  const double sigma = 4.0;
  ad::Tape<float> tape;
  ad::Tensor<float> a({3, 1});
  for (int i = 0; i < 3; ++i) a[i] = static_cast<float>(agent[static_cast<size_t>(i)]);
  const ad::Var<float> leaf = tape.leaf(a);
  const ad::Var<float> loss = rl_loss(leaf, prior, score, sigma);
  double expected = 0.0;
  for (size_t i = 0; i < 3; ++i) expected += rl_loss(prior[i], agent[i], score[i], sigma) / 3.0;
  EXPECT_NEAR(loss.value().item(), expected, 1e-5);
  tape.backward(loss);
  const ad::Tensor<float>* g = tape.grad(leaf);
  ASSERT_NE(g, nullptr);
  for (size_t i = 0; i < 3; ++i) {
    const double d = 2.0 * (agent[i] - prior[i] - sigma * score[i]) / 3.0;
    EXPECT_NEAR((*g)[static_cast<int64_t>(i)], d, 1e-5);
  }
  EXPECT_THROW(rl_loss(leaf, {1.0}, score, sigma), ShapeError);
}

TEST(Schedule, SigmaEndpoints) {
  RlConfig c;
  EXPECT_DOUBLE_EQ(sigma_schedule(0, c), 100.0);
  EXPECT_DOUBLE_EQ(sigma_schedule(500, c), 50.0);
  EXPECT_DOUBLE_EQ(sigma_schedule(1000, c), 0.0);
  EXPECT_DOUBLE_EQ(sigma_schedule(250, c), 75.0);
  try {
    sigma_schedule(1001, c);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("StepOutOfRange"), std::string::npos);
  }
  EXPECT_THROW(sigma_schedule(-1, c), UsageError);
}

TEST(Schedule, ReplayCount) {
  EXPECT_EQ(replay_count(0.05, 128), 7);
  EXPECT_EQ(replay_count(0.05, 120), 6);
  EXPECT_EQ(replay_count(0.05, 1), 1);
  EXPECT_EQ(replay_count(0.2, 16), 4);
}

TEST(Config, Validation) {
  RlConfig c = small_config();
  EXPECT_NO_THROW(c.check());
  c.replay_fraction = 0.0;
  EXPECT_THROW(c.check(), UsageError);
  c = small_config();
  c.target_smiles.clear();
  EXPECT_THROW(c.check(), UsageError);
  c = small_config();
  c.batch_size = 0;
  EXPECT_THROW(c.check(), UsageError);
}

const ad::Tensor<float>& tensor_named(const ad::NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range(name);
}

MemoryEntry entry(const std::string& smiles, double score) {
  return MemoryEntry{smiles, score, score * 25.0, molecule_digest(smiles)};
}

TEST(Memory, DigestIsCanonical) {
  EXPECT_EQ(molecule_digest("OCC"), molecule_digest("CCO"));
  EXPECT_NE(molecule_digest("CCO"), molecule_digest("CCN"));
  EXPECT_EQ(molecule_digest("CCO").size(), 16u);
}

TEST(Memory, DeduplicatesAndSorts) {
  EpisodicMemory m(10);
  EXPECT_TRUE(m.insert(entry("CCO", 0.3)));
  EXPECT_TRUE(m.insert(entry("CCN", 0.7)));
  EXPECT_FALSE(m.insert(entry("OCC", 0.9)));  // same molecule as CCO
  EXPECT_TRUE(m.insert(entry("CCCl", 0.3)));
  EXPECT_TRUE(m.insert(entry("c1ccccc1", 0.5)));
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m.entries()[0].smiles, "CCN");
  EXPECT_EQ(m.entries()[1].smiles, "c1ccccc1");
  EXPECT_EQ(m.entries()[2].smiles, "CCO");  // tie keeps insertion order
  EXPECT_EQ(m.entries()[3].smiles, "CCCl");
  EXPECT_NEAR(m.entries()[2].score, 0.3, 0.0);
}

TEST(Memory, CapacityEvictsLowest) {
  EpisodicMemory m(3);
  m.insert(entry("CCO", 0.5));
  m.insert(entry("CCN", 0.4));
  m.insert(entry("CCCl", 0.6));
  EXPECT_FALSE(m.insert(entry("CCBr", 0.1)));
  EXPECT_TRUE(m.insert(entry("CCF", 0.45)));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.entries().back().smiles, "CCF");
  EXPECT_FALSE(m.contains(molecule_digest("CCN")));
  EXPECT_THROW(EpisodicMemory(0), UsageError);
}

TEST(Rewards, AromaticFraction) {
  const std::vector<RewardValue> r = aromatic_fraction_reward()({"c1ccccc1CC", "CCO"});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0].score, 6.0 / 8.0, 1e-12);
  EXPECT_EQ(r[1].score, 0.0);
  EXPECT_EQ(r[0].pce, r[0].score);
}

TEST(Gradient, ZeroAtFixedPointWithoutReward) {
  auto prior = prior_copy();
  std::vector<std::vector<int>> seqs;
  for (const std::string& c : completions()) {
    seqs.push_back(gen::encode_pair(prior->vocabulary(), data::Role::Acceptor, kTarget, c).ids);
  }
  const std::vector<double> prior_logp = gen::sequence_log_probs(*prior, seqs, gen::Scope::Completion);
  for (ad::Parameter<float>* p : prior->parameters()) p->zero_grad();
  ad::Tape<float> tape;
  const ad::Var<float> lp = prior->log_prob(tape, seqs, gen::Scope::Completion, nullptr, false);
  const ad::Var<float> loss = rl_loss(lp, prior_logp, std::vector<double>(seqs.size(), 0.7), 0.0);
  EXPECT_LT(loss.value().item(), 1e-9);
  tape.backward(loss);
  double max_grad = 0.0;
  for (ad::Parameter<float>* p : prior->parameters()) {
    if (!p->has_grad) continue;
    for (int64_t i = 0; i < p->grad.size(); ++i) max_grad = std::max(max_grad, std::abs(double(p->grad[i])));
  }
  EXPECT_LT(max_grad, 1e-4);
}

TEST(Gradient, StepAlongNegativeGradientLowersLoss) {
  auto prior = prior_copy();
  std::vector<std::vector<int>> seqs;
  std::vector<double> scores;
  for (size_t i = 0; i < completions().size(); ++i) {
    seqs.push_back(gen::encode_pair(prior->vocabulary(), data::Role::Acceptor, kTarget, completions()[i]).ids);
    scores.push_back(static_cast<double>(i) / 8.0);
  }
  const std::vector<double> prior_logp = gen::sequence_log_probs(*prior, seqs, gen::Scope::Completion);
  auto loss_at = [&](bool backward) {
    ad::Tape<float> tape(backward);
    const ad::Var<float> lp = prior->log_prob(tape, seqs, gen::Scope::Completion, nullptr, false);
    const ad::Var<float> loss = rl_loss(lp, prior_logp, scores, 10.0);
    if (backward) tape.backward(loss);
    return static_cast<double>(loss.value().item());
  };
  for (ad::Parameter<float>* p : prior->parameters()) p->zero_grad();
  const double before = loss_at(true);
  EXPECT_GT(before, 1.0);
  for (ad::Parameter<float>* p : prior->parameters()) {
    if (!p->has_grad) continue;
    for (int64_t i = 0; i < p->value.size(); ++i) p->value[i] -= 1e-4f * p->grad[i];
  }
  EXPECT_LT(loss_at(false), before);
}

TEST(Campaign, RejectsBadTarget) {
  RlConfig c = small_config();
  c.target_smiles = "c1ccc";
  EXPECT_THROW(Campaign(c, prior_copy(), aromatic_fraction_reward()), DataError);
  EXPECT_THROW(Campaign(small_config(), nullptr, aromatic_fraction_reward()), UsageError);
}

TEST(Campaign, StepsKeepInvariants) {
  Campaign campaign(small_config(4), prior_copy(), aromatic_fraction_reward());
  const ad::NamedTensors prior_before = ad::snapshot(campaign.prior().parameters());
  const ad::NamedTensors agent_before = ad::snapshot(campaign.agent().parameters());
  ASSERT_EQ(prior_before.size(), agent_before.size());
  double top1 = -1.0;
  size_t memory_before = 0;
  std::vector<StepReport> trend = campaign.run([&](const StepReport& r) {
    EXPECT_EQ(r.replayed, static_cast<int>(std::min<size_t>(memory_before, 4)));
    memory_before = campaign.memory().size();
    EXPECT_GE(r.top1_score, top1);
    top1 = r.top1_score;
    EXPECT_GE(r.validity, 0.0);
    EXPECT_LE(r.validity, 1.0);
    EXPECT_TRUE(std::isfinite(r.loss));
  });
  ASSERT_EQ(trend.size(), 4u);
  EXPECT_DOUBLE_EQ(trend[0].sigma, 100.0);
  EXPECT_DOUBLE_EQ(trend[2].sigma, 50.0);
  EXPECT_GT(trend[0].validity, 0.25);
  EXPECT_THROW(campaign.step(), UsageError);

  // The prior is frozen bitwise; the agent moved.
  const ad::NamedTensors prior_after = ad::snapshot(campaign.prior().parameters());
  const ad::NamedTensors agent_after = ad::snapshot(campaign.agent().parameters());
  bool agent_moved = false;
  for (const auto& [name, tensor] : prior_before) {
    const ad::Tensor<float>& after = tensor_named(prior_after, name);
    for (int64_t i = 0; i < tensor.size(); ++i) ASSERT_EQ(tensor[i], after[i]) << name;
    const ad::Tensor<float>& a0 = tensor_named(agent_before, name);
    const ad::Tensor<float>& a1 = tensor_named(agent_after, name);
    for (int64_t i = 0; i < a0.size(); ++i) agent_moved = agent_moved || a0[i] != a1[i];
  }
  EXPECT_TRUE(agent_moved);

  // Memory holds unique, valid molecules in score order.
  std::set<std::string> digests;
  double previous = 2.0;
  ASSERT_GT(campaign.memory().size(), 0u);
  for (const MemoryEntry& e : campaign.memory().entries()) {
    EXPECT_TRUE(chem::is_valid_smiles(e.smiles)) << e.smiles;
    EXPECT_TRUE(digests.insert(e.digest).second);
    EXPECT_LE(e.score, previous);
    previous = e.score;
  }
}

TEST(Campaign, AgentStartsAsPriorCopy) {
  Campaign campaign(small_config(), prior_copy(), aromatic_fraction_reward());
  const ad::NamedTensors p = ad::snapshot(campaign.prior().parameters());
  const ad::NamedTensors a = ad::snapshot(campaign.agent().parameters());
  for (const auto& [name, tensor] : p) {
    for (int64_t i = 0; i < tensor.size(); ++i) ASSERT_EQ(tensor[i], tensor_named(a, name)[i]);
  }
  EXPECT_EQ(campaign.prompt(),
            gen::encode_prompt(campaign.prior().vocabulary(), data::Role::Acceptor, kTarget).ids);
}

TEST(Campaign, InvalidSamplesScoreZero) {
  int calls = 0;
  size_t scored = 0;
  RewardFn counting = [&](const std::vector<std::string>& smiles) {
    ++calls;
    scored += smiles.size();
    for (const std::string& s : smiles) EXPECT_TRUE(chem::is_valid_smiles(s));
    return std::vector<RewardValue>(smiles.size(), RewardValue{1.0, 25.0});
  };
  Campaign campaign(small_config(1), prior_copy(), counting);
  const StepReport r = campaign.step();
  EXPECT_LE(calls, 1);
  EXPECT_NEAR(r.validity, static_cast<double>(scored) / 16.0, 1e-12);
  // Valid samples score 1 and the rest 0, so the mean equals the validity.
  EXPECT_NEAR(r.mean_score, r.validity, 1e-12);
}

TEST(Campaign, SameSeedSameTrend) {
  auto run = [] {
    Campaign campaign(small_config(3), prior_copy(), aromatic_fraction_reward());
    return campaign.run();
  };
  const std::vector<StepReport> a = run();
  const std::vector<StepReport> b = run();
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean_score, b[i].mean_score);
    EXPECT_EQ(a[i].validity, b[i].validity);
    EXPECT_EQ(a[i].loss, b[i].loss);
    EXPECT_EQ(a[i].top1_pce, b[i].top1_pce);
  }
}

TEST(Csv, TrendAndMemoryFiles) {
  Campaign campaign(small_config(2), prior_copy(), aromatic_fraction_reward());
  const std::vector<StepReport> trend = campaign.run();
  const fs::path dir = fs::temp_directory_path() / "opvforge_rl_csv";
  fs::create_directories(dir);
  write_trend_csv((dir / "trend.csv").string(), trend);
  write_memory_csv((dir / "memory.csv").string(), campaign.memory());
  std::ifstream in(dir / "trend.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,top1_pce,mean_s,validity_rate,sigma");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
  std::ifstream mem(dir / "memory.csv");
  std::getline(mem, line);
  EXPECT_EQ(line, "rank,smiles,pce,score,digest");
  rows = 0;
  while (std::getline(mem, line)) {
    ++rows;
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u);
  }
  EXPECT_EQ(static_cast<size_t>(rows), campaign.memory().size());
  fs::remove_all(dir);
}

TEST(ConfigJson, RoundTripAndErrors) {
  CampaignFile f;
  f.rl = small_config();
  f.rl.target_role = data::Role::Donor;
  f.prior_dir = "prior";
  f.predictor_dir = "pred";
  const nlohmann::json j = f;
  EXPECT_EQ(j.at("target_role"), "donor");
  const CampaignFile back = j.get<CampaignFile>();
  EXPECT_EQ(back.rl.total_steps, f.rl.total_steps);
  EXPECT_EQ(back.rl.target_role, data::Role::Donor);
  EXPECT_EQ(back.rl.replay_fraction, f.rl.replay_fraction);
  EXPECT_EQ(back.prior_dir, "prior");
  EXPECT_NO_THROW(back.check());
  EXPECT_THROW(nlohmann::json({{"sigma", 1.0}}).get<RlConfig>(), UsageError);
  EXPECT_THROW(nlohmann::json({{"target_role", "both"}}).get<CampaignFile>(), UsageError);
  CampaignFile bad = back;
  bad.reward = "qed";
  EXPECT_THROW(bad.check(), UsageError);
  bad = back;
  bad.predictor_dir.clear();
  EXPECT_THROW(bad.check(), UsageError);
  bad.reward = "aromatic";
  EXPECT_NO_THROW(bad.check());
}

}  // namespace
}  // namespace opv::rl
