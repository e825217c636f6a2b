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

#include "opvforge/gen/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "opvforge/ad/checkpoint.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/gen/config_json.hpp"

namespace opv::gen {

namespace fs = std::filesystem;

void PretrainConfig::check() const {
  model.check();
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be positive");
}

std::vector<std::vector<int>> encode_corpus(const chem::Vocabulary& vocab,
                                            const std::vector<data::PairSequenceEntry>& entries, int max_length) {
  std::vector<std::vector<int>> out;
  out.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    try {
      out.push_back(encode_pair(vocab, entries[i]).ids);
    } catch (const DataError& e) {
      throw DataError(fmt::format("pair sequence {}: {}", i + 1, e.what()));
    }
    if (static_cast<int>(out.back().size()) > max_length) {
      throw DataError(fmt::format("pair sequence {}: SequenceTooLong: {} tokens, maximum {}", i + 1,
                                  out.back().size(), max_length));
    }
  }
  return out;
}

double corpus_loss(Generator<float>& model, const std::vector<std::vector<int>>& sequences, int batch_size) {
  const std::vector<double> lp = sequence_log_probs(model, sequences, Scope::All, batch_size);
  double total = 0.0;
  int64_t tokens = 0;
  for (size_t i = 0; i < sequences.size(); ++i) {
    total -= lp[i];
    tokens += static_cast<int64_t>(sequences[i].size()) - 1;
  }
  if (tokens == 0) throw DataError("corpus has no next-token predictions");
  const double loss = total / static_cast<double>(tokens);
  if (!std::isfinite(loss)) throw NumericError("generator loss is not finite");
  return loss;
}

namespace {

enum Stream : uint64_t { kShuffle = 0x61, kDropout = 0x62 };

}  // namespace

std::vector<EpochPerplexity> pretrain_generator(Generator<float>& model,
                                                const std::vector<std::vector<int>>& sequences,
                                                const PretrainConfig& config,
                                                const std::function<void(const EpochPerplexity&)>& on_epoch) {
  config.check();
  if (sequences.empty()) throw DataError("generator pretraining corpus is empty");
  ad::AdamW optimizer(model.parameters(), config.adam);
  std::vector<EpochPerplexity> history;
  auto record = [&](int epoch) {
    EpochPerplexity e;
    e.epoch = epoch;
    e.loss = corpus_loss(model, sequences);
    e.perplexity = std::exp(e.loss);
    e.lr = optimizer.lr();
    history.push_back(e);
    if (on_epoch) on_epoch(e);
  };
  record(0);

  std::vector<size_t> order(sequences.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle(derive_seed(config.seed, kShuffle, static_cast<uint64_t>(epoch)));
    shuffle.shuffle(order);
    Rng dropout(derive_seed(config.seed, kDropout, static_cast<uint64_t>(epoch)));
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      std::vector<std::vector<int>> batch;
      for (size_t k = begin; k < end; ++k) batch.push_back(sequences[order[k]]);
      optimizer.zero_grad();
      ad::Tape<float> tape;
      const ad::Var<float> loss = model.lm_loss(tape, batch, &dropout, true);
      if (!std::isfinite(loss.value().item())) throw NumericError(fmt::format("non-finite loss in epoch {}", epoch));
      tape.backward(loss);
      optimizer.step();
    }
    record(epoch);
  }
  return history;
}

void save_generator(const std::string& dir, Generator<float>& model) {
  fs::create_directories(dir);
  ad::save_checkpoint((fs::path(dir) / kGeneratorWeightsFile).string(), model.parameters());
  const auto& texts = model.vocabulary().texts();
  nlohmann::json j = {{"model", model.config()},
                      {"tokens", std::vector<std::string>(texts.begin() + chem::Vocabulary().size(), texts.end())}};
  std::ofstream out(fs::path(dir) / kGeneratorConfigFile);
  if (!out) throw DataError("cannot write generator config in " + dir);
  out << j.dump(2) << '\n';
}

std::unique_ptr<Generator<float>> load_generator(const std::string& dir) {
  const fs::path config_path = fs::path(dir) / kGeneratorConfigFile;
  const fs::path weights_path = fs::path(dir) / kGeneratorWeightsFile;
  std::ifstream in(config_path);
  if (!in) throw DataError("MissingFile: " + config_path.string());
  if (!fs::exists(weights_path)) throw DataError("MissingFile: " + weights_path.string());
  GeneratorConfig config;
  std::vector<std::string> tokens;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    config = j.at("model").get<GeneratorConfig>();
    tokens = j.at("tokens").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed generator config " + config_path.string() + ": " + e.what());
  }
  auto model = std::make_unique<Generator<float>>(config, chem::Vocabulary(tokens), 0);
  ad::load_checkpoint(weights_path.string(), model->parameters());
  return model;
}

}  // namespace opv::gen
