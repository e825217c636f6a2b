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

namespace opv::gen {

struct PretrainConfig {
  GeneratorConfig model;
  int epochs = 20;
  int batch_size = 32;
  ad::AdamConfig adam;
  uint64_t seed = 0;

  void check() const;  // throws UsageError
};

// Perplexity is exp of the mean per-token negative log-likelihood over the
// whole corpus in evaluation mode.
struct EpochPerplexity {
  int epoch = 0;  // 0 = before any update
  double loss = 0.0;
  double perplexity = 0.0;
  double lr = 0.0;
};

// Encodes every entry; DataError names the 1-based entry that has an unknown
// token or exceeds max_length.
std::vector<std::vector<int>> encode_corpus(const chem::Vocabulary& vocab,
                                            const std::vector<data::PairSequenceEntry>& entries, int max_length);

// Mean per-token negative log-likelihood over all positions after BOS.
double corpus_loss(Generator<float>& model, const std::vector<std::vector<int>>& sequences, int batch_size = 64);

// Next-token cross-entropy with AdamW over shuffled mini-batches. Returns the
// epoch-0 evaluation followed by one entry per epoch. Throws NumericError on
// a non-finite loss.
std::vector<EpochPerplexity> pretrain_generator(Generator<float>& model,
                                                const std::vector<std::vector<int>>& sequences,
                                                const PretrainConfig& config,
                                                const std::function<void(const EpochPerplexity&)>& on_epoch = {});

inline constexpr const char* kGeneratorWeightsFile = "generator.bin";
inline constexpr const char* kGeneratorConfigFile = "generator.json";

// Weights plus a JSON file holding the model config and the vocabulary.
void save_generator(const std::string& dir, Generator<float>& model);
// Throws DataError("MissingFile") when either file is absent.
std::unique_ptr<Generator<float>> load_generator(const std::string& dir);

}  // namespace opv::gen
