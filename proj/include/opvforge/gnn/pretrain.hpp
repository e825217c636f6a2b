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
#include <string>
#include <vector>

#include "opvforge/ad/optim.hpp"
#include "opvforge/data/corpus.hpp"
#include "opvforge/gnn/encoder.hpp"

namespace opv::gnn {

struct PretrainConfig {
  EncoderConfig encoder;
  int epochs = 30;
  int batch_size = 32;
  ad::AdamConfig adam;
  ad::PlateauConfig plateau;
  uint64_t seed = 0;

  void check() const;  // throws UsageError
};

// Losses are measured in evaluation mode (no dropout) over the whole corpus
// with masks fixed per molecule, so epochs are directly comparable.
struct EpochLosses {
  int epoch = 0;  // 0 = before any update
  double reconstruction = 0.0;
  double homo_lumo = 0.0;  // mean squared error in eV^2; 0 when no labels
  double mask_accuracy = 0.0;
  double lr = 0.0;
};

// Masked-atom predictions counted over a molecule set.
struct MaskEvaluation {
  int64_t masked = 0;
  int64_t correct = 0;
  double loss = 0.0;
  // Accuracy of always guessing the most common true label in this set.
  double majority_accuracy = 0.0;

  double accuracy() const { return masked == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(masked); }
};

// Files written by EncoderPretrainer::save into a directory.
inline constexpr const char* kPretrainWeightsFile = "pretrain.bin";
inline constexpr const char* kPretrainOptimizerFile = "pretrain_optimizer.bin";
inline constexpr const char* kPretrainStateFile = "pretrain_state.json";

// Parameter names inside pretrain.bin start with this prefix.
inline constexpr const char* kEncoderPrefix = "encoder";

// Masked-element reconstruction and HOMO/LUMO regression on one shared
// encoder. Each mini-batch takes a reconstruction update and then a
// HOMO/LUMO update with the same AdamW optimizer; the plateau schedule
// watches the sum of both evaluation losses.
class EncoderPretrainer {
 public:
  // Throws DataError on an empty corpus or on a SMILES that fails to parse
  // or validate, naming the 1-based entry.
  EncoderPretrainer(const PretrainConfig& config, std::vector<data::MoleculeEntry> corpus);

  const PretrainConfig& config() const { return config_; }
  int epoch() const { return epoch_; }
  const std::vector<EpochLosses>& history() const { return history_; }

  // Evaluation of the current weights; does not change state.
  EpochLosses evaluate();

  // One pass over the shuffled corpus followed by evaluate(). The first call
  // also records the epoch-0 evaluation.
  EpochLosses train_epoch();

  // Trains until config().epochs epochs are done, reporting each one.
  void run(const std::function<void(const EpochLosses&)>& on_epoch = {});

  MaskEvaluation evaluate_masks(const std::vector<data::MoleculeEntry>& molecules, uint64_t mask_seed);

  // Weights, optimizer moments and a JSON state file for exact resumption.
  void save(const std::string& dir) const;
  // Restores a directory written by save(); the encoder shape in the file
  // must match this pretrainer's config.
  void load(const std::string& dir);

  GraphEncoder<float>& encoder() { return encoder_; }
  ReconstructionHead<float>& reconstruction_head() { return recon_; }
  HomoLumoHead<float>& homo_lumo_head() { return homo_lumo_; }
  ad::ParameterRefs<float> parameters();

 private:
  struct Item {
    GraphFeatures features;
    std::vector<int> elements;
    bool labeled = false;
    float homo = 0.0f;
    float lumo = 0.0f;
  };

  void ensure_initial_evaluation();

  PretrainConfig config_;
  std::vector<Item> items_;
  std::vector<MaskedAtoms> eval_masks_;
  GraphEncoder<float> encoder_;
  ReconstructionHead<float> recon_;
  HomoLumoHead<float> homo_lumo_;
  ad::AdamW optimizer_;
  ad::PlateauScheduler scheduler_;
  int epoch_ = 0;
  std::vector<EpochLosses> history_;
};

// Reads the encoder config stored next to a pretraining checkpoint.
EncoderConfig read_encoder_config(const std::string& dir);

// Copies "encoder.*" weights from pretrain.bin into an encoder whose
// parameters use another prefix.
void load_pretrained_encoder(const std::string& dir, GraphEncoder<float>& encoder, const std::string& prefix);

}  // namespace opv::gnn
