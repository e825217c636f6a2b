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
#include <utility>
#include <vector>

#include "opvforge/ad/nn.hpp"
#include "opvforge/ad/optim.hpp"
#include "opvforge/data/metrics.hpp"
#include "opvforge/data/records.hpp"
#include "opvforge/gnn/encoder.hpp"

namespace opv::predictor {

struct PredictorConfig {
  gnn::EncoderConfig encoder;
  int attention_heads = 8;
  double attention_dropout = 0.1;
  int head_hidden = 256;
  double head_dropout = 0.1;

  int fused_width() const { return 4 * encoder.hidden; }
  void check() const;  // throws UsageError
};

// Node embeddings laid out for batched attention: [graphs, max_nodes, hidden]
// with zero rows past each graph's length.
template <typename T>
struct PaddedNodes {
  ad::Var<T> padded;
  std::vector<int> lengths;
  std::vector<int> valid_rows;  // row in the flattened padded tensor of every real node, in batch order
};

template <typename T>
PaddedNodes<T> pad_nodes(ad::Var<T> nodes, const gnn::GraphBatch& batch);

template <typename T>
struct CrossAttended {
  ad::Var<T> donor;     // [donor nodes, hidden], donor queries over acceptor nodes
  ad::Var<T> acceptor;  // [acceptor nodes, hidden], acceptor queries over donor nodes
};

// Two encoders, bidirectional cross-attention, mean pooling of the attended
// nodes, and Linear -> ReLU -> Dropout -> Linear over
// [donor graph | acceptor graph | pooled donor-attended | pooled acceptor-attended].
template <typename T>
class PairPredictor {
 public:
  PairPredictor() = default;
  PairPredictor(const PredictorConfig& config, uint64_t seed);
  PairPredictor(const PairPredictor&) = delete;
  PairPredictor& operator=(const PairPredictor&) = delete;

  const PredictorConfig& config() const { return config_; }
  ad::ParameterRefs<T> parameters();

  gnn::GraphEncoder<T>& donor_encoder() { return donor_encoder_; }
  gnn::GraphEncoder<T>& acceptor_encoder() { return acceptor_encoder_; }
  ad::MultiHeadAttention<T>& donor_to_acceptor() { return donor_to_acceptor_; }
  ad::MultiHeadAttention<T>& acceptor_to_donor() { return acceptor_to_donor_; }

  // Throws DataError("EmptyNodeSet") when any graph has no nodes. The weight
  // outputs receive [B, heads, Tq, Tk] tensors.
  CrossAttended<T> cross_attend(ad::Tape<T>& tape, ad::Var<T> donor_nodes, const gnn::GraphBatch& donors,
                                ad::Var<T> acceptor_nodes, const gnn::GraphBatch& acceptors, Rng* rng, bool training,
                                ad::Tensor<T>* donor_weights = nullptr, ad::Tensor<T>* acceptor_weights = nullptr);

  // [B, 4 * hidden].
  ad::Var<T> fuse(ad::Var<T> donor_graph, ad::Var<T> acceptor_graph, const CrossAttended<T>& attended,
                  const gnn::GraphBatch& donors, const gnn::GraphBatch& acceptors);

  // [B, 1] predicted PCE in percent.
  ad::Var<T> forward(ad::Tape<T>& tape, const gnn::GraphBatch& donors, const gnn::GraphBatch& acceptors, Rng* rng,
                     bool training);

  // Initial output offset, e.g. the mean training PCE.
  void set_output_bias(T value);

 private:
  PredictorConfig config_;
  gnn::GraphEncoder<T> donor_encoder_;
  gnn::GraphEncoder<T> acceptor_encoder_;
  ad::MultiHeadAttention<T> donor_to_acceptor_;
  ad::MultiHeadAttention<T> acceptor_to_donor_;
  ad::Linear<T> head_hidden_;
  ad::Linear<T> head_out_;
};

// Featurized pair with its label.
struct PairExample {
  gnn::GraphFeatures donor;
  gnn::GraphFeatures acceptor;
  double pce = 0.0;
};

// Parses, validates and featurizes; DataError names the offending record.
std::vector<PairExample> make_examples(const std::vector<data::PairRecord>& records);

struct PairBatch {
  gnn::GraphBatch donors;
  gnn::GraphBatch acceptors;
  std::vector<float> targets;
};

PairBatch batch_examples(const std::vector<const PairExample*>& examples);

// Evaluation-mode predictions in batches.
std::vector<double> predict(PairPredictor<float>& model, const std::vector<const PairExample*>& examples,
                            int batch_size = 64);

// Convenience for SMILES pairs; both molecules must parse and validate.
std::vector<double> predict_smiles(PairPredictor<float>& model,
                                   const std::vector<std::pair<std::string, std::string>>& pairs, int batch_size = 64);

struct TrainConfig {
  PredictorConfig model;
  int epochs = 60;
  int batch_size = 32;
  ad::AdamConfig adam;
  ad::PlateauConfig plateau;
  uint64_t split_seed = 0;
  uint64_t seed = 0;
  std::string pretrained_dir;  // empty: random encoder initialization

  void check() const;
};

struct TrainResult {
  data::RegressionReport report;
  data::SplitIndices split;
};

// 80/10/10 split with data::split_indices(split_seed); MSE loss; plateau
// decay on validation MSE; the weights of the best validation epoch are
// restored before the final metrics are computed.
TrainResult train_predictor(PairPredictor<float>& model, const std::vector<data::PairRecord>& records,
                            const TrainConfig& config,
                            const std::function<void(const data::EpochMetrics&)>& on_epoch = {});

// Predictor weights plus predictor_config.json in `dir`.
void save_predictor(const std::string& dir, PairPredictor<float>& model);
PredictorConfig read_predictor_config(const std::string& dir);
void load_predictor(const std::string& dir, PairPredictor<float>& model);

inline constexpr const char* kPredictorWeightsFile = "predictor.bin";
inline constexpr const char* kPredictorConfigFile = "predictor_config.json";

}  // namespace opv::predictor
