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

#include "opvforge/predictor/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "opvforge/ad/checkpoint.hpp"
#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/gnn/pretrain.hpp"
#include "opvforge/predictor/config_json.hpp"

namespace opv::predictor {

namespace fs = std::filesystem;
using ad::Tape;
using ad::Tensor;
using ad::Var;

void PredictorConfig::check() const {
  encoder.check();
  if (attention_heads < 1 || encoder.hidden % attention_heads != 0) {
    throw UsageError("attention heads must divide the encoder hidden width");
  }
  if (head_hidden < 1) throw UsageError("head_hidden must be >= 1");
  if (!(attention_dropout >= 0.0 && attention_dropout < 1.0) || !(head_dropout >= 0.0 && head_dropout < 1.0)) {
    throw UsageError("dropout rates must lie in [0, 1)");
  }
}

template <typename T>
PaddedNodes<T> pad_nodes(Var<T> nodes, const gnn::GraphBatch& batch) {
  PaddedNodes<T> out;
  int longest = 0;
  for (int g = 0; g < batch.graphs; ++g) {
    const int n = batch.offsets[static_cast<size_t>(g) + 1] - batch.offsets[static_cast<size_t>(g)];
    if (n == 0) throw DataError("EmptyNodeSet: cross-attention needs at least one node per molecule");
    out.lengths.push_back(n);
    longest = std::max(longest, n);
  }
  std::vector<int> gather(static_cast<size_t>(batch.graphs) * static_cast<size_t>(longest), -1);
  for (int g = 0; g < batch.graphs; ++g) {
    for (int k = 0; k < out.lengths[static_cast<size_t>(g)]; ++k) {
      const int row = g * longest + k;
      gather[static_cast<size_t>(row)] = batch.offsets[static_cast<size_t>(g)] + k;
      out.valid_rows.push_back(row);
    }
  }
  out.padded = ad::reshape(ad::index_rows(nodes, gather), {batch.graphs, longest, nodes.dim(1)});
  return out;
}

template <typename T>
PairPredictor<T>::PairPredictor(const PredictorConfig& config, uint64_t seed)
    : config_(config),
      donor_encoder_(config.encoder, "donor_encoder", derive_seed(seed, 1)),
      acceptor_encoder_(config.encoder, "acceptor_encoder", derive_seed(seed, 2)),
      donor_to_acceptor_("donor_to_acceptor", config.encoder.hidden, config.attention_heads),
      acceptor_to_donor_("acceptor_to_donor", config.encoder.hidden, config.attention_heads),
      head_hidden_("head.hidden", config.fused_width(), config.head_hidden),
      head_out_("head.out", config.head_hidden, 1) {
  config_.check();
  Rng rng(derive_seed(seed, 3));
  donor_to_acceptor_.init(rng);
  acceptor_to_donor_.init(rng);
  head_hidden_.init(rng);
  head_out_.init(rng);
}

template <typename T>
ad::ParameterRefs<T> PairPredictor<T>::parameters() {
  ad::ParameterRefs<T> refs = donor_encoder_.parameters();
  for (ad::Parameter<T>* p : acceptor_encoder_.parameters()) refs.push_back(p);
  donor_to_acceptor_.collect(refs);
  acceptor_to_donor_.collect(refs);
  head_hidden_.collect(refs);
  head_out_.collect(refs);
  return refs;
}

template <typename T>
CrossAttended<T> PairPredictor<T>::cross_attend(Tape<T>& tape, Var<T> donor_nodes, const gnn::GraphBatch& donors,
                                                Var<T> acceptor_nodes, const gnn::GraphBatch& acceptors, Rng* rng,
                                                bool training, Tensor<T>* donor_weights, Tensor<T>* acceptor_weights) {
  if (donors.graphs != acceptors.graphs) throw ShapeError("donor and acceptor batches differ in size");
  const PaddedNodes<T> d = pad_nodes(donor_nodes, donors);
  const PaddedNodes<T> a = pad_nodes(acceptor_nodes, acceptors);
  const int64_t hidden = donor_nodes.dim(1);

  ad::AttentionOptions<T> to_acceptor;
  to_acceptor.key_lengths = a.lengths;
  to_acceptor.dropout = config_.attention_dropout;
  to_acceptor.rng = rng;
  to_acceptor.training = training;
  to_acceptor.weights_out = donor_weights;
  Var<T> donor_att = donor_to_acceptor_(tape, d.padded, a.padded, to_acceptor);

  ad::AttentionOptions<T> to_donor = to_acceptor;
  to_donor.key_lengths = d.lengths;
  to_donor.weights_out = acceptor_weights;
  Var<T> acceptor_att = acceptor_to_donor_(tape, a.padded, d.padded, to_donor);

  CrossAttended<T> out;
  out.donor = ad::index_rows(ad::reshape(donor_att, {donor_att.dim(0) * donor_att.dim(1), hidden}), d.valid_rows);
  out.acceptor =
      ad::index_rows(ad::reshape(acceptor_att, {acceptor_att.dim(0) * acceptor_att.dim(1), hidden}), a.valid_rows);
  return out;
}

template <typename T>
Var<T> PairPredictor<T>::fuse(Var<T> donor_graph, Var<T> acceptor_graph, const CrossAttended<T>& attended,
                              const gnn::GraphBatch& donors, const gnn::GraphBatch& acceptors) {
  Var<T> pooled_donor = ad::segment_mean(attended.donor, donors.node_graph, donors.graphs);
  Var<T> pooled_acceptor = ad::segment_mean(attended.acceptor, acceptors.node_graph, acceptors.graphs);
  return ad::concat<T>({donor_graph, acceptor_graph, pooled_donor, pooled_acceptor});
}

template <typename T>
Var<T> PairPredictor<T>::forward(Tape<T>& tape, const gnn::GraphBatch& donors, const gnn::GraphBatch& acceptors,
                                 Rng* rng, bool training) {
  gnn::EncoderOutput<T> d = donor_encoder_.encode(tape, donors, rng, training);
  gnn::EncoderOutput<T> a = acceptor_encoder_.encode(tape, acceptors, rng, training);
  const CrossAttended<T> attended = cross_attend(tape, d.node, donors, a.node, acceptors, rng, training);
  Var<T> fused = fuse(d.graph, a.graph, attended, donors, acceptors);
  Var<T> hidden = ad::dropout(ad::relu(head_hidden_(tape, fused)), config_.head_dropout, rng, training);
  return head_out_(tape, hidden);
}

template <typename T>
void PairPredictor<T>::set_output_bias(T value) {
  head_out_.bias.value.fill(value);
}

template PaddedNodes<float> pad_nodes(Var<float>, const gnn::GraphBatch&);
template PaddedNodes<double> pad_nodes(Var<double>, const gnn::GraphBatch&);
template class PairPredictor<float>;
template class PairPredictor<double>;

namespace {

gnn::GraphFeatures featurize_checked(const std::string& smiles, size_t record, const char* role) {
  const std::string where = "record " + std::to_string(record + 1) + " " + role;
  chem::MolecularGraph graph;
  try {
    graph = chem::parse(smiles);
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  if (!chem::validate(graph).valid) throw DataError(where + ": invalid molecule " + smiles);
  return gnn::featurize(graph);
}

double batch_mse(PairPredictor<float>& model, const std::vector<PairExample>& examples, const std::vector<size_t>& idx,
                 int batch_size) {
  std::vector<const PairExample*> subset;
  std::vector<double> actual;
  for (size_t i : idx) {
    subset.push_back(&examples[i]);
    actual.push_back(examples[i].pce);
  }
  return data::mean_squared_error(predict(model, subset, batch_size), actual);
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

std::vector<PairExample> make_examples(const std::vector<data::PairRecord>& records) {
  std::vector<PairExample> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    PairExample ex;
    ex.donor = featurize_checked(records[i].donor_smiles, i, "donor");
    ex.acceptor = featurize_checked(records[i].acceptor_smiles, i, "acceptor");
    ex.pce = records[i].pce;
    out.push_back(std::move(ex));
  }
  return out;
}

PairBatch batch_examples(const std::vector<const PairExample*>& examples) {
  std::vector<const gnn::GraphFeatures*> donors, acceptors;
  PairBatch out;
  for (const PairExample* ex : examples) {
    donors.push_back(&ex->donor);
    acceptors.push_back(&ex->acceptor);
    out.targets.push_back(static_cast<float>(ex->pce));
  }
  out.donors = gnn::batch_graphs(donors);
  out.acceptors = gnn::batch_graphs(acceptors);
  return out;
}

std::vector<double> predict(PairPredictor<float>& model, const std::vector<const PairExample*>& examples,
                            int batch_size) {
  std::vector<double> out;
  out.reserve(examples.size());
  const size_t bs = static_cast<size_t>(std::max(1, batch_size));
  for (size_t begin = 0; begin < examples.size(); begin += bs) {
    const size_t end = std::min(examples.size(), begin + bs);
    const PairBatch batch =
        batch_examples(std::vector<const PairExample*>(examples.begin() + static_cast<std::ptrdiff_t>(begin),
                                                       examples.begin() + static_cast<std::ptrdiff_t>(end)));
    Tape<float> tape(false);
    const Tensor<float>& y = model.forward(tape, batch.donors, batch.acceptors, nullptr, false).value();
    for (int64_t i = 0; i < y.size(); ++i) out.push_back(y[i]);
  }
  return out;
}

std::vector<double> predict_smiles(PairPredictor<float>& model,
                                   const std::vector<std::pair<std::string, std::string>>& pairs, int batch_size) {
  std::vector<PairExample> examples;
  examples.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    PairExample ex;
    ex.donor = featurize_checked(pairs[i].first, i, "donor");
    ex.acceptor = featurize_checked(pairs[i].second, i, "acceptor");
    examples.push_back(std::move(ex));
  }
  std::vector<const PairExample*> ptrs;
  for (const PairExample& ex : examples) ptrs.push_back(&ex);
  return predict(model, ptrs, batch_size);
}

void TrainConfig::check() const {
  model.check();
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(adam.lr > 0.0)) throw UsageError("learning rate must be positive");
}

TrainResult train_predictor(PairPredictor<float>& model, const std::vector<data::PairRecord>& records,
                            const TrainConfig& config, const std::function<void(const data::EpochMetrics&)>& on_epoch) {
  config.check();
  TrainResult result;
  result.split = data::split_indices(records.size(), config.split_seed);
  const std::vector<PairExample> examples = make_examples(records);
  const data::SplitIndices& split = result.split;

  data::RegressionReport& report = result.report;
  report.model = "pair-predictor";
  report.init = config.pretrained_dir.empty() ? "random" : "pretrained";
  report.split_seed = config.split_seed;
  report.train_size = split.train.size();
  report.val_size = split.val.size();
  report.test_size = split.test.size();

  if (!config.pretrained_dir.empty()) {
    const gnn::EncoderConfig stored = gnn::read_encoder_config(config.pretrained_dir);
    const gnn::EncoderConfig& want = model.config().encoder;
    if (stored.layers != want.layers || stored.hidden != want.hidden || stored.heads != want.heads) {
      throw UsageError("pretrained encoder shape does not match the predictor encoder config");
    }
    gnn::load_pretrained_encoder(config.pretrained_dir, model.donor_encoder(), "donor_encoder");
    gnn::load_pretrained_encoder(config.pretrained_dir, model.acceptor_encoder(), "acceptor_encoder");
  }
  double train_mean = 0.0;
  for (size_t i : split.train) train_mean += examples[i].pce;
  model.set_output_bias(static_cast<float>(train_mean / static_cast<double>(split.train.size())));

  ad::AdamW optimizer(model.parameters(), config.adam);
  ad::PlateauScheduler scheduler(config.adam.lr, config.plateau);
  ad::NamedTensors best = ad::snapshot(model.parameters());
  double best_val = batch_mse(model, examples, split.val, 64);
  check_finite(best_val, "validation MSE");
  report.best_epoch = 0;

  const size_t bs = static_cast<size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<size_t> order = split.train;
    Rng shuffle_rng(derive_seed(config.seed, 0x51, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(derive_seed(config.seed, 0x52, static_cast<uint64_t>(epoch)));
    double loss_sum = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += bs) {
      const size_t end = std::min(order.size(), begin + bs);
      std::vector<const PairExample*> part;
      for (size_t k = begin; k < end; ++k) part.push_back(&examples[order[k]]);
      PairBatch batch = batch_examples(part);
      const int64_t n = static_cast<int64_t>(part.size());
      optimizer.zero_grad();
      Tape<float> tape;
      Var<float> pred = model.forward(tape, batch.donors, batch.acceptors, &dropout_rng, true);
      Var<float> loss = ad::mse_loss(pred, Tensor<float>({n, 1}, std::move(batch.targets)));
      const double value = loss.value().item();
      check_finite(value, "training loss");
      loss_sum += value * static_cast<double>(n);
      tape.backward(loss);
      optimizer.step();
    }
    optimizer.zero_grad();
    data::EpochMetrics m;
    m.epoch = epoch;
    m.train_mse = loss_sum / static_cast<double>(order.size());
    m.val_mse = batch_mse(model, examples, split.val, 64);
    check_finite(m.val_mse, "validation MSE");
    if (m.val_mse < best_val) {
      best_val = m.val_mse;
      best = ad::snapshot(model.parameters());
      report.best_epoch = epoch;
    }
    optimizer.set_lr(scheduler.update(m.val_mse));
    m.lr = optimizer.lr();
    report.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }

  ad::assign_tensors(best, model.parameters());
  report.train_mse = batch_mse(model, examples, split.train, 64);
  report.val_mse = batch_mse(model, examples, split.val, 64);
  report.test_mse = split.test.empty() ? 0.0 : batch_mse(model, examples, split.test, 64);
  return result;
}

void save_predictor(const std::string& dir, PairPredictor<float>& model) {
  fs::create_directories(dir);
  ad::save_checkpoint((fs::path(dir) / kPredictorWeightsFile).string(), model.parameters());
  std::ofstream out(fs::path(dir) / kPredictorConfigFile);
  if (!out) throw DataError("cannot write predictor config in " + dir);
  out << nlohmann::json(model.config()).dump(2) << '\n';
}

PredictorConfig read_predictor_config(const std::string& dir) {
  const fs::path path = fs::path(dir) / kPredictorConfigFile;
  std::ifstream in(path);
  if (!in) throw DataError("MissingFile: " + path.string());
  try {
    return nlohmann::json::parse(in).get<PredictorConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed predictor config " + path.string() + ": " + e.what());
  }
}

void load_predictor(const std::string& dir, PairPredictor<float>& model) {
  ad::load_checkpoint((fs::path(dir) / kPredictorWeightsFile).string(), model.parameters());
}

}  // namespace opv::predictor
