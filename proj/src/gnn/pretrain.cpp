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

#include "opvforge/gnn/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "opvforge/ad/checkpoint.hpp"
#include "opvforge/ad/ops.hpp"
#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/gnn/config_json.hpp"

namespace opv::gnn {

namespace fs = std::filesystem;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

namespace {

enum Stream : uint64_t { kInit = 1, kShuffle, kDropout, kTrainMask, kEvalMask };

json read_state(const std::string& dir) {
  const fs::path path = fs::path(dir) / kPretrainStateFile;
  std::ifstream in(path);
  if (!in) throw DataError("MissingFile: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed pretraining state " + path.string() + ": " + e.what());
  }
}

std::vector<int> element_labels(const chem::MolecularGraph& graph) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(graph.atom_count()));
  for (const chem::Atom& a : graph.atoms()) out.push_back(chem::element_index(a.element));
  return out;
}

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string("non-finite ") + what + " loss");
}

}  // namespace

void PretrainConfig::check() const {
  encoder.check();
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(adam.lr > 0.0)) throw UsageError("learning rate must be positive");
}

EncoderPretrainer::EncoderPretrainer(const PretrainConfig& config, std::vector<data::MoleculeEntry> corpus)
    : config_(config),
      encoder_(config.encoder, kEncoderPrefix, derive_seed(config.seed, kInit)),
      recon_("reconstruction_head", config.encoder.hidden),
      homo_lumo_("homo_lumo_head", config.encoder.hidden),
      optimizer_(parameters(), config.adam),
      scheduler_(config.adam.lr, config.plateau) {
  config_.check();
  if (corpus.empty()) throw DataError("pretraining corpus is empty");
  Rng head_rng(derive_seed(config.seed, kInit, 1));
  recon_.init(head_rng);
  homo_lumo_.init(head_rng);

  items_.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const data::MoleculeEntry& e = corpus[i];
    chem::MolecularGraph graph;
    try {
      graph = chem::parse(e.smiles);
    } catch (const DataError& err) {
      throw DataError("corpus entry " + std::to_string(i + 1) + ": " + err.what());
    }
    const chem::ValidityReport report = chem::validate(graph);
    if (!report.valid) throw DataError("corpus entry " + std::to_string(i + 1) + ": invalid molecule " + e.smiles);
    Item item;
    item.features = featurize(graph);
    item.elements = element_labels(graph);
    if (e.homo && e.lumo) {
      item.labeled = true;
      item.homo = static_cast<float>(*e.homo);
      item.lumo = static_cast<float>(*e.lumo);
    }
    items_.push_back(std::move(item));
  }
  eval_masks_.reserve(items_.size());
  for (size_t i = 0; i < items_.size(); ++i) {
    eval_masks_.push_back(mask_atoms(items_[i].features, config_.encoder.mask_ratio, derive_seed(config_.seed, kEvalMask, i)));
  }
}

ad::ParameterRefs<float> EncoderPretrainer::parameters() {
  ad::ParameterRefs<float> refs = encoder_.parameters();
  recon_.collect(refs);
  homo_lumo_.collect(refs);
  return refs;
}

EpochLosses EncoderPretrainer::evaluate() {
  EpochLosses out;
  out.epoch = epoch_;
  out.lr = scheduler_.lr();
  double recon_sum = 0.0;
  int64_t masked = 0, correct = 0;
  double hl_sum = 0.0;
  int64_t hl_count = 0;
  const size_t bs = static_cast<size_t>(config_.batch_size);
  for (size_t begin = 0; begin < items_.size(); begin += bs) {
    const size_t end = std::min(items_.size(), begin + bs);
    std::vector<const GraphFeatures*> masked_parts, clean_parts;
    std::vector<int> rows, labels;
    std::vector<float> targets;
    std::vector<int> labeled_graphs;
    for (size_t i = begin; i < end; ++i) masked_parts.push_back(&eval_masks_[i].features);
    GraphBatch masked_batch = batch_graphs(masked_parts);
    for (size_t i = begin; i < end; ++i) {
      const int offset = masked_batch.offsets[i - begin];
      for (size_t k = 0; k < eval_masks_[i].indices.size(); ++k) {
        rows.push_back(offset + eval_masks_[i].indices[k]);
        labels.push_back(eval_masks_[i].labels[k]);
      }
      clean_parts.push_back(&items_[i].features);
      if (items_[i].labeled) {
        labeled_graphs.push_back(static_cast<int>(i - begin));
        targets.push_back(items_[i].homo);
        targets.push_back(items_[i].lumo);
      }
    }
    {
      Tape<float> tape(false);
      Var<float> node = encoder_.encode_nodes(tape, masked_batch, nullptr, false);
      Var<float> logits = recon_.logits(tape, node, rows);
      Var<float> picked = ad::pick_log_softmax(logits, labels);
      for (int64_t r = 0; r < picked.value().size(); ++r) recon_sum -= picked.value()[r];
      const Tensor<float>& lv = logits.value();
      const int64_t classes = lv.dim(1);
      for (int64_t r = 0; r < lv.dim(0); ++r) {
        int64_t best = 0;
        for (int64_t c = 1; c < classes; ++c) {
          if (lv(r, c) > lv(r, best)) best = c;
        }
        if (best == labels[static_cast<size_t>(r)]) ++correct;
      }
      masked += lv.dim(0);
    }
    if (!labeled_graphs.empty()) {
      Tape<float> tape(false);
      GraphBatch clean = batch_graphs(clean_parts);
      EncoderOutput<float> enc = encoder_.encode(tape, clean, nullptr, false);
      Var<float> pred = homo_lumo_.forward(tape, ad::index_rows(enc.graph, labeled_graphs));
      for (int64_t k = 0; k < pred.value().size(); ++k) {
        const double d = static_cast<double>(pred.value()[k]) - targets[static_cast<size_t>(k)];
        hl_sum += d * d;
      }
      hl_count += pred.value().size();
    }
  }
  out.reconstruction = recon_sum / static_cast<double>(masked);
  out.mask_accuracy = static_cast<double>(correct) / static_cast<double>(masked);
  out.homo_lumo = hl_count == 0 ? 0.0 : hl_sum / static_cast<double>(hl_count);
  check_finite(out.reconstruction, "reconstruction");
  check_finite(out.homo_lumo, "HOMO/LUMO");
  return out;
}

void EncoderPretrainer::ensure_initial_evaluation() {
  if (history_.empty()) history_.push_back(evaluate());
}

EpochLosses EncoderPretrainer::train_epoch() {
  ensure_initial_evaluation();
  const uint64_t epoch_seed = static_cast<uint64_t>(epoch_);
  std::vector<size_t> order(items_.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng shuffle_rng(derive_seed(config_.seed, kShuffle, epoch_seed));
  shuffle_rng.shuffle(order);
  Rng dropout_rng(derive_seed(config_.seed, kDropout, epoch_seed));
  const uint64_t mask_seed = derive_seed(config_.seed, kTrainMask, epoch_seed);

  const size_t bs = static_cast<size_t>(config_.batch_size);
  for (size_t begin = 0; begin < order.size(); begin += bs) {
    const size_t end = std::min(order.size(), begin + bs);
    std::vector<MaskedAtoms> masks;
    masks.reserve(end - begin);
    for (size_t k = begin; k < end; ++k) {
      masks.push_back(mask_atoms(items_[order[k]].features, config_.encoder.mask_ratio, derive_seed(mask_seed, order[k])));
    }
    std::vector<const GraphFeatures*> masked_parts;
    for (const MaskedAtoms& m : masks) masked_parts.push_back(&m.features);
    GraphBatch masked_batch = batch_graphs(masked_parts);
    std::vector<int> rows, labels;
    for (size_t k = 0; k < masks.size(); ++k) {
      for (size_t j = 0; j < masks[k].indices.size(); ++j) {
        rows.push_back(masked_batch.offsets[k] + masks[k].indices[j]);
        labels.push_back(masks[k].labels[j]);
      }
    }

    // Reconstruction update.
    {
      optimizer_.zero_grad();
      Tape<float> tape;
      Var<float> node = encoder_.encode_nodes(tape, masked_batch, &dropout_rng, true);
      Var<float> loss = ad::cross_entropy(recon_.logits(tape, node, rows), labels);
      check_finite(loss.value().item(), "reconstruction");
      tape.backward(loss);
      optimizer_.step();
    }

    // HOMO/LUMO update on the labeled part of the same batch.
    std::vector<const GraphFeatures*> clean_parts;
    std::vector<float> targets;
    for (size_t k = begin; k < end; ++k) {
      const Item& item = items_[order[k]];
      if (!item.labeled) continue;
      clean_parts.push_back(&item.features);
      targets.push_back(item.homo);
      targets.push_back(item.lumo);
    }
    if (!clean_parts.empty()) {
      optimizer_.zero_grad();
      Tape<float> tape;
      GraphBatch clean = batch_graphs(clean_parts);
      EncoderOutput<float> enc = encoder_.encode(tape, clean, &dropout_rng, true);
      Var<float> pred = homo_lumo_.forward(tape, enc.graph);
      const int64_t n = static_cast<int64_t>(clean_parts.size());
      Var<float> loss = ad::mse_loss(pred, Tensor<float>({n, 2}, std::move(targets)));
      check_finite(loss.value().item(), "HOMO/LUMO");
      tape.backward(loss);
      optimizer_.step();
    }
  }
  optimizer_.zero_grad();

  ++epoch_;
  EpochLosses losses = evaluate();
  optimizer_.set_lr(scheduler_.update(losses.reconstruction + losses.homo_lumo));
  losses.lr = optimizer_.lr();
  history_.push_back(losses);
  return losses;
}

void EncoderPretrainer::run(const std::function<void(const EpochLosses&)>& on_epoch) {
  ensure_initial_evaluation();
  if (on_epoch && epoch_ == 0) on_epoch(history_.front());
  while (epoch_ < config_.epochs) {
    const EpochLosses losses = train_epoch();
    if (on_epoch) on_epoch(losses);
  }
}

MaskEvaluation EncoderPretrainer::evaluate_masks(const std::vector<data::MoleculeEntry>& molecules, uint64_t mask_seed) {
  MaskEvaluation out;
  std::map<int, int64_t> label_counts;
  double loss_sum = 0.0;
  for (size_t i = 0; i < molecules.size(); ++i) {
    const chem::MolecularGraph graph = chem::parse(molecules[i].smiles);
    const MaskedAtoms m = mask_atoms(featurize(graph), config_.encoder.mask_ratio, derive_seed(mask_seed, i));
    Tape<float> tape(false);
    GraphBatch batch = batch_graphs({&m.features});
    Var<float> logits = recon_.logits(tape, encoder_.encode_nodes(tape, batch, nullptr, false), m.indices);
    Var<float> picked = ad::pick_log_softmax(logits, m.labels);
    const Tensor<float>& lv = logits.value();
    for (int64_t r = 0; r < lv.dim(0); ++r) {
      int64_t best = 0;
      for (int64_t c = 1; c < lv.dim(1); ++c) {
        if (lv(r, c) > lv(r, best)) best = c;
      }
      const int label = m.labels[static_cast<size_t>(r)];
      if (best == label) ++out.correct;
      ++label_counts[label];
      loss_sum -= picked.value()[r];
    }
    out.masked += lv.dim(0);
  }
  if (out.masked > 0) {
    int64_t top = 0;
    for (const auto& [label, count] : label_counts) top = std::max(top, count);
    out.majority_accuracy = static_cast<double>(top) / static_cast<double>(out.masked);
    out.loss = loss_sum / static_cast<double>(out.masked);
  }
  return out;
}

void EncoderPretrainer::save(const std::string& dir) const {
  fs::create_directories(dir);
  auto* self = const_cast<EncoderPretrainer*>(this);
  ad::save_checkpoint((fs::path(dir) / kPretrainWeightsFile).string(), self->parameters());
  ad::save_tensors((fs::path(dir) / kPretrainOptimizerFile).string(), ad::optimizer_tensors(optimizer_));

  json history = json::array();
  for (const EpochLosses& e : history_) {
    history.push_back({{"epoch", e.epoch},
                       {"reconstruction", e.reconstruction},
                       {"homo_lumo", e.homo_lumo},
                       {"mask_accuracy", e.mask_accuracy},
                       {"lr", e.lr}});
  }
  const double best = scheduler_.best();
  json state = {{"encoder", json(config_.encoder)},
                {"seed", config_.seed},
                {"epoch", epoch_},
                {"optimizer_step", optimizer_.state().step},
                {"lr", optimizer_.lr()},
                {"scheduler",
                 {{"lr", scheduler_.lr()},
                  {"best", std::isfinite(best) ? json(best) : json(nullptr)},
                  {"epochs_since_improvement", scheduler_.epochs_since_improvement()},
                  {"history", scheduler_.history()}}},
                {"history", history}};
  std::ofstream out(fs::path(dir) / kPretrainStateFile);
  if (!out) throw DataError("cannot write " + (fs::path(dir) / kPretrainStateFile).string());
  out << state.dump(2) << '\n';
}

void EncoderPretrainer::load(const std::string& dir) {
  const json state = read_state(dir);
  try {
    const EncoderConfig stored = state.at("encoder").get<EncoderConfig>();
    if (stored.layers != config_.encoder.layers || stored.hidden != config_.encoder.hidden ||
        stored.heads != config_.encoder.heads) {
      throw DataError("checkpoint encoder shape does not match the configuration");
    }
    ad::load_checkpoint((fs::path(dir) / kPretrainWeightsFile).string(), parameters());
    ad::restore_optimizer(optimizer_, ad::load_tensors((fs::path(dir) / kPretrainOptimizerFile).string()),
                          state.at("optimizer_step").get<int64_t>(), state.at("lr").get<double>());
    const json& s = state.at("scheduler");
    const double best = s.at("best").is_null() ? std::numeric_limits<double>::infinity() : s.at("best").get<double>();
    scheduler_.restore(s.at("lr").get<double>(), best, s.at("epochs_since_improvement").get<int>(),
                       s.at("history").get<std::vector<double>>());
    epoch_ = state.at("epoch").get<int>();
    history_.clear();
    for (const json& e : state.at("history")) {
      history_.push_back({e.at("epoch").get<int>(), e.at("reconstruction").get<double>(), e.at("homo_lumo").get<double>(),
                          e.at("mask_accuracy").get<double>(), e.at("lr").get<double>()});
    }
  } catch (const json::exception& e) {
    throw DataError("malformed pretraining state in " + dir + ": " + e.what());
  }
}

EncoderConfig read_encoder_config(const std::string& dir) {
  try {
    return read_state(dir).at("encoder").get<EncoderConfig>();
  } catch (const json::exception& e) {
    throw DataError("malformed pretraining state in " + dir + ": " + e.what());
  }
}

void load_pretrained_encoder(const std::string& dir, GraphEncoder<float>& encoder, const std::string& prefix) {
  ad::NamedTensors stored = ad::load_tensors((fs::path(dir) / kPretrainWeightsFile).string());
  const std::string from = std::string(kEncoderPrefix) + ".";
  ad::NamedTensors renamed;
  for (auto& [name, tensor] : stored) {
    if (name.rfind(from, 0) == 0) renamed.emplace_back(prefix + "." + name.substr(from.size()), std::move(tensor));
  }
  ad::assign_tensors(renamed, encoder.parameters(), true);
}

}  // namespace opv::gnn
