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

// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <fmt/format.h>

#include "../support/smoke_pipeline.hpp"
#include "opvforge/ad/checkpoint.hpp"
#include "opvforge/ad/grad_check.hpp"
#include "opvforge/ad/init.hpp"
#include "opvforge/ad/nn.hpp"
#include "opvforge/ad/ops.hpp"
#include "opvforge/ad/optim.hpp"
#include "opvforge/baseline/forest.hpp"
#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/chem/wl_hash.hpp"
#include "opvforge/common/random.hpp"
#include "opvforge/data/corpus.hpp"
#include "opvforge/data/metrics.hpp"
#include "opvforge/data/synth.hpp"
#include "opvforge/frag/fragments.hpp"
#include "opvforge/gen/pretrain.hpp"
#include "opvforge/gnn/encoder.hpp"
#include "opvforge/gnn/features.hpp"
#include "opvforge/gnn/pretrain.hpp"
#include "opvforge/predictor/predictor.hpp"
#include "opvforge/rl/campaign.hpp"

namespace opv::acceptance {
namespace {

namespace fs = std::filesystem;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using TapeD = Tape<double>;
using VarD = Var<double>;

// Pair corpus of the predictor task: no noise, 5 points per acceptor halogen.
const data::SyntheticPce kTaskPce{5.0, 10.0, 5.0, 0.0, 20.0};
// Halogen-free acceptor prompt, so predicted PCE varies only with the donor.
constexpr const char* kTargetAcceptor = "c1cnc2ccccc2n1";

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

void progress(const std::string& line) { std::cerr << "  .. " << line << std::endl; }

// Models shared between criteria, built on first use.
class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }
  const fs::path& root() const { return root_; }

  struct PredictorRun {
    std::unique_ptr<predictor::PairPredictor<float>> model;
    std::vector<data::PairRecord> records;
    predictor::TrainResult result;
    double seconds = 0.0;
  };

  PredictorRun& task_predictor() {
    if (predictor_) return *predictor_;
    predictor_.emplace();
    Stopwatch clock;
    predictor_->records = data::synth_pairs(11, 500, kTaskPce);
    predictor::TrainConfig config;
    config.split_seed = 3;
    config.seed = 4;
    predictor_->model = std::make_unique<predictor::PairPredictor<float>>(config.model, config.seed);
    predictor_->result = predictor::train_predictor(*predictor_->model, predictor_->records, config,
                                                    [](const data::EpochMetrics& e) {
                                                      if (e.epoch % 10 == 0) {
                                                        progress(fmt::format("predictor epoch {} val {:.4f}", e.epoch,
                                                                             e.val_mse));
                                                      }
                                                    });
    predictor_->seconds = clock.seconds();
    return *predictor_;
  }

  struct GeneratorRun {
    std::unique_ptr<gen::Generator<float>> model;
    std::vector<data::PairSequenceEntry> entries;
    std::vector<gen::EpochPerplexity> history;
    size_t dropped = 0;  // entries longer than the model's context
    double seconds = 0.0;
  };

  GeneratorRun& corpus_generator() {
    if (generator_) return *generator_;
    generator_.emplace();
    Stopwatch clock;
    gen::PretrainConfig config;
    config.model.width = 128;
    config.model.layers = 4;
    config.model.heads = 4;
    config.model.max_length = 128;
    config.epochs = 10;
    config.batch_size = 32;
    config.adam.lr = 1e-3;
    config.seed = 5;
    const auto all = data::pair_sequences_from_records(data::synth_pairs(21, 1000));
    std::vector<std::string> smiles;
    for (const auto& e : all) {
      smiles.push_back(e.prompt);
      smiles.push_back(e.completion);
    }
    smiles.push_back(kTargetAcceptor);
    const chem::Vocabulary vocab = gen::generator_vocabulary(smiles);
    for (const auto& e : all) {
      if (gen::encode_pair(vocab, e).ids.size() <= static_cast<size_t>(config.model.max_length)) {
        generator_->entries.push_back(e);
      } else {
        ++generator_->dropped;
      }
    }
    const auto sequences = gen::encode_corpus(vocab, generator_->entries, config.model.max_length);
    generator_->model = std::make_unique<gen::Generator<float>>(config.model, vocab, config.seed);
    generator_->history =
        gen::pretrain_generator(*generator_->model, sequences, config, [](const gen::EpochPerplexity& e) {
          progress(fmt::format("generator epoch {} perplexity {:.4f}", e.epoch, e.perplexity));
        });
    generator_->seconds = clock.seconds();
    return *generator_;
  }

 private:
  fs::path root_;
  std::optional<PredictorRun> predictor_;
  std::optional<GeneratorRun> generator_;
};

// ---------------------------------------------------------------------------
// AC1

Outcome parser_suite(Workspace&) {
  Stopwatch clock;
  const std::vector<std::string> corpus = data::synth_molecules(101, 1000);
  int round_trips = 0;
  for (const std::string& s : corpus) round_trips += chem::detokenize(chem::tokenize(s)) == s;

  const std::vector<std::pair<std::string, bool>> cases = {
      {"CC", true},
      {"CCO", true},
      {"c1ccccc1", true},
      {"c1ccc2ccccc2c1", true},
      {"c1ccsc1", true},
      {"Cn1cccc1", true},
      {"c1ccc2sc3ccccc3c2c1", true},
      {"FC(F)(F)c1ccccc1", true},
      {"C[N+](C)(C)C", true},
      {"CC(=O)[O-]", true},
      {"O=S(=O)(O)O", true},
      {"N#Cc1ccc(C#N)cc1", true},
      {"Clc1ccc(Br)cc1I", true},
      {"C[Si](C)(C)C", true},
      {"c1cc[se]c1", true},
      {"C1CC2CCC1C2", true},
      {"C(C)(C)(C)(C)C", false},  // pentavalent carbon
      {"C1CC", false},            // unmatched ring digit
      {"CC1CCC", false},
      {"cc", false},              // aromatic outside a ring
      {"c1ccccc1c", false},
      {"C(C", false},
      {"CC)C", false},
      {"O=O=O", false},
      {"FF(F)", false},
      {"N(C)(C)(C)C", false},
      {"C#C=C", false},
      {"CC.CC", false},
      {"C[Xx]", false},
      {"", false},
  };
  int correct = 0;
  std::string wrong;
  for (const auto& [smiles, expected] : cases) {
    if (chem::is_valid_smiles(smiles) == expected) {
      ++correct;
    } else {
      wrong += " \"" + smiles + "\"";
    }
  }
  const double secs = clock.seconds();
  Outcome o;
  o.pass = round_trips == 1000 && correct == static_cast<int>(cases.size()) && secs < 5.0;
  o.detail = fmt::format("round trips {}/1000, hand-built {}/{}{}, {:.2f} s (limit 5 s)", round_trips, correct,
                         cases.size(), wrong.empty() ? "" : ", misclassified:" + wrong, secs);
  return o;
}

// ---------------------------------------------------------------------------
// AC2

Tensor<double> random_tensor(ad::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.vec()) v = rng.normal(0.0, scale);
  return t;
}

// Fixed random weights make every output coordinate contribute its own
// gradient.
VarD weighted_sum(TapeD& tape, VarD y, uint64_t seed = 99) {
  Rng rng(seed);
  Tensor<double> w(y.shape());
  for (double& v : w.vec()) v = rng.uniform(0.5, 1.5) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  return ad::sum(ad::mul(y, tape.constant(w)));
}

Outcome gradient_checks(Workspace&) {
  Stopwatch clock;
  Rng rng(31);
  const Tensor<double> x0 = random_tensor({3, 4}, rng);
  const Tensor<double> other = random_tensor({3, 4}, rng);
  Tensor<double> positive = random_tensor({3, 4}, rng);
  for (double& v : positive.vec()) v = std::abs(v) + 0.5;
  const Tensor<double> w = random_tensor({4, 5}, rng);
  const Tensor<double> b = random_tensor({5}, rng);
  const Tensor<double> target = random_tensor({3, 4}, rng);
  const Tensor<double> gain = random_tensor({4}, rng);
  const Tensor<double> head_vec = random_tensor({4}, rng);
  const Tensor<double> alpha = random_tensor({3, 2}, rng);
  const Tensor<double> cube = random_tensor({2, 3, 4}, rng);
  const Tensor<double> q0 = random_tensor({2, 4, 6}, rng);
  const Tensor<double> k0 = random_tensor({2, 4, 6}, rng);
  const Tensor<double> v0 = random_tensor({2, 4, 6}, rng);
  ad::AttentionOptions<double> causal;
  causal.causal = true;
  causal.key_lengths = {4, 3};

  using Fn = std::function<VarD(TapeD&, VarD)>;
  std::vector<std::tuple<std::string, Fn, Tensor<double>>> cases = {
      {"matmul_a", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::matmul(x, t.constant(w))); }, x0},
      {"matmul_b", [&](TapeD& t, VarD v) { return weighted_sum(t, ad::matmul(t.constant(x0), v)); }, w},
      {"linear_x", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::linear(x, t.constant(w), t.constant(b))); }, x0},
      {"linear_w", [&](TapeD& t, VarD v) { return weighted_sum(t, ad::linear(t.constant(x0), v, t.constant(b))); }, w},
      {"linear_b", [&](TapeD& t, VarD v) { return weighted_sum(t, ad::linear(t.constant(x0), t.constant(w), v)); }, b},
      {"add", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::add(x, t.constant(other))); }, x0},
      {"sub", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::sub(t.constant(other), x)); }, x0},
      {"mul", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::mul(x, t.constant(other))); }, x0},
      {"add_bias", [&](TapeD& t, VarD v) { return weighted_sum(t, ad::add_bias(t.constant(x0), v)); }, gain},
      {"scale", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::scale(x, -2.5)); }, x0},
      {"relu", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::relu(x)); }, x0},
      {"elu", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::elu(x)); }, x0},
      {"gelu", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::gelu(x)); }, x0},
      {"tanh", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::tanh(x)); }, x0},
      {"sigmoid", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::sigmoid(x)); }, x0},
      {"leaky_relu", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::leaky_relu(x, 0.2)); }, x0},
      {"exp", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::exp(x)); }, x0},
      {"log", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::log(x)); }, positive},
      {"square", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::square(x)); }, x0},
      {"softmax_last", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::softmax(x)); }, cube},
      {"softmax_axis0", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::softmax(x, 0)); }, cube},
      {"softmax_axis1", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::softmax(x, 1)); }, cube},
      {"log_softmax", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::log_softmax(x)); }, x0},
      {"layer_norm_x",
       [&](TapeD& t, VarD x) { return weighted_sum(t, ad::layer_norm(x, t.constant(gain), t.constant(head_vec))); },
       x0},
      {"layer_norm_gain",
       [&](TapeD& t, VarD g) { return weighted_sum(t, ad::layer_norm(t.constant(x0), g, t.constant(head_vec))); },
       gain},
      {"layer_norm_bias",
       [&](TapeD& t, VarD v) { return weighted_sum(t, ad::layer_norm(t.constant(x0), t.constant(gain), v)); },
       head_vec},
      {"pick_log_softmax", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::pick_log_softmax(x, {1, 3, -1})); }, x0},
      {"cross_entropy", [&](TapeD&, VarD x) { return ad::cross_entropy(x, {2, -1, 0}); }, x0},
      {"sum", [&](TapeD&, VarD x) { return ad::sum(ad::square(x)); }, x0},
      {"mean", [&](TapeD&, VarD x) { return ad::mean(ad::square(x)); }, x0},
      {"mse_loss", [&](TapeD&, VarD x) { return ad::mse_loss(x, target); }, x0},
      {"dropout",
       [&](TapeD& t, VarD x) {
         Rng mask_rng(17);  // same mask on every evaluation
         return weighted_sum(t, ad::dropout(x, 0.3, &mask_rng, true));
       },
       x0},
      {"embedding", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::embedding(x, {2, 0, 2, 1})); }, x0},
      {"concat", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::concat<double>({x, t.constant(other), x})); }, x0},
      {"slice_last", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::slice_last(x, 1, 3)); }, x0},
      {"reshape", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::square(ad::reshape(x, {2, 6}))); }, x0},
      {"index_rows", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::index_rows(x, {2, -1, 0, 2})); }, x0},
      {"scatter_add_rows",
       [&](TapeD& t, VarD x) { return weighted_sum(t, ad::scatter_add_rows(x, {1, 1, -1}, 2)); }, x0},
      {"segment_softmax",
       [&](TapeD& t, VarD x) { return weighted_sum(t, ad::segment_softmax(x, {0, 1, 0}, 2)); }, x0},
      {"segment_mean", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::segment_mean(x, {1, 0, 1}, 2)); }, x0},
      {"head_dot", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::head_dot(x, t.constant(head_vec), 2)); }, x0},
      {"head_dot_a", [&](TapeD& t, VarD a) { return weighted_sum(t, ad::head_dot(t.constant(x0), a, 2)); }, head_vec},
      {"head_scale", [&](TapeD& t, VarD x) { return weighted_sum(t, ad::head_scale(t.constant(alpha), x)); }, x0},
      {"head_scale_alpha",
       [&](TapeD& t, VarD a) { return weighted_sum(t, ad::head_scale(a, t.constant(x0))); }, alpha},
      {"attention_q",
       [&](TapeD& t, VarD q) {
         return weighted_sum(t, ad::attention(q, t.constant(k0), t.constant(v0), 2, causal));
       },
       q0},
      {"attention_k",
       [&](TapeD& t, VarD k) {
         return weighted_sum(t, ad::attention(t.constant(q0), k, t.constant(v0), 2, causal));
       },
       k0},
      {"attention_v",
       [&](TapeD& t, VarD v) {
         return weighted_sum(t, ad::attention(t.constant(q0), t.constant(k0), v, 2, causal));
       },
       v0},
  };

  double worst = 0.0;
  std::string worst_name;
  const auto record = [&](const std::string& name, double err) {
    if (!(err <= worst)) {
      worst = std::isfinite(err) ? err : INFINITY;
      worst_name = name;
    }
  };
  for (const auto& [name, f, at] : cases) record(name, ad::grad_check(f, at));

  // GATv2 layer: parameters and node features.
  {
    const gnn::GraphFeatures f = gnn::featurize(chem::parse("CC(=O)Nc1ccsc1"));
    const gnn::GraphBatch batch = gnn::batch_graphs({&f});
    gnn::GatLayer<double> layer("gat", gnn::kFeatureWidth, 8);
    Rng init(7);
    layer.init(init);
    ad::normal_init(layer.bias, init, 0.1);
    ad::ParameterRefs<double> params;
    layer.collect(params);
    const Tensor<double> weights = random_tensor({batch.nodes(), 8}, init);
    const Tensor<double> x = batch.x.cast<double>();
    record("gatv2_params", ad::grad_check_params(
                               [&](TapeD& tape) {
                                 return ad::sum(ad::mul(
                                     ad::elu(layer.forward(tape, tape.constant(x), batch.src, batch.dst, 2, 0.2)),
                                     tape.constant(weights)));
                               },
                               params));
    record("gatv2_input", ad::grad_check(
                              [&](TapeD& tape, VarD h) {
                                return ad::sum(ad::mul(layer.forward(tape, h, batch.src, batch.dst, 2, 0.2),
                                                       tape.constant(weights)));
                              },
                              x));
  }

  // Cross-attention block with a padded key set.
  {
    ad::MultiHeadAttention<double> mha("mha", 8, 2);
    Rng init(5);
    mha.init(init);
    for (ad::Parameter<double>* p : {&mha.query.bias, &mha.key.bias, &mha.value.bias, &mha.output.bias}) {
      for (double& v : p->value.vec()) v = init.normal(0.0, 0.1);
    }
    const Tensor<double> q = random_tensor({2, 3, 8}, init);
    const Tensor<double> kv = random_tensor({2, 4, 8}, init);
    const Tensor<double> wt = random_tensor({2, 3, 8}, init);
    ad::AttentionOptions<double> opts;
    opts.key_lengths = {4, 2};
    ad::ParameterRefs<double> params;
    mha.collect(params);
    record("cross_attention_params",
           ad::grad_check_params(
               [&](TapeD& tape) {
                 return ad::sum(ad::mul(mha(tape, tape.constant(q), tape.constant(kv), opts), tape.constant(wt)));
               },
               params));
    record("cross_attention_keys", ad::grad_check(
                                       [&](TapeD& tape, VarD x) {
                                         return ad::sum(ad::mul(mha(tape, tape.constant(q), x, opts),
                                                                tape.constant(wt)));
                                       },
                                       kv));
  }

  // Transformer block, every parameter, inside a one-layer generator.
  {
    const chem::Vocabulary vocab = gen::generator_vocabulary({"c1ccsc1CCO", "FC(Cl)=N", "c1ccc2nsnc2c1Br"});
    gen::GeneratorConfig config;
    config.layers = 1;
    config.width = 16;
    config.heads = 4;
    config.max_length = 48;
    config.dropout = 0.0;
    gen::Generator<double> g(config, vocab, 5);
    Rng init(6);
    for (ad::Parameter<double>* p : g.parameters()) {
      for (double& v : p->value.vec()) v += init.normal(0.0, 0.3);
    }
    const std::vector<std::vector<int>> batch = {
        gen::encode_pair(vocab, data::Role::Acceptor, "c1ccsc1", "FC(Cl)=N").ids,
        gen::encode_pair(vocab, data::Role::Donor, "CCO", "c1ccsc1Br").ids};
    ad::ParameterRefs<double> block;
    g.blocks()[0].collect(block);
    record("transformer_block",
           ad::grad_check_params([&](TapeD& tape) { return g.lm_loss(tape, batch, nullptr, false); }, block));
  }

  const double secs = clock.seconds();
  Outcome o;
  o.pass = worst < 1e-4 && secs < 120.0;
  o.detail = fmt::format("{} primitive checks + GATv2, cross-attention and transformer blocks, max rel error {:.2e} "
                         "({}), {:.1f} s (limit 120 s)",
                         cases.size(), worst, worst_name, secs);
  return o;
}

// ---------------------------------------------------------------------------
// AC3

Outcome rl_loss_examples(Workspace&) {
  const double zero = rl::rl_loss(-7.5, -7.5, 0.0, 100.0);
  const double fixed_point = rl::rl_loss(-10.0, -10.0 + 100.0 * 0.2, 0.2, 100.0);
  const double worked = rl::rl_loss(-10.0, -12.0, 0.2, 100.0);
  rl::RlConfig config;
  config.total_steps = 300;
  config.sigma0 = 100.0;
  const double start = rl::sigma_schedule(0, config);
  const double end = rl::sigma_schedule(config.total_steps, config);
  Outcome o;
  o.pass = std::abs(zero) <= 1e-9 && std::abs(fixed_point) <= 1e-9 && std::abs(worked - 484.0) <= 1e-9 &&
           start == 100.0 && end == 0.0;
  o.detail = fmt::format("losses {:.3g}, {:.3g}, {:.12g}; sigma {} -> {}", zero, fixed_point, worked, start, end);
  return o;
}

// ---------------------------------------------------------------------------
// AC4

Outcome encoder_pretraining(Workspace&) {
  Stopwatch clock;
  const std::vector<data::MoleculeEntry> train = data::synth_molecule_corpus(41, 200);
  std::set<std::string> seen;
  for (const auto& e : train) seen.insert(e.smiles);
  std::vector<data::MoleculeEntry> held_out;
  for (const auto& e : data::synth_molecule_corpus(42, 400)) {
    if (held_out.size() < 50 && !seen.count(e.smiles)) held_out.push_back(e);
  }

  gnn::PretrainConfig config;
  config.epochs = 30;
  config.seed = 43;
  gnn::EncoderPretrainer trainer(config, train);
  trainer.run([](const gnn::EpochLosses& e) {
    if (e.epoch % 10 == 0) progress(fmt::format("encoder epoch {} recon {:.4f} homo/lumo {:.4f}", e.epoch,
                                                e.reconstruction, e.homo_lumo));
  });
  const auto& history = trainer.history();
  double best_recon = history.front().reconstruction, best_hl = history.front().homo_lumo;
  for (const auto& e : history) {
    best_recon = std::min(best_recon, e.reconstruction);
    best_hl = std::min(best_hl, e.homo_lumo);
  }
  const double recon_drop = 1.0 - best_recon / history.front().reconstruction;
  const double hl_drop = 1.0 - best_hl / history.front().homo_lumo;

  constexpr uint64_t kMaskSeed = 44;
  const gnn::MaskEvaluation ev = trainer.evaluate_masks(held_out, kMaskSeed);
  // Majority-element baseline over the same masked atoms.
  std::map<int, int64_t> label_counts;
  int64_t masked = 0;
  for (size_t i = 0; i < held_out.size(); ++i) {
    const gnn::MaskedAtoms m = gnn::mask_atoms(gnn::featurize(chem::parse(held_out[i].smiles)), config.encoder.mask_ratio,
                                               derive_seed(kMaskSeed, i));
    for (int label : m.labels) ++label_counts[label];
    masked += static_cast<int64_t>(m.labels.size());
  }
  int64_t majority = 0;
  for (const auto& [label, count] : label_counts) majority = std::max(majority, count);
  const double majority_accuracy = masked == 0 ? 1.0 : static_cast<double>(majority) / static_cast<double>(masked);

  const double secs = clock.seconds();
  Outcome o;
  o.pass = recon_drop >= 0.5 && hl_drop >= 0.5 && ev.masked == masked && ev.accuracy() > majority_accuracy &&
           secs < 600.0;
  o.detail = fmt::format("reconstruction -{:.1f}%, HOMO/LUMO -{:.1f}% within 30 epochs; held-out masked accuracy "
                         "{:.3f} vs majority {:.3f} over {} atoms of {} molecules; {:.0f} s (limit 600 s)",
                         100 * recon_drop, 100 * hl_drop, ev.accuracy(), majority_accuracy, masked, held_out.size(),
                         secs);
  return o;
}

// ---------------------------------------------------------------------------
// AC5

double overfit_thirty_two_pairs() {
  const auto records = data::synth_pairs(2, 32, kTaskPce);
  const auto examples = predictor::make_examples(records);
  std::vector<const predictor::PairExample*> ptrs;
  std::vector<double> actual;
  double mean = 0.0;
  for (const auto& e : examples) {
    ptrs.push_back(&e);
    actual.push_back(e.pce);
    mean += e.pce / static_cast<double>(examples.size());
  }
  predictor::PredictorConfig config;
  config.encoder.hidden = 32;
  config.encoder.heads = 2;
  config.encoder.layers = 2;
  config.encoder.dropout = 0.0;
  config.attention_heads = 4;
  config.attention_dropout = 0.0;
  config.head_hidden = 32;
  config.head_dropout = 0.0;
  predictor::PairPredictor<float> model(config, 13);
  model.set_output_bias(static_cast<float>(mean));
  ad::AdamConfig adam;
  adam.lr = 3e-3;
  adam.weight_decay = 0.0;
  ad::AdamW opt(model.parameters(), adam);
  const predictor::PairBatch batch = predictor::batch_examples(ptrs);
  const Tensor<float> target({static_cast<int64_t>(ptrs.size()), 1}, batch.targets);
  double mse = INFINITY;
  for (int step = 0; step < 1500 && !(mse < 0.05); ++step) {
    opt.zero_grad();
    Tape<float> tape;
    tape.backward(ad::mse_loss(model.forward(tape, batch.donors, batch.acceptors, nullptr, false), target));
    opt.step();
    mse = data::mean_squared_error(predictor::predict(model, ptrs), actual);
  }
  return mse;
}

Outcome predictor_capacity(Workspace& ws) {
  Stopwatch clock;
  const double overfit_mse = overfit_thirty_two_pairs();
  Workspace::PredictorRun& run = ws.task_predictor();
  const baseline::BaselineResult forest = baseline::baseline_evaluate(run.records, 3);
  const bool same_split = forest.split.train == run.result.split.train && forest.split.val == run.result.split.val &&
                          forest.split.test == run.result.split.test;
  const double model_mse = run.result.report.test_mse;
  const double secs = clock.seconds();
  Outcome o;
  o.pass = overfit_mse < 0.05 && model_mse < 1.0 && same_split && model_mse < forest.report.test_mse && secs < 900.0;
  o.detail = fmt::format("32-pair train MSE {:.4f}; 500-pair test MSE {:.4f} vs forest {:.4f} on {} split ({} test "
                         "pairs); {:.0f} s (limit 900 s)",
                         overfit_mse, model_mse, forest.report.test_mse, same_split ? "the same" : "a DIFFERENT",
                         run.result.split.test.size(), secs);
  return o;
}

// ---------------------------------------------------------------------------
// AC6

double overfit_eight_sequences() {
  const std::vector<std::string> molecules = data::synth_molecules(1, 400);
  const chem::Vocabulary vocab = gen::generator_vocabulary(molecules);
  const auto entries = data::pair_sequences_from_records(data::synth_pairs(3, 4));
  const auto sequences = gen::encode_corpus(vocab, entries, 256);
  gen::PretrainConfig config;
  config.model.layers = 2;
  config.model.width = 32;
  config.model.heads = 4;
  config.model.max_length = 256;
  config.model.dropout = 0.0;
  config.epochs = 150;
  config.batch_size = 8;
  config.adam.lr = 3e-3;
  config.adam.weight_decay = 0.0;
  gen::Generator<float> g(config.model, vocab, 22);
  return gen::pretrain_generator(g, sequences, config).back().perplexity;
}

// Logits at positions <= k must not change, bit for bit, when any later
// token changes.
bool causal_suffix_test(gen::Generator<float>& g, const std::vector<int>& base) {
  const int64_t vs = g.vocab_size();
  Tape<float> t0(false);
  const Tensor<float> ref = g.forward(t0, {base}, nullptr, false).value();
  for (size_t k = 0; k + 1 < base.size(); ++k) {
    std::vector<int> changed = base;
    for (size_t t = k + 1; t < changed.size(); ++t) {
      changed[t] = (changed[t] + 3 + static_cast<int>(t)) % static_cast<int>(vs);
    }
    Tape<float> t1(false);
    const Tensor<float> out = g.forward(t1, {changed}, nullptr, false).value();
    for (int64_t i = 0; i < static_cast<int64_t>(k + 1) * vs; ++i) {
      if (out[i] != ref[i]) return false;
    }
  }
  return true;
}

Outcome generator_checks(Workspace& ws) {
  const double overfit_ppl = overfit_eight_sequences();
  Workspace::GeneratorRun& run = ws.corpus_generator();
  gen::Generator<float>& g = *run.model;
  const bool causal = causal_suffix_test(g, gen::encode_pair(g.vocabulary(), run.entries.front()).ids);

  constexpr int kSamples = 1000;
  std::vector<std::vector<int>> prompts;
  for (int i = 0; i < kSamples; ++i) {
    const auto& e = run.entries[static_cast<size_t>(i) % run.entries.size()];
    prompts.push_back(gen::encode_prompt(g.vocabulary(), e.role, e.prompt).ids);
  }
  Stopwatch sampling;
  const std::vector<gen::Sample> samples = gen::sample(g, prompts, gen::SampleOptions{128, 61});
  int valid = 0;
  for (const gen::Sample& s : samples) {
    valid += s.finished && chem::is_valid_smiles(gen::decode_completion(g.vocabulary(), s.ids));
  }
  Outcome o;
  o.pass = overfit_ppl < 1.1 && causal && valid >= 300;
  o.detail = fmt::format("8-sequence perplexity {:.4f}; causal suffix test {}; {}/{} sampled completions valid "
                         "({:.1f}%) after {} epochs on {} sequences, {} over the context dropped (final perplexity "
                         "{:.3f}, {:.0f} s; sampling {:.1f} s)",
                         overfit_ppl, causal ? "exact" : "FAILED", valid, kSamples, 100.0 * valid / kSamples,
                         run.history.size() - 1, run.entries.size(), run.dropped, run.history.back().perplexity, run.seconds,
                         sampling.seconds());
  return o;
}

// ---------------------------------------------------------------------------
// AC7 and AC8

rl::RlConfig campaign_config(uint64_t seed) {
  rl::RlConfig c;
  c.total_steps = 300;
  c.batch_size = 128;
  c.sigma0 = 100.0;
  c.replay_fraction = 0.05;
  c.memory_capacity = 1000;
  c.target_smiles = kTargetAcceptor;
  c.target_role = data::Role::Acceptor;
  c.max_new = 128;
  c.seed = seed;
  return c;
}

struct CampaignRun {
  std::vector<rl::StepReport> trend;
  std::vector<size_t> memory_before;  // memory size entering each step
  std::vector<rl::MemoryEntry> memory;
  double seconds = 0.0;
};

CampaignRun run_campaign(Workspace& ws, const rl::RlConfig& config, rl::RewardFn reward, const std::string& name) {
  gen::Generator<float>& prior = ws.corpus_generator().model.operator*();
  // The campaign takes ownership of its prior; give it a private copy.
  auto prior_copy = std::make_unique<gen::Generator<float>>(prior.config(), prior.vocabulary(), 0);
  ad::assign_tensors(ad::snapshot(prior.parameters()), prior_copy->parameters());
  Stopwatch clock;
  rl::Campaign campaign(config, std::move(prior_copy), std::move(reward));
  CampaignRun out;
  size_t before = 0;
  out.trend = campaign.run([&](const rl::StepReport& r) {
    out.memory_before.push_back(before);
    before = campaign.memory().size();
    if (r.step % 25 == 0 || r.step + 1 == config.total_steps) {
      progress(fmt::format("{} step {} mean {:.4f} valid {:.3f} top-1 {:.4f} ({:.0f} s)", name, r.step,
                           r.mean_score, r.validity, r.top1_pce, clock.seconds()));
    }
  });
  out.seconds = clock.seconds();
  out.memory = campaign.memory().entries();
  const fs::path dir = ws.root() / name;
  fs::create_directories(dir);
  rl::write_trend_csv((dir / "trend.csv").string(), out.trend);
  rl::write_memory_csv((dir / "memory.csv").string(), campaign.memory());
  return out;
}

Outcome aromatic_campaign(Workspace& ws) {
  const rl::RlConfig config = campaign_config(71);
  ws.corpus_generator();
  const CampaignRun run = run_campaign(ws, config, rl::aromatic_fraction_reward(), "ac7_aromatic");
  const double first = run.trend.front().mean_score;
  const double last = run.trend.back().mean_score;

  bool monotone = true;
  for (size_t i = 1; i < run.trend.size(); ++i) monotone = monotone && run.trend[i].top1_score >= run.trend[i - 1].top1_score;

  int invalid = 0, duplicates = 0;
  std::set<std::string> digests;
  for (const rl::MemoryEntry& e : run.memory) {
    if (!chem::is_valid_smiles(e.smiles)) {
      ++invalid;
      continue;
    }
    const std::string digest = fmt::format("{:016x}", chem::wl_hash(chem::parse(e.smiles)));
    if (digest != e.digest || !digests.insert(digest).second) ++duplicates;
  }

  const int expected_replay = static_cast<int>(std::ceil(config.replay_fraction * config.batch_size - 1e-12));
  int replay_mismatch = 0, full_steps = 0;
  for (size_t i = 0; i < run.trend.size(); ++i) {
    const int expected = static_cast<int>(std::min<size_t>(expected_replay, run.memory_before[i]));
    if (run.memory_before[i] >= static_cast<size_t>(expected_replay)) ++full_steps;
    if (run.trend[i].replayed != expected) ++replay_mismatch;
  }

  Outcome o;
  o.pass = static_cast<int>(run.trend.size()) == config.total_steps && last >= 1.5 * first && monotone &&
           invalid == 0 && duplicates == 0 && replay_mismatch == 0 && run.seconds < 1800.0;
  o.detail = fmt::format("mean reward {:.4f} -> {:.4f} ({:.2f}x, need 1.5x); top-1 non-decreasing: {}; memory {} "
                         "entries, {} invalid, {} duplicate digests; replay {} on {} steps with memory >= {}, {} "
                         "mismatches; {:.0f} s (limit 1800 s)",
                         first, last, first > 0 ? last / first : INFINITY, monotone ? "yes" : "NO", run.memory.size(),
                         invalid, duplicates, expected_replay, full_steps, expected_replay, replay_mismatch,
                         run.seconds);
  return o;
}

Outcome predictor_campaign(Workspace& ws) {
  Workspace::PredictorRun& pred = ws.task_predictor();
  ws.corpus_generator();
  const rl::RlConfig config = campaign_config(81);
  const CampaignRun run = run_campaign(
      ws, config, rl::predictor_reward(*pred.model, config.target_smiles, config.target_role), "ac8_predictor");
  const double first = run.trend.front().top1_pce;
  const double last = run.trend.back().top1_pce;
  Outcome o;
  o.pass = static_cast<int>(run.trend.size()) == config.total_steps && last >= first + 2.0;
  o.detail = fmt::format("top-1 predicted PCE {:.3f} at step 0 -> {:.3f} at step {} (+{:.3f} pp, need +2); "
                         "validity {:.3f} -> {:.3f}; {:.0f} s",
                         first, last, run.trend.size(), last - first, run.trend.front().validity,
                         run.trend.back().validity, run.seconds);
  return o;
}

// ---------------------------------------------------------------------------
// AC9

// Ring systems from exhaustive simple-cycle enumeration: every cycle is
// found from its smallest atom, its bonds are marked, and atoms joined by
// marked bonds are merged.
std::vector<std::vector<int>> cycle_oracle(const chem::MolecularGraph& g) {
  const int n = g.atom_count();
  std::vector<bool> cycle_bond(static_cast<size_t>(g.bond_count()), false);
  std::vector<int> path_bonds;
  std::vector<bool> on_path(static_cast<size_t>(n), false);
  std::function<void(int, int)> extend = [&](int start, int atom) {
    for (const chem::Neighbor& nb : g.neighbors(atom)) {
      if (nb.atom == start && path_bonds.size() >= 2 && nb.bond != path_bonds.back()) {
        for (int b : path_bonds) cycle_bond[static_cast<size_t>(b)] = true;
        cycle_bond[static_cast<size_t>(nb.bond)] = true;
      } else if (nb.atom > start && !on_path[static_cast<size_t>(nb.atom)]) {
        on_path[static_cast<size_t>(nb.atom)] = true;
        path_bonds.push_back(nb.bond);
        extend(start, nb.atom);
        path_bonds.pop_back();
        on_path[static_cast<size_t>(nb.atom)] = false;
      }
    }
  };
  for (int s = 0; s < n; ++s) {
    on_path[static_cast<size_t>(s)] = true;
    extend(s, s);
    on_path[static_cast<size_t>(s)] = false;
  }
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int a) { return parent[a] == a ? a : parent[a] = root(parent[a]); };
  std::vector<bool> touched(static_cast<size_t>(n), false);
  for (int b = 0; b < g.bond_count(); ++b) {
    if (!cycle_bond[static_cast<size_t>(b)]) continue;
    const chem::Bond& bond = g.bonds()[static_cast<size_t>(b)];
    touched[bond.a] = touched[bond.b] = true;
    parent[root(bond.a)] = root(bond.b);
  }
  std::map<int, std::vector<int>> groups;
  for (int a = 0; a < n; ++a) {
    if (touched[a]) groups[root(a)].push_back(a);
  }
  std::vector<std::vector<int>> systems;
  for (auto& [r, atoms] : groups) systems.push_back(atoms);
  std::sort(systems.begin(), systems.end());
  return systems;
}

Outcome fragment_analysis(Workspace&) {
  const std::vector<std::string> corpus = data::synth_molecules(91, 200);
  int small = 0, mismatched = 0;
  std::string first_mismatch;
  // Oracle counts for the frequency table: occurrences and molecules per key.
  std::map<std::string, std::pair<int, int>> expected;
  for (const std::string& smiles : corpus) {
    const chem::MolecularGraph g = chem::parse(smiles);
    const std::vector<std::vector<int>> oracle = cycle_oracle(g);
    const std::vector<frag::RingSystem> systems = frag::ring_systems(g);
    if (g.atom_count() <= 12) {
      ++small;
      bool same = systems.size() == oracle.size();
      for (size_t i = 0; same && i < systems.size(); ++i) same = systems[i].atoms == oracle[i];
      if (!same) {
        ++mismatched;
        if (first_mismatch.empty()) first_mismatch = smiles;
      }
    }
    std::map<std::string, int> keys;
    std::set<int> ring_atoms;
    for (const auto& atoms : oracle) {
      ring_atoms.insert(atoms.begin(), atoms.end());
      ++keys[fmt::format("{:016x}", chem::wl_hash(g.induced_subgraph(atoms)))];
    }
    for (int a = 0; a < g.atom_count(); ++a) {
      const chem::Atom& atom = g.atoms()[static_cast<size_t>(a)];
      if (atom.element == "F" || atom.element == "Cl" || atom.element == "Br" || atom.element == "I") {
        ++keys["X-" + atom.element];
      }
      if (atom.aromatic && ring_atoms.count(a) &&
          (atom.element == "N" || atom.element == "S" || atom.element == "O")) {
        ++keys["ring-" + atom.element];
      }
    }
    for (const auto& [key, count] : keys) {
      expected[key].first += count;
      expected[key].second += 1;
    }
  }

  const frag::FrequencyTable table = frag::fragment_frequency(corpus);
  int row_errors = 0;
  for (const frag::FrequencyRow& row : table.rows) {
    const auto it = expected.find(row.digest);
    if (it == expected.end() || row.count != it->second.first || row.molecules != it->second.second ||
        row.fraction != static_cast<double>(it->second.second) / static_cast<double>(corpus.size())) {
      ++row_errors;
    }
  }
  row_errors += static_cast<int>(expected.size()) - static_cast<int>(table.rows.size());
  Outcome o;
  o.pass = small > 0 && mismatched == 0 && row_errors == 0 && table.analysed == static_cast<int>(corpus.size());
  o.detail = fmt::format("ring systems match the cycle oracle on {}/{} molecules with <= 12 atoms{}; frequency table "
                         "{} rows, {} disagreements with oracle counts and fractions",
                         small - mismatched, small, first_mismatch.empty() ? "" : " (first mismatch " + first_mismatch + ")",
                         table.rows.size(), std::abs(row_errors));
  return o;
}

// ---------------------------------------------------------------------------
// AC10

Outcome reproducibility(Workspace& ws) {
  Stopwatch clock;
  const fs::path a = ws.root() / "smoke_a", b = ws.root() / "smoke_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const testing::CliResult ra = testing::run_smoke_pipeline(a, 2026);
  const testing::CliResult rb = testing::run_smoke_pipeline(b, 2026);
  Outcome o;
  if (ra.code != 0 || rb.code != 0) {
    o.detail = "smoke pipeline failed: " + (ra.code != 0 ? ra.err : rb.err);
    return o;
  }
  const std::string trend_a = testing::read_text(a / "run" / "trend.csv");
  const std::string memory_a = testing::read_text(a / "run" / "memory.csv");
  const bool trend_same = trend_a == testing::read_text(b / "run" / "trend.csv");
  const bool memory_same = memory_a == testing::read_text(b / "run" / "memory.csv");
  const auto rows = std::count(trend_a.begin(), trend_a.end(), '\n') - 1;
  o.pass = trend_same && memory_same && rows == 50;
  o.detail = fmt::format("trend.csv ({} rows, {} bytes) {}; memory.csv ({} bytes) {}; {:.1f} s", rows, trend_a.size(),
                         trend_same ? "identical" : "DIFFERS", memory_a.size(), memory_same ? "identical" : "DIFFERS",
                         clock.seconds());
  return o;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)(Workspace&);
};

constexpr Criterion kCriteria[] = {
    {1, "parser suite", parser_suite},
    {2, "gradient checks", gradient_checks},
    {3, "rl loss and sigma schedule", rl_loss_examples},
    {4, "encoder pretraining", encoder_pretraining},
    {5, "predictor capacity", predictor_capacity},
    {6, "generator", generator_checks},
    {7, "aromatic-reward campaign", aromatic_campaign},
    {8, "predictor-reward campaign", predictor_campaign},
    {9, "fragment analysis", fragment_analysis},
    {10, "reproducibility", reproducibility},
};

}  // namespace
}  // namespace opv::acceptance

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  using namespace opv::acceptance;
  CLI::App app{"Acceptance criteria AC1-AC10"};
  std::vector<int> selected;
  std::string work = (fs::temp_directory_path() / "opvforge_acceptance").string();
  app.add_option("--criterion,-c", selected, "Run only these criteria (repeatable)")->check(CLI::Range(1, 10));
  app.add_option("--work", work, "Directory for campaign outputs");
  CLI11_PARSE(app, argc, argv);

  Workspace ws(work);
  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome o;
    try {
      o = c.run(ws);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << fmt::format("AC{} {} {}: {}", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
