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

#include "opvforge/gen/generator.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "opvforge/ad/init.hpp"
#include "opvforge/chem/smiles.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/parallel.hpp"

namespace opv::gen {

void GeneratorConfig::check() const {
  if (layers < 1) throw UsageError("generator needs at least one layer");
  if (width < 1 || heads < 1) throw UsageError("generator width and heads must be positive");
  if (width % heads != 0) throw UsageError(fmt::format("heads ({}) must divide width ({})", heads, width));
  if (max_length < 4) throw UsageError("generator max_length must be at least 4");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("generator dropout must be in [0, 1)");
}

std::string_view role_tag(data::Role role) { return role == data::Role::Donor ? kDonorTag : kAcceptorTag; }

chem::Vocabulary generator_vocabulary(const std::vector<std::string>& smiles) {
  return chem::build_vocabulary(smiles).with_appended({std::string(kDonorTag), std::string(kAcceptorTag)});
}

namespace {

void append_smiles(const chem::Vocabulary& vocab, std::string_view smiles, std::vector<int>& ids) {
  for (const chem::Token& token : chem::tokenize(smiles)) {
    if (!vocab.contains(token.text)) {
      throw DataError(fmt::format("token '{}' of {} is not in the generator vocabulary", token.text, smiles));
    }
    ids.push_back(vocab.index(token.text));
  }
}

}  // namespace

PairSequence encode_prompt(const chem::Vocabulary& vocab, data::Role role, std::string_view prompt) {
  const std::string_view tag = role_tag(role);
  if (!vocab.contains(tag)) throw UsageError(fmt::format("vocabulary lacks the role tag {}", tag));
  PairSequence seq;
  seq.ids = {vocab.bos(), vocab.index(tag)};
  append_smiles(vocab, prompt, seq.ids);
  seq.sep = static_cast<int>(seq.ids.size());
  seq.ids.push_back(vocab.sep());
  return seq;
}

PairSequence encode_pair(const chem::Vocabulary& vocab, data::Role role, std::string_view prompt,
                         std::string_view completion) {
  PairSequence seq = encode_prompt(vocab, role, prompt);
  append_smiles(vocab, completion, seq.ids);
  seq.ids.push_back(vocab.eos());
  return seq;
}

PairSequence encode_pair(const chem::Vocabulary& vocab, const data::PairSequenceEntry& entry) {
  return encode_pair(vocab, entry.role, entry.prompt, entry.completion);
}

int find_sep(const chem::Vocabulary& vocab, const std::vector<int>& ids) {
  const auto it = std::find(ids.begin(), ids.end(), vocab.sep());
  if (it == ids.end()) throw DataError("sequence has no SEP token");
  return static_cast<int>(it - ids.begin());
}

std::string decode_completion(const chem::Vocabulary& vocab, const std::vector<int>& ids) {
  std::string out;
  for (size_t i = static_cast<size_t>(find_sep(vocab, ids)) + 1; i < ids.size() && ids[i] != vocab.eos(); ++i) {
    out += vocab.text(ids[i]);
  }
  return out;
}

template <typename T>
TransformerBlock<T>::TransformerBlock(const std::string& name, int width, int heads)
    : attention_norm(name + ".attention_norm", width),
      attention(name + ".attention", width, heads),
      ffn_norm(name + ".ffn_norm", width),
      ffn_in(name + ".ffn_in", width, 4 * width),
      ffn_out(name + ".ffn_out", 4 * width, width) {}

template <typename T>
void TransformerBlock<T>::collect(ad::ParameterRefs<T>& out) {
  attention_norm.collect(out);
  attention.collect(out);
  ffn_norm.collect(out);
  ffn_in.collect(out);
  ffn_out.collect(out);
}

namespace {

template <typename T>
void init_linear(ad::Linear<T>& layer, Rng& rng, double stddev) {
  ad::normal_init(layer.weight, rng, stddev);
  ad::constant_init(layer.bias, T(0));
}

}  // namespace

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, chem::Vocabulary vocab, uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.check();
  for (std::string_view tag : {kDonorTag, kAcceptorTag}) {
    if (!vocab_.contains(tag)) throw UsageError(fmt::format("vocabulary lacks the role tag {}", tag));
  }
  const int d = config_.width;
  token_embedding_ = ad::Parameter<T>("token_embedding", {vocab_.size(), d});
  position_embedding_ = ad::Parameter<T>("position_embedding", {config_.max_length, d});
  for (int l = 0; l < config_.layers; ++l) blocks_.emplace_back(fmt::format("blocks.{}", l), d, config_.heads);
  final_norm_ = ad::LayerNorm<T>("final_norm", d);
  output_ = ad::Linear<T>("output", d, vocab_.size());

  // GPT-2 style: N(0, 0.02) everywhere, residual projections scaled down by
  // the number of residual branches.
  Rng rng(seed);
  const double residual = 0.02 / std::sqrt(2.0 * config_.layers);
  ad::normal_init(token_embedding_, rng, 0.02);
  ad::normal_init(position_embedding_, rng, 0.02);
  for (TransformerBlock<T>& b : blocks_) {
    init_linear(b.attention.query, rng, 0.02);
    init_linear(b.attention.key, rng, 0.02);
    init_linear(b.attention.value, rng, 0.02);
    init_linear(b.attention.output, rng, residual);
    init_linear(b.ffn_in, rng, 0.02);
    init_linear(b.ffn_out, rng, residual);
  }
  init_linear(output_, rng, 0.02);
}

template <typename T>
ad::ParameterRefs<T> Generator<T>::parameters() {
  ad::ParameterRefs<T> out{&token_embedding_, &position_embedding_};
  for (TransformerBlock<T>& b : blocks_) b.collect(out);
  final_norm_.collect(out);
  output_.collect(out);
  return out;
}

namespace {

void check_tokens(const std::vector<int>& ids, int vocab_size, int max_length) {
  if (static_cast<int>(ids.size()) > max_length) {
    throw DataError(fmt::format("SequenceTooLong: {} tokens, maximum {}", ids.size(), max_length));
  }
  for (int id : ids) {
    if (id < 0 || id >= vocab_size) {
      throw ShapeError(fmt::format("IndexOutOfRange: token id {} for vocabulary of {}", id, vocab_size));
    }
  }
}

int64_t longest(const std::vector<std::vector<int>>& sequences) {
  size_t t = 0;
  for (const auto& s : sequences) t = std::max(t, s.size());
  return static_cast<int64_t>(t);
}

// Next-token targets per padded position; -1 outside the scope.
std::vector<int> scoped_targets(const chem::Vocabulary& vocab, const std::vector<std::vector<int>>& sequences,
                                int64_t tmax, Scope scope) {
  std::vector<int> targets(sequences.size() * static_cast<size_t>(tmax), -1);
  for (size_t b = 0; b < sequences.size(); ++b) {
    const auto& s = sequences[b];
    const size_t start = scope == Scope::All ? 0 : static_cast<size_t>(find_sep(vocab, s));
    for (size_t t = start; t + 1 < s.size(); ++t) targets[b * static_cast<size_t>(tmax) + t] = s[t + 1];
  }
  return targets;
}

}  // namespace

template <typename T>
ad::Var<T> Generator<T>::forward(ad::Tape<T>& tape, const std::vector<std::vector<int>>& sequences, Rng* rng,
                                 bool training, std::vector<ad::Tensor<T>>* attention_weights) {
  if (sequences.empty()) throw ShapeError("generator forward on an empty batch");
  const int64_t b = static_cast<int64_t>(sequences.size());
  const int64_t tmax = longest(sequences);
  if (tmax == 0) throw ShapeError("generator forward on empty sequences");
  std::vector<int> ids, positions;
  ids.reserve(static_cast<size_t>(b * tmax));
  positions.reserve(ids.capacity());
  for (const auto& s : sequences) {
    check_tokens(s, vocab_.size(), config_.max_length);
    for (int64_t t = 0; t < tmax; ++t) {
      ids.push_back(t < static_cast<int64_t>(s.size()) ? s[static_cast<size_t>(t)] : vocab_.pad());
      positions.push_back(static_cast<int>(t));
    }
  }
  const int64_t d = config_.width;
  const double p = config_.dropout;
  if (attention_weights) attention_weights->assign(blocks_.size(), ad::Tensor<T>());

  ad::Var<T> x = ad::add(ad::embedding(tape.param(token_embedding_), ids),
                         ad::embedding(tape.param(position_embedding_), positions));
  x = ad::reshape(ad::dropout(x, p, rng, training), {b, tmax, d});
  for (size_t l = 0; l < blocks_.size(); ++l) {
    TransformerBlock<T>& blk = blocks_[l];
    ad::AttentionOptions<T> options;
    options.causal = true;
    options.dropout = p;
    options.rng = rng;
    options.training = training;
    options.weights_out = attention_weights ? &(*attention_weights)[l] : nullptr;
    ad::Var<T> h = blk.attention_norm(tape, x);
    x = x + ad::dropout(blk.attention(tape, h, h, options), p, rng, training);
    h = ad::gelu(blk.ffn_in(tape, blk.ffn_norm(tape, x)));
    x = x + ad::dropout(blk.ffn_out(tape, h), p, rng, training);
  }
  return ad::reshape(output_(tape, final_norm_(tape, x)), {b * tmax, static_cast<int64_t>(vocab_.size())});
}

template <typename T>
ad::Var<T> Generator<T>::log_prob(ad::Tape<T>& tape, const std::vector<std::vector<int>>& sequences, Scope scope,
                                  Rng* rng, bool training) {
  const int64_t tmax = longest(sequences);
  const std::vector<int> targets = scoped_targets(vocab_, sequences, tmax, scope);
  ad::Var<T> logits = forward(tape, sequences, rng, training);
  ad::Var<T> picked = ad::reshape(ad::pick_log_softmax(logits, targets), {logits.dim(0), 1});
  std::vector<int> owner(targets.size());
  for (size_t r = 0; r < owner.size(); ++r) owner[r] = static_cast<int>(r / static_cast<size_t>(tmax));
  return ad::scatter_add_rows(picked, owner, static_cast<int64_t>(sequences.size()));
}

template <typename T>
ad::Var<T> Generator<T>::lm_loss(ad::Tape<T>& tape, const std::vector<std::vector<int>>& sequences, Rng* rng,
                                 bool training) {
  const std::vector<int> targets = scoped_targets(vocab_, sequences, longest(sequences), Scope::All);
  return ad::cross_entropy(forward(tape, sequences, rng, training), targets);
}

int64_t expected_parameter_count(const GeneratorConfig& config, int vocab_size) {
  const int64_t v = vocab_size, d = config.width, l = config.max_length;
  return v * d + l * d + config.layers * (12 * d * d + 13 * d) + 2 * d + d * v + v;
}

template <typename T>
std::vector<double> sequence_log_probs(Generator<T>& model, const std::vector<std::vector<int>>& sequences,
                                       Scope scope, int batch_size) {
  if (batch_size < 1) throw UsageError("batch_size must be positive");
  std::vector<double> out;
  out.reserve(sequences.size());
  for (size_t begin = 0; begin < sequences.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(sequences.size(), begin + static_cast<size_t>(batch_size));
    const std::vector<std::vector<int>> chunk(sequences.begin() + static_cast<std::ptrdiff_t>(begin),
                                              sequences.begin() + static_cast<std::ptrdiff_t>(end));
    ad::Tape<T> tape(false);
    const ad::Var<T> lp = model.log_prob(tape, chunk, scope, nullptr, false);
    for (int64_t i = 0; i < lp.value().size(); ++i) out.push_back(static_cast<double>(lp.value()[i]));
  }
  return out;
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

template <typename T>
RowMat<T> apply_linear(const RowMat<T>& x, const ad::Linear<T>& layer) {
  const ad::Tensor<T>& w = layer.weight.value;
  RowMat<T> y = x * ConstRowMap<T>(w.data(), w.dim(0), w.dim(1));
  y.rowwise() += ConstVecMap<T>(layer.bias.value.data(), w.dim(1));
  return y;
}

// Same arithmetic as ad::layer_norm with its default epsilon.
template <typename T>
RowMat<T> apply_norm(const RowMat<T>& x, const ad::LayerNorm<T>& norm) {
  const int64_t f = x.cols();
  const T* g = norm.gain.value.data();
  const T* bias = norm.bias.value.data();
  RowMat<T> out(x.rows(), f);
  for (int64_t r = 0; r < x.rows(); ++r) {
    T mu = 0;
    for (int64_t j = 0; j < f; ++j) mu += x(r, j);
    mu /= static_cast<T>(f);
    T var = 0;
    for (int64_t j = 0; j < f; ++j) var += (x(r, j) - mu) * (x(r, j) - mu);
    var /= static_cast<T>(f);
    const T rs = T(1) / std::sqrt(var + T(1e-5));
    for (int64_t j = 0; j < f; ++j) out(r, j) = g[j] * ((x(r, j) - mu) * rs) + bias[j];
  }
  return out;
}

// Same expression as ad::gelu.
template <typename T>
void apply_gelu(RowMat<T>& x) {
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
  constexpr T kC = T(0.7978845608028654);
  constexpr T kA = T(0.044715);
  Eigen::Map<Array> xa(x.data(), x.size());
  const Array th = (kC * (xa + kA * xa.cube())).tanh();
  xa = T(0.5) * xa * (T(1) + th);
}

}  // namespace

template <typename T>
std::vector<Sample> sample(Generator<T>& model, const std::vector<std::vector<int>>& prompts,
                           const SampleOptions& options) {
  if (options.max_new < 1) throw UsageError("max_new must be positive");
  const GeneratorConfig& cfg = model.config();
  const chem::Vocabulary& vocab = model.vocabulary();
  const int64_t d = cfg.width, heads = cfg.heads, dh = d / heads;
  const int64_t v = vocab.size();
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const size_t n = prompts.size();

  std::vector<Sample> out(n);
  std::vector<Rng> rngs;
  rngs.reserve(n);
  std::vector<int> generated(n, 0);
  std::vector<size_t> active;
  size_t longest_run = 0;
  for (size_t i = 0; i < n; ++i) {
    if (prompts[i].empty()) throw DataError("cannot sample from an empty prompt");
    if (static_cast<int>(prompts[i].size()) >= cfg.max_length) {
      throw DataError(fmt::format("SequenceTooLong: prompt of {} tokens leaves no room below maximum {}",
                                  prompts[i].size(), cfg.max_length));
    }
    check_tokens(prompts[i], vocab.size(), cfg.max_length);
    out[i].ids = prompts[i];
    rngs.emplace_back(derive_seed(options.seed, i));
    active.push_back(i);
    longest_run = std::max(longest_run, std::min(prompts[i].size() + static_cast<size_t>(options.max_new),
                                                 static_cast<size_t>(cfg.max_length)));
  }

  const size_t layers = model.blocks().size();
  // caches[l][i]: keys then values of sequence i at layer l, one row per position.
  std::vector<std::vector<RowMat<T>>> keys(layers, std::vector<RowMat<T>>(n)), values = keys;
  for (size_t l = 0; l < layers; ++l) {
    for (size_t i = 0; i < n; ++i) {
      keys[l][i].resize(static_cast<int64_t>(longest_run), d);
      values[l][i].resize(static_cast<int64_t>(longest_run), d);
    }
  }
  const ad::Tensor<T>& tok = model.token_embedding().value;
  const ad::Tensor<T>& pos = model.position_embedding().value;

  for (int64_t p = 0; !active.empty(); ++p) {
    const int64_t a = static_cast<int64_t>(active.size());
    RowMat<T> x(a, d);
    for (int64_t r = 0; r < a; ++r) {
      const int id = out[active[static_cast<size_t>(r)]].ids[static_cast<size_t>(p)];
      for (int64_t j = 0; j < d; ++j) x(r, j) = tok[id * d + j] + pos[p * d + j];
    }
    for (size_t l = 0; l < layers; ++l) {
      TransformerBlock<T>& blk = model.blocks()[l];
      const RowMat<T> h = apply_norm(x, blk.attention_norm);
      const RowMat<T> q = apply_linear(h, blk.attention.query);
      const RowMat<T> k = apply_linear(h, blk.attention.key);
      const RowMat<T> val = apply_linear(h, blk.attention.value);
      RowMat<T> attended(a, d);
      parallel_for(static_cast<size_t>(a), [&](size_t r) {
        const size_t i = active[r];
        RowMat<T>& kc = keys[l][i];
        RowMat<T>& vc = values[l][i];
        kc.row(p) = k.row(static_cast<int64_t>(r));
        vc.row(p) = val.row(static_cast<int64_t>(r));
        std::vector<T> w(static_cast<size_t>(p + 1));
        for (int64_t hd = 0; hd < heads; ++hd) {
          T mx = -std::numeric_limits<T>::infinity();
          for (int64_t j = 0; j <= p; ++j) {
            w[static_cast<size_t>(j)] = q.row(static_cast<int64_t>(r)).segment(hd * dh, dh).dot(kc.row(j).segment(hd * dh, dh)) * scale;
            mx = std::max(mx, w[static_cast<size_t>(j)]);
          }
          T total = 0;
          for (T& e : w) {
            e = std::exp(e - mx);
            total += e;
          }
          auto o = attended.row(static_cast<int64_t>(r)).segment(hd * dh, dh);
          o.setZero();
          for (int64_t j = 0; j <= p; ++j) o += (w[static_cast<size_t>(j)] / total) * vc.row(j).segment(hd * dh, dh);
        }
      });
      x += apply_linear(attended, blk.attention.output);
      RowMat<T> f = apply_linear(apply_norm(x, blk.ffn_norm), blk.ffn_in);
      apply_gelu(f);
      x += apply_linear(f, blk.ffn_out);
    }
    const RowMat<T> logits = apply_linear(apply_norm(x, model.final_norm()), model.output());

    std::vector<size_t> still;
    for (int64_t r = 0; r < a; ++r) {
      const size_t i = active[static_cast<size_t>(r)];
      Sample& s = out[i];
      if (static_cast<int64_t>(s.ids.size()) > p + 1) {  // still inside the prompt
        still.push_back(i);
        continue;
      }
      std::vector<double> probs(static_cast<size_t>(v));
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t c = 0; c < v; ++c) mx = std::max(mx, static_cast<double>(logits(r, c)));
      double total = 0.0;
      for (int64_t c = 0; c < v; ++c) {
        probs[static_cast<size_t>(c)] = std::exp(static_cast<double>(logits(r, c)) - mx);
        total += probs[static_cast<size_t>(c)];
      }
      const size_t token = rngs[i].categorical(probs);
      s.step_log_probs.push_back(static_cast<double>(logits(r, static_cast<int64_t>(token))) - mx - std::log(total));
      s.ids.push_back(static_cast<int>(token));
      ++generated[i];
      if (static_cast<int>(token) == vocab.eos()) {
        s.finished = true;
      } else if (generated[i] < options.max_new && static_cast<int>(s.ids.size()) < cfg.max_length) {
        still.push_back(i);
      }
    }
    active = std::move(still);
  }
  return out;
}

template struct TransformerBlock<float>;
template struct TransformerBlock<double>;
template class Generator<float>;
template class Generator<double>;
template std::vector<double> sequence_log_probs<float>(Generator<float>&, const std::vector<std::vector<int>>&, Scope,
                                                       int);
template std::vector<double> sequence_log_probs<double>(Generator<double>&, const std::vector<std::vector<int>>&,
                                                        Scope, int);
template std::vector<Sample> sample<float>(Generator<float>&, const std::vector<std::vector<int>>&,
                                           const SampleOptions&);
template std::vector<Sample> sample<double>(Generator<double>&, const std::vector<std::vector<int>>&,
                                            const SampleOptions&);

}  // namespace opv::gen
