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
#include <string>
#include <string_view>
#include <vector>

#include "opvforge/ad/nn.hpp"
#include "opvforge/chem/vocabulary.hpp"
#include "opvforge/data/corpus.hpp"

namespace opv::gen {

struct GeneratorConfig {
  int layers = 6;
  int width = 256;
  int heads = 8;
  int max_length = 256;
  double dropout = 0.1;

  int ffn_width() const { return 4 * width; }
  void check() const;  // throws UsageError
};

// Role tags name the role of the prompt molecule and follow BOS directly.
inline constexpr std::string_view kDonorTag = "<donor>";
inline constexpr std::string_view kAcceptorTag = "<acceptor>";

std::string_view role_tag(data::Role role);

// Specials, every token text of `smiles` (sorted), then the two role tags.
chem::Vocabulary generator_vocabulary(const std::vector<std::string>& smiles);

// Token layout [BOS, tag, prompt..., SEP, completion..., EOS]. A sequence
// without completion (for sampling) stops after SEP.
struct PairSequence {
  std::vector<int> ids;
  int sep = -1;  // index of SEP in ids
};

// Throws DataError when a SMILES does not tokenize or contains a token
// missing from the vocabulary.
PairSequence encode_prompt(const chem::Vocabulary& vocab, data::Role role, std::string_view prompt);
PairSequence encode_pair(const chem::Vocabulary& vocab, data::Role role, std::string_view prompt,
                         std::string_view completion);
PairSequence encode_pair(const chem::Vocabulary& vocab, const data::PairSequenceEntry& entry);

// Index of the first SEP token, which closes the prompt. A sampled
// completion may contain further SEPs; DataError when there is none.
int find_sep(const chem::Vocabulary& vocab, const std::vector<int>& ids);

// Token texts after SEP up to (not including) EOS, concatenated.
std::string decode_completion(const chem::Vocabulary& vocab, const std::vector<int>& ids);

// Which next-token predictions a log-likelihood sums over.
enum class Scope {
  All,         // every token after BOS
  Completion,  // tokens after SEP, EOS included
};

template <typename T>
struct TransformerBlock {
  ad::LayerNorm<T> attention_norm;
  ad::MultiHeadAttention<T> attention;
  ad::LayerNorm<T> ffn_norm;
  ad::Linear<T> ffn_in;
  ad::Linear<T> ffn_out;

  TransformerBlock() = default;
  TransformerBlock(const std::string& name, int width, int heads);
  void collect(ad::ParameterRefs<T>& out);
};

// Decoder-only transformer over SMILES tokens with learned positions.
// Blocks are pre-norm: x + Attn(LN(x)), then x + FFN(LN(x)) with a tanh
// GELU between the two feed-forward projections.
template <typename T>
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& config, chem::Vocabulary vocab, uint64_t seed);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  const GeneratorConfig& config() const { return config_; }
  const chem::Vocabulary& vocabulary() const { return vocab_; }
  int vocab_size() const { return vocab_.size(); }
  ad::ParameterRefs<T> parameters();

  // Sequences are right-padded to the longest one; padding never influences
  // real positions because attention is causal. Returns logits
  // [batch * max_len, V] with row b * max_len + t for position t of
  // sequence b. Throws DataError("SequenceTooLong") and
  // ShapeError("IndexOutOfRange"). When `attention_weights` is set it
  // receives one [B, heads, T, T] tensor per layer.
  ad::Var<T> forward(ad::Tape<T>& tape, const std::vector<std::vector<int>>& sequences, Rng* rng, bool training,
                     std::vector<ad::Tensor<T>>* attention_weights = nullptr);

  // Per-sequence log-likelihood [B, 1] of the scoped next-token predictions.
  ad::Var<T> log_prob(ad::Tape<T>& tape, const std::vector<std::vector<int>>& sequences, Scope scope, Rng* rng,
                      bool training);

  // Mean next-token cross-entropy over every position after BOS.
  ad::Var<T> lm_loss(ad::Tape<T>& tape, const std::vector<std::vector<int>>& sequences, Rng* rng, bool training);

  ad::Parameter<T>& token_embedding() { return token_embedding_; }
  ad::Parameter<T>& position_embedding() { return position_embedding_; }
  std::vector<TransformerBlock<T>>& blocks() { return blocks_; }
  ad::LayerNorm<T>& final_norm() { return final_norm_; }
  ad::Linear<T>& output() { return output_; }

 private:
  GeneratorConfig config_;
  chem::Vocabulary vocab_;
  ad::Parameter<T> token_embedding_;     // [V, d]
  ad::Parameter<T> position_embedding_;  // [max_length, d]
  std::vector<TransformerBlock<T>> blocks_;
  ad::LayerNorm<T> final_norm_;
  ad::Linear<T> output_;
};

// V*d + L*d + layers*(12 d^2 + 13 d) + 2 d + d*V + V.
int64_t expected_parameter_count(const GeneratorConfig& config, int vocab_size);

// Evaluation-mode log-likelihoods, computed in batches.
template <typename T>
std::vector<double> sequence_log_probs(Generator<T>& model, const std::vector<std::vector<int>>& sequences,
                                       Scope scope, int batch_size = 64);

struct SampleOptions {
  int max_new = 128;
  uint64_t seed = 0;
};

struct Sample {
  std::vector<int> ids;         // prompt followed by the generated tokens
  std::vector<double> step_log_probs;  // log p of each generated token under the sampling distribution
  bool finished = false;        // ended with EOS
};

// Ancestral sampling from the full softmax at temperature 1 with a key/value
// cache. Sample i draws from Rng(derive_seed(seed, i)), so each result is
// independent of the batch it was drawn in. Generation stops at EOS, after
// max_new tokens, or at the model's maximum length. Throws
// DataError("SequenceTooLong") when a prompt does not leave room for one
// token.
template <typename T>
std::vector<Sample> sample(Generator<T>& model, const std::vector<std::vector<int>>& prompts,
                           const SampleOptions& options);

}  // namespace opv::gen
