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

#include <string>

#include "opvforge/ad/init.hpp"
#include "opvforge/ad/ops.hpp"

// Small parameter-owning building blocks. Bind parameters to a tape on each
// forward pass; never cache Vars across tapes.
namespace opv::ad {

template <typename T>
struct Linear {
  Parameter<T> weight;  // [in, out]
  Parameter<T> bias;    // [out], empty when disabled

  Linear() = default;
  Linear(const std::string& name, int64_t in, int64_t out, bool with_bias = true)
      : weight(name + ".weight", {in, out}) {
    if (with_bias) bias = Parameter<T>(name + ".bias", {out});
  }

  bool has_bias() const { return bias.value.size() > 0; }

  void init(Rng& rng) {
    xavier_uniform(weight, rng);
    if (has_bias()) constant_init(bias, T(0));
  }

  Var<T> operator()(Tape<T>& tape, Var<T> x) {
    return linear(x, tape.param(weight), has_bias() ? tape.param(bias) : Var<T>());
  }

  void collect(ParameterRefs<T>& out) {
    out.push_back(&weight);
    if (has_bias()) out.push_back(&bias);
  }
};

template <typename T>
struct LayerNorm {
  Parameter<T> gain;
  Parameter<T> bias;

  LayerNorm() = default;
  LayerNorm(const std::string& name, int64_t width) : gain(name + ".gain", {width}), bias(name + ".bias", {width}) {
    constant_init(gain, T(1));
  }

  Var<T> operator()(Tape<T>& tape, Var<T> x) { return layer_norm(x, tape.param(gain), tape.param(bias)); }

  void collect(ParameterRefs<T>& out) {
    out.push_back(&gain);
    out.push_back(&bias);
  }
};

// Separate query/key/value projections, scaled dot-product attention over
// `heads` heads, then an output projection. Inputs are [B, T, D].
template <typename T>
struct MultiHeadAttention {
  Linear<T> query;
  Linear<T> key;
  Linear<T> value;
  Linear<T> output;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, int64_t width, int heads_)
      : query(name + ".query", width, width),
        key(name + ".key", width, width),
        value(name + ".value", width, width),
        output(name + ".output", width, width),
        heads(heads_) {}

  void init(Rng& rng) {
    query.init(rng);
    key.init(rng);
    value.init(rng);
    output.init(rng);
  }

  void collect(ParameterRefs<T>& out) {
    query.collect(out);
    key.collect(out);
    value.collect(out);
    output.collect(out);
  }

  Var<T> operator()(Tape<T>& tape, Var<T> queries, Var<T> keys, const AttentionOptions<T>& options = {}) {
    return output(tape, attention(query(tape, queries), key(tape, keys), value(tape, keys), heads, options));
  }
};

}  // namespace opv::ad
