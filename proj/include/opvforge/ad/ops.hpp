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

#include <vector>

#include "opvforge/ad/tape.hpp"
#include "opvforge/common/random.hpp"

// Differentiable operations over Tape values. Every op validates its input
// shapes and throws ShapeError on mismatch.
namespace opv::ad {

// a: [..., M, K]; b: [K, N] (shared) or [..., K, N] (same leading dims).
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);

// x: [..., in] times w: [in, out] plus optional bias [out].
template <typename T> Var<T> linear(Var<T> x, Var<T> w, Var<T> bias = {});

template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
// x: [..., F] plus b: [F].
template <typename T> Var<T> add_bias(Var<T> x, Var<T> b);
template <typename T> Var<T> scale(Var<T> x, T factor);

template <typename T> Var<T> relu(Var<T> x);
template <typename T> Var<T> elu(Var<T> x);
template <typename T> Var<T> gelu(Var<T> x);  // tanh approximation
template <typename T> Var<T> tanh(Var<T> x);
template <typename T> Var<T> sigmoid(Var<T> x);
template <typename T> Var<T> leaky_relu(Var<T> x, T slope);
template <typename T> Var<T> exp(Var<T> x);
template <typename T> Var<T> log(Var<T> x);
template <typename T> Var<T> square(Var<T> x);

// Max-subtracted softmax along `axis`.
template <typename T> Var<T> softmax(Var<T> x, int axis = -1);
template <typename T> Var<T> log_softmax(Var<T> x);  // last axis

// Normalizes the last axis, then gain * x + bias.
template <typename T> Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = T(1e-5));

// logits: [N, V]. Returns [N] with log softmax(logits[i])[targets[i]];
// rows with target -1 yield 0 and receive no gradient.
template <typename T> Var<T> pick_log_softmax(Var<T> logits, const std::vector<int>& targets);

// Mean negative log-likelihood over rows with target >= 0.
template <typename T> Var<T> cross_entropy(Var<T> logits, const std::vector<int>& targets);

template <typename T> Var<T> sum(Var<T> x);
template <typename T> Var<T> mean(Var<T> x);
template <typename T> Var<T> mse_loss(Var<T> pred, const Tensor<T>& target);

// Inverted dropout. Identity when !training or rate == 0.
template <typename T> Var<T> dropout(Var<T> x, double rate, Rng* rng, bool training);

// table: [V, D]; returns [ids.size(), D].
template <typename T> Var<T> embedding(Var<T> table, const std::vector<int>& ids);

// Concatenation along the last axis; leading dims must agree.
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts);
template <typename T> Var<T> slice_last(Var<T> x, int64_t begin, int64_t end);
template <typename T> Var<T> reshape(Var<T> x, Shape shape);

// Row gather over the first axis; index -1 produces a zero row.
template <typename T> Var<T> index_rows(Var<T> x, const std::vector<int>& idx);
// out[idx[e]] += x[e]; index -1 drops the row.
template <typename T> Var<T> scatter_add_rows(Var<T> x, const std::vector<int>& idx, int64_t rows);

// scores: [E, H]. Softmax over the rows sharing a segment id, per column.
template <typename T> Var<T> segment_softmax(Var<T> scores, const std::vector<int>& segment, int64_t segments);
// x: [N, F]; mean of rows per segment (segments must be non-empty).
template <typename T> Var<T> segment_mean(Var<T> x, const std::vector<int>& segment, int64_t segments);

// x: [E, H*C], a: [H*C]. out[e, h] = sum_c x[e, h*C + c] * a[h*C + c].
template <typename T> Var<T> head_dot(Var<T> x, Var<T> a, int heads);
// alpha: [E, H], x: [E, H*C]. out[e, h*C + c] = alpha[e, h] * x[e, h*C + c].
template <typename T> Var<T> head_scale(Var<T> alpha, Var<T> x);

template <typename T>
struct AttentionOptions {
  bool causal = false;
  std::vector<int> key_lengths;  // per batch entry; empty = all keys valid
  double dropout = 0.0;          // applied to attention weights
  Rng* rng = nullptr;
  bool training = false;
  Tensor<T>* weights_out = nullptr;  // receives [B, H, Tq, Tk] pre-dropout weights
};

// Scaled dot-product multi-head attention. q: [B, Tq, D], k/v: [B, Tk, D].
// Masked keys get exactly zero weight.
template <typename T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, int heads, const AttentionOptions<T>& options = {});

template <typename T> Var<T> operator+(Var<T> a, Var<T> b) { return add(a, b); }
template <typename T> Var<T> operator-(Var<T> a, Var<T> b) { return sub(a, b); }
template <typename T> Var<T> operator*(Var<T> a, Var<T> b) { return mul(a, b); }

}  // namespace opv::ad
