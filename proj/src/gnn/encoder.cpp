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

#include "opvforge/gnn/encoder.hpp"

#include <cmath>

#include "opvforge/common/error.hpp"

namespace opv::gnn {

using ad::Parameter;
using ad::ParameterRefs;
using ad::Tape;
using ad::Tensor;
using ad::Var;

void EncoderConfig::check() const {
  if (layers < 1) throw UsageError("encoder layers must be >= 1");
  if (hidden < 1 || heads < 1 || hidden % heads != 0) throw UsageError("encoder hidden width must be divisible by heads");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw UsageError("mask_ratio must lie in (0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
}

template <typename T>
GatLayer<T>::GatLayer(const std::string& name, int64_t in, int64_t out)
    : w_left(name + ".w_left", {in, out}),
      w_right(name + ".w_right", {in, out}),
      attention(name + ".attention", {out}),
      bias(name + ".bias", {out}) {}

template <typename T>
void GatLayer<T>::init(Rng& rng) {
  ad::xavier_uniform(w_left, rng);
  ad::xavier_uniform(w_right, rng);
  ad::normal_init(attention, rng, 1.0 / std::sqrt(static_cast<double>(attention.value.size())));
  ad::constant_init(bias, T(0));
}

template <typename T>
void GatLayer<T>::collect(ParameterRefs<T>& out) {
  out.push_back(&w_left);
  out.push_back(&w_right);
  out.push_back(&attention);
  out.push_back(&bias);
}

template <typename T>
Var<T> GatLayer<T>::forward(Tape<T>& tape, Var<T> h, const std::vector<int>& src, const std::vector<int>& dst, int heads,
                            double negative_slope, Tensor<T>* alpha_out) {
  const int64_t nodes = h.dim(0);
  Var<T> target = ad::matmul(h, tape.param(w_left));
  Var<T> source = ad::matmul(h, tape.param(w_right));
  Var<T> source_e = ad::index_rows(source, src);
  Var<T> pre = ad::add(ad::index_rows(target, dst), source_e);
  Var<T> score = ad::head_dot(ad::leaky_relu(pre, static_cast<T>(negative_slope)), tape.param(attention), heads);
  Var<T> alpha = ad::segment_softmax(score, dst, nodes);
  if (alpha_out) *alpha_out = alpha.value();
  Var<T> message = ad::head_scale(alpha, source_e);
  return ad::add_bias(ad::scatter_add_rows(message, dst, nodes), tape.param(bias));
}

template <typename T>
AttentionalPool<T>::AttentionalPool(const std::string& name, int64_t hidden)
    : gate_hidden(name + ".gate_hidden", hidden, hidden, false), gate_out(name + ".gate_out", hidden, 1, false) {}

template <typename T>
void AttentionalPool<T>::init(Rng& rng) {
  gate_hidden.init(rng);
  gate_out.init(rng);
}

template <typename T>
void AttentionalPool<T>::collect(ParameterRefs<T>& out) {
  gate_hidden.collect(out);
  gate_out.collect(out);
}

template <typename T>
Var<T> AttentionalPool<T>::forward(Tape<T>& tape, Var<T> node, const std::vector<int>& node_graph, int graphs,
                                   Tensor<T>* weights_out) {
  std::vector<int> sizes(static_cast<size_t>(graphs), 0);
  for (int g : node_graph) ++sizes[static_cast<size_t>(g)];
  for (int s : sizes) {
    if (s == 0) throw DataError("EmptyGraph: attentional pooling needs at least one node");
  }
  Var<T> gate = gate_out(tape, ad::tanh(gate_hidden(tape, node)));  // [nodes, 1]
  Var<T> weights = ad::segment_softmax(gate, node_graph, graphs);
  if (weights_out) *weights_out = weights.value();
  return ad::scatter_add_rows(ad::head_scale(weights, node), node_graph, graphs);
}

template <typename T>
GraphEncoder<T>::GraphEncoder(const EncoderConfig& config, const std::string& prefix, uint64_t seed)
    : config_(config), pool_(prefix + ".pool", config.hidden) {
  config_.check();
  for (int l = 0; l < config_.layers; ++l) {
    const int64_t in = l == 0 ? kFeatureWidth : config_.hidden;
    layers_.emplace_back(prefix + ".gat" + std::to_string(l), in, config_.hidden);
  }
  Rng rng(seed);
  for (GatLayer<T>& layer : layers_) layer.init(rng);
  pool_.init(rng);
}

template <typename T>
ParameterRefs<T> GraphEncoder<T>::parameters() {
  ParameterRefs<T> out;
  for (GatLayer<T>& layer : layers_) layer.collect(out);
  pool_.collect(out);
  return out;
}

template <typename T>
Var<T> GraphEncoder<T>::encode_nodes(Tape<T>& tape, const GraphBatch& batch, Rng* rng, bool training) {
  Var<T> h = tape.constant(batch.x.template cast<T>());
  for (GatLayer<T>& layer : layers_) {
    h = ad::elu(layer.forward(tape, h, batch.src, batch.dst, config_.heads, config_.negative_slope));
    h = ad::dropout(h, config_.dropout, rng, training);
  }
  return h;
}

template <typename T>
EncoderOutput<T> GraphEncoder<T>::encode(Tape<T>& tape, const GraphBatch& batch, Rng* rng, bool training) {
  EncoderOutput<T> out;
  out.node = encode_nodes(tape, batch, rng, training);
  out.graph = pool_.forward(tape, out.node, batch.node_graph, batch.graphs);
  return out;
}

template <typename T>
Var<T> ReconstructionHead<T>::logits(Tape<T>& tape, Var<T> node, const std::vector<int>& masked_rows) {
  for (int r : masked_rows) {
    if (r < 0 || r >= node.dim(0)) throw ShapeError("IndexOutOfRange: masked row " + std::to_string(r));
  }
  return proj(tape, ad::index_rows(node, masked_rows));
}

template struct GatLayer<float>;
template struct GatLayer<double>;
template struct AttentionalPool<float>;
template struct AttentionalPool<double>;
template class GraphEncoder<float>;
template class GraphEncoder<double>;
template struct ReconstructionHead<float>;
template struct ReconstructionHead<double>;

}  // namespace opv::gnn
