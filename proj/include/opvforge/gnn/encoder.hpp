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
#include <vector>

#include "opvforge/ad/nn.hpp"
#include "opvforge/gnn/features.hpp"

namespace opv::gnn {

struct EncoderConfig {
  int layers = 3;
  int hidden = 128;
  int heads = 4;
  double negative_slope = 0.2;
  double dropout = 0.1;
  double mask_ratio = 0.21;

  void check() const;  // throws UsageError
};

// One GATv2 convolution: score(i <- j) = a . LeakyReLU(W_l h_i + W_r h_j),
// softmax over the in-edges of i, message W_r h_j, heads concatenated.
template <typename T>
struct GatLayer {
  ad::Parameter<T> w_left;   // [in, heads * channels], applied to the target
  ad::Parameter<T> w_right;  // [in, heads * channels], applied to the source
  ad::Parameter<T> attention;
  ad::Parameter<T> bias;

  GatLayer() = default;
  GatLayer(const std::string& name, int64_t in, int64_t out);
  void init(Rng& rng);
  void collect(ad::ParameterRefs<T>& out);

  // Pre-activation output [nodes, out]. alpha_out receives [edges, heads].
  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> h, const std::vector<int>& src, const std::vector<int>& dst,
                     int heads, double negative_slope, ad::Tensor<T>* alpha_out = nullptr);
};

// Gate g_i = w2 . tanh(W1 h_i), softmax per graph, weighted node sum.
template <typename T>
struct AttentionalPool {
  ad::Linear<T> gate_hidden;
  ad::Linear<T> gate_out;

  AttentionalPool() = default;
  AttentionalPool(const std::string& name, int64_t hidden);
  void init(Rng& rng);
  void collect(ad::ParameterRefs<T>& out);

  // node: [nodes, hidden] -> [graphs, hidden]. Throws DataError("EmptyGraph")
  // if any graph has no nodes.
  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> node, const std::vector<int>& node_graph, int graphs,
                     ad::Tensor<T>* weights_out = nullptr);
};

template <typename T>
struct EncoderOutput {
  ad::Var<T> node;   // [nodes, hidden]
  ad::Var<T> graph;  // [graphs, hidden]
};

template <typename T>
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(const EncoderConfig& config, const std::string& prefix, uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  ad::ParameterRefs<T> parameters();

  // Each layer: GATv2 -> ELU -> dropout. Pass rng == nullptr or
  // training == false for a deterministic pass.
  EncoderOutput<T> encode(ad::Tape<T>& tape, const GraphBatch& batch, Rng* rng, bool training);

  // Node embeddings only, skipping the pooling gate.
  ad::Var<T> encode_nodes(ad::Tape<T>& tape, const GraphBatch& batch, Rng* rng, bool training);

  std::vector<GatLayer<T>>& layers() { return layers_; }
  AttentionalPool<T>& pool() { return pool_; }

 private:
  EncoderConfig config_;
  std::vector<GatLayer<T>> layers_;
  AttentionalPool<T> pool_;
};

// Linear hidden -> element classes, scored on masked rows only.
template <typename T>
struct ReconstructionHead {
  ad::Linear<T> proj;

  ReconstructionHead() = default;
  ReconstructionHead(const std::string& name, int64_t hidden) : proj(name, hidden, chem::kElementCount) {}
  void init(Rng& rng) { proj.init(rng); }
  void collect(ad::ParameterRefs<T>& out) { proj.collect(out); }

  // [masked, classes]; throws ShapeError("IndexOutOfRange") on bad indices.
  ad::Var<T> logits(ad::Tape<T>& tape, ad::Var<T> node, const std::vector<int>& masked_rows);
};

// hidden -> hidden/2 (ReLU) -> 2 outputs: (homo, lumo) in eV.
template <typename T>
struct HomoLumoHead {
  ad::Linear<T> hidden_layer;
  ad::Linear<T> out;

  HomoLumoHead() = default;
  HomoLumoHead(const std::string& name, int64_t hidden)
      : hidden_layer(name + ".hidden", hidden, hidden / 2), out(name + ".out", hidden / 2, 2) {}
  void init(Rng& rng) {
    hidden_layer.init(rng);
    out.init(rng);
  }
  void collect(ad::ParameterRefs<T>& refs) {
    hidden_layer.collect(refs);
    out.collect(refs);
  }

  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> graph) {
    return out(tape, ad::relu(hidden_layer(tape, graph)));
  }
};

}  // namespace opv::gnn
