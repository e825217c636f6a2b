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
#include <vector>

#include "opvforge/ad/tensor.hpp"
#include "opvforge/chem/molecule.hpp"

namespace opv::gnn {

// Row layout: element one-hot over chem::kElements plus a MASK slot (16),
// aromatic flag (1), formal charge -2..2 clipped (5), degree 0..6 clipped (7),
// ring flag (1).
inline constexpr int kMaskSlot = chem::kElementCount;
inline constexpr int kAromaticSlot = kMaskSlot + 1;
inline constexpr int kChargeOffset = kAromaticSlot + 1;
inline constexpr int kDegreeOffset = kChargeOffset + 5;
inline constexpr int kRingSlot = kDegreeOffset + 7;
inline constexpr int kFeatureWidth = kRingSlot + 1;

// Directed edges src -> dst: both directions of every bond, then one
// self-loop per atom.
struct GraphFeatures {
  ad::Tensor<float> x;  // [atoms, kFeatureWidth]
  std::vector<int> src;
  std::vector<int> dst;
  int atoms = 0;
};

GraphFeatures featurize(const chem::MolecularGraph& graph);

struct MaskedAtoms {
  GraphFeatures features;    // element one-hot of masked rows moved to MASK
  std::vector<int> indices;  // ascending
  std::vector<int> labels;   // true element index per masked atom
};

// Masks k = max(1, round(ratio * atoms)) distinct atoms chosen uniformly
// with the seed.
MaskedAtoms mask_atoms(const GraphFeatures& features, double ratio, uint64_t seed);

// Disjoint union of several graphs; node_graph maps each node to its graph.
struct GraphBatch {
  ad::Tensor<float> x;
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> node_graph;
  std::vector<int> offsets;  // first node of each graph, plus a final total
  int graphs = 0;

  int nodes() const { return offsets.empty() ? 0 : offsets.back(); }
};

GraphBatch batch_graphs(const std::vector<const GraphFeatures*>& parts);

}  // namespace opv::gnn
