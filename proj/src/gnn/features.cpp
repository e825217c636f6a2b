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

#include "opvforge/gnn/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "opvforge/common/error.hpp"
#include "opvforge/common/random.hpp"

namespace opv::gnn {

GraphFeatures featurize(const chem::MolecularGraph& graph) {
  GraphFeatures f;
  f.atoms = graph.atom_count();
  f.x = ad::Tensor<float>({f.atoms, kFeatureWidth});
  for (int i = 0; i < f.atoms; ++i) {
    const chem::Atom& a = graph.atoms()[i];
    const int element = chem::element_index(a.element);
    if (element < 0) throw DataError("UnsupportedElement: " + a.element);
    f.x(i, element) = 1.0f;
    if (a.aromatic) f.x(i, kAromaticSlot) = 1.0f;
    f.x(i, kChargeOffset + std::clamp(a.formal_charge, -2, 2) + 2) = 1.0f;
    f.x(i, kDegreeOffset + std::min(graph.degree(i), 6)) = 1.0f;
    if (graph.in_ring(i)) f.x(i, kRingSlot) = 1.0f;
  }
  for (const chem::Bond& b : graph.bonds()) {
    f.src.push_back(b.a);
    f.dst.push_back(b.b);
    f.src.push_back(b.b);
    f.dst.push_back(b.a);
  }
  for (int i = 0; i < f.atoms; ++i) {
    f.src.push_back(i);
    f.dst.push_back(i);
  }
  return f;
}

MaskedAtoms mask_atoms(const GraphFeatures& features, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("mask ratio must lie in (0, 1)");
  if (features.atoms < 1) throw DataError("cannot mask an empty graph");
  const int n = features.atoms;
  const int k = std::max(1, static_cast<int>(std::lround(ratio * n)));
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
    std::swap(order[i], order[j]);
  }
  MaskedAtoms m;
  m.features = features;
  m.indices.assign(order.begin(), order.begin() + k);
  std::sort(m.indices.begin(), m.indices.end());
  for (int atom : m.indices) {
    int label = -1;
    for (int e = 0; e < chem::kElementCount; ++e) {
      if (m.features.x(atom, e) != 0.0f) label = e;
      m.features.x(atom, e) = 0.0f;
    }
    m.features.x(atom, kMaskSlot) = 1.0f;
    m.labels.push_back(label);
  }
  return m;
}

GraphBatch batch_graphs(const std::vector<const GraphFeatures*>& parts) {
  GraphBatch b;
  b.graphs = static_cast<int>(parts.size());
  int total = 0;
  for (const GraphFeatures* p : parts) {
    b.offsets.push_back(total);
    total += p->atoms;
  }
  b.offsets.push_back(total);
  b.x = ad::Tensor<float>({total, kFeatureWidth});
  for (int g = 0; g < b.graphs; ++g) {
    const GraphFeatures& p = *parts[static_cast<size_t>(g)];
    const int off = b.offsets[static_cast<size_t>(g)];
    std::copy(p.x.vec().begin(), p.x.vec().end(), b.x.data() + static_cast<int64_t>(off) * kFeatureWidth);
    for (size_t e = 0; e < p.src.size(); ++e) {
      b.src.push_back(p.src[e] + off);
      b.dst.push_back(p.dst[e] + off);
    }
    b.node_graph.insert(b.node_graph.end(), static_cast<size_t>(p.atoms), g);
  }
  return b;
}

}  // namespace opv::gnn
