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

#include "opvforge/chem/wl_hash.hpp"

#include <algorithm>
#include <vector>

#include "opvforge/common/hash.hpp"

namespace opv::chem {

uint64_t atom_seed_color(const Atom& atom) {
  uint64_t h = hash_string(atom.element);
  h = hash_combine(h, atom.aromatic ? 1 : 0);
  h = hash_combine(h, static_cast<uint64_t>(static_cast<int64_t>(atom.formal_charge)));
  return h;
}

namespace {

uint64_t multiset_digest(std::vector<uint64_t> colors) {
  std::sort(colors.begin(), colors.end());
  uint64_t h = hash_combine(0x5a17, colors.size());
  for (uint64_t c : colors) h = hash_combine(h, c);
  return h;
}

}  // namespace

uint64_t wl_hash(const MolecularGraph& graph, int iterations) {
  const int n = graph.atom_count();
  std::vector<uint64_t> colors(n);
  for (int i = 0; i < n; ++i) colors[i] = atom_seed_color(graph.atoms()[i]);
  uint64_t digest = hash_combine(0x0b5f, multiset_digest(colors));
  std::vector<uint64_t> next(n);
  std::vector<uint64_t> around;
  for (int it = 0; it < std::max(1, iterations); ++it) {
    for (int i = 0; i < n; ++i) {
      around.clear();
      for (const Neighbor& nb : graph.neighbors(i)) {
        const auto order = static_cast<uint64_t>(graph.bonds()[nb.bond].order);
        around.push_back(hash_combine(order + 1, colors[nb.atom]));
      }
      std::sort(around.begin(), around.end());
      uint64_t h = hash_combine(colors[i], around.size());
      for (uint64_t a : around) h = hash_combine(h, a);
      next[i] = h;
    }
    colors.swap(next);
    digest = hash_combine(digest, multiset_digest(colors));
  }
  return digest;
}

}  // namespace opv::chem
