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

#include "opvforge/chem/molecule.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace opv::chem {

int element_index(std::string_view symbol) {
  for (int i = 0; i < kElementCount; ++i) {
    if (kElements[i] == symbol) return i;
  }
  return -1;
}

int max_valence(std::string_view symbol) {
  static constexpr std::array<int, kElementCount> kValence = {
      3, 4, 3, 2, 1, 4, 5, 6, 1, 1, 1, 6, 4, 1, 8};
  const int idx = element_index(symbol);
  if (idx < 0) throw std::invalid_argument("unsupported element: " + std::string(symbol));
  return kValence[idx];
}

bool is_halogen(std::string_view symbol) {
  return symbol == "F" || symbol == "Cl" || symbol == "Br" || symbol == "I";
}

int bond_order_half_units(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 2;
    case BondOrder::Double: return 4;
    case BondOrder::Triple: return 6;
    case BondOrder::Aromatic: return 3;
  }
  return 2;
}

std::vector<bool> find_ring_bonds(int atom_count, const std::vector<Bond>& bonds) {
  std::vector<std::vector<Neighbor>> adj(atom_count);
  for (int i = 0; i < static_cast<int>(bonds.size()); ++i) {
    adj[bonds[i].a].push_back({bonds[i].b, i});
    adj[bonds[i].b].push_back({bonds[i].a, i});
  }
  // Iterative Tarjan bridge finding.
  std::vector<int> disc(atom_count, -1), low(atom_count, 0);
  std::vector<bool> is_bridge(bonds.size(), false);
  int timer = 0;
  struct Frame {
    int atom;
    int parent_bond;
    size_t next;
  };
  for (int root = 0; root < atom_count; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.atom].size()) {
        const Neighbor n = adj[f.atom][f.next++];
        if (n.bond == f.parent_bond) continue;
        if (disc[n.atom] < 0) {
          disc[n.atom] = low[n.atom] = timer++;
          stack.push_back({n.atom, n.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[n.atom]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const int parent = stack.back().atom;
          low[parent] = std::min(low[parent], low[done.atom]);
          if (low[done.atom] > disc[parent]) is_bridge[done.parent_bond] = true;
        }
      }
    }
  }
  std::vector<bool> ring(bonds.size());
  for (size_t i = 0; i < bonds.size(); ++i) ring[i] = !is_bridge[i];
  return ring;
}

MolecularGraph::MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  const int n = atom_count();
  adjacency_.assign(n, {});
  for (int i = 0; i < n; ++i) atoms_[i].index = i;
  for (int i = 0; i < static_cast<int>(bonds_.size()); ++i) {
    const Bond& b = bonds_[i];
    if (b.a < 0 || b.b < 0 || b.a >= n || b.b >= n) {
      throw std::invalid_argument("bond endpoint out of range");
    }
    if (b.a == b.b) throw std::invalid_argument("self bond");
    adjacency_[b.a].push_back({b.b, i});
    adjacency_[b.b].push_back({b.a, i});
  }
  ring_bond_flags_ = find_ring_bonds(n, bonds_);
  ring_atom_flags_.assign(n, false);
  for (size_t i = 0; i < bonds_.size(); ++i) {
    if (ring_bond_flags_[i]) {
      ring_atom_flags_[bonds_[i].a] = true;
      ring_atom_flags_[bonds_[i].b] = true;
    }
  }
}

int MolecularGraph::bond_between(int a, int b) const {
  for (const Neighbor& n : adjacency_[a]) {
    if (n.atom == b) return n.bond;
  }
  return -1;
}

int MolecularGraph::components(std::vector<int>* labels) const {
  std::vector<int> comp(atoms_.size(), -1);
  int count = 0;
  for (int s = 0; s < atom_count(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = count;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const Neighbor& n : adjacency_[u]) {
        if (comp[n.atom] < 0) {
          comp[n.atom] = count;
          stack.push_back(n.atom);
        }
      }
    }
    ++count;
  }
  if (labels) *labels = std::move(comp);
  return count;
}

MolecularGraph MolecularGraph::induced_subgraph(const std::vector<int>& atom_subset) const {
  std::vector<int> remap(atoms_.size(), -1);
  std::vector<Atom> atoms;
  for (int i = 0; i < static_cast<int>(atom_subset.size()); ++i) {
    remap[atom_subset[i]] = i;
    atoms.push_back(atoms_[atom_subset[i]]);
  }
  std::vector<Bond> bonds;
  for (const Bond& b : bonds_) {
    if (remap[b.a] >= 0 && remap[b.b] >= 0) bonds.push_back({remap[b.a], remap[b.b], b.order});
  }
  return MolecularGraph(std::move(atoms), std::move(bonds));
}

MolecularGraph MolecularGraph::permuted(const std::vector<int>& perm) const {
  std::vector<Atom> atoms(atoms_.size());
  for (size_t i = 0; i < atoms_.size(); ++i) atoms[perm[i]] = atoms_[i];
  std::vector<Bond> bonds;
  for (const Bond& b : bonds_) bonds.push_back({perm[b.a], perm[b.b], b.order});
  return MolecularGraph(std::move(atoms), std::move(bonds));
}

}  // namespace opv::chem
