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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opv::chem {

// Supported element symbols in feature-slot order. "*" is the wildcard
// attachment point used for polymer repeat units.
inline constexpr std::array<std::string_view, 15> kElements = {
    "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I", "Se", "Sn", "H", "*"};

inline constexpr int kElementCount = static_cast<int>(kElements.size());

// Index into kElements, or -1 when the symbol is unsupported.
int element_index(std::string_view symbol);

// Maximum neutral valence used by validate().
int max_valence(std::string_view symbol);

bool is_halogen(std::string_view symbol);

enum class BondOrder : uint8_t { Single, Double, Triple, Aromatic };

// Valence contribution in half units (Aromatic = 3 half units).
int bond_order_half_units(BondOrder order);

struct Atom {
  std::string element;  // canonical capitalization, e.g. "C", "Se"
  bool aromatic = false;
  int formal_charge = 0;
  std::optional<int> explicit_h;
  int index = 0;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;

  int other(int atom) const { return atom == a ? b : a; }
};

struct Neighbor {
  int atom;
  int bond;
};

// Parsed molecule. Adjacency and ring-bond flags are derived on construction
// and kept consistent with the atom and bond lists.
class MolecularGraph {
 public:
  MolecularGraph() = default;
  MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<bool>& ring_bond_flags() const { return ring_bond_flags_; }
  const std::vector<Neighbor>& neighbors(int atom) const { return adjacency_[atom]; }

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  int degree(int atom) const { return static_cast<int>(adjacency_[atom].size()); }

  // Bond index joining a and b, or -1.
  int bond_between(int a, int b) const;

  // True when the atom is an endpoint of at least one ring bond.
  bool in_ring(int atom) const { return ring_atom_flags_[atom]; }

  // Connected component id per atom; returns the number of components.
  int components(std::vector<int>* labels = nullptr) const;

  // Character span [begin, end) of each atom in the source SMILES, when the
  // graph came from parse().
  const std::vector<std::pair<int, int>>& atom_spans() const { return atom_spans_; }
  void set_atom_spans(std::vector<std::pair<int, int>> spans) { atom_spans_ = std::move(spans); }

  // Graph induced by `atom_subset` (indices into this graph), atoms renumbered
  // in subset order.
  MolecularGraph induced_subgraph(const std::vector<int>& atom_subset) const;

  // Same molecule with atom i moved to position perm[i].
  MolecularGraph permuted(const std::vector<int>& perm) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<bool> ring_bond_flags_;
  std::vector<bool> ring_atom_flags_;
  std::vector<std::pair<int, int>> atom_spans_;
};

// Bonds that are not bridges, i.e. lie on at least one cycle.
std::vector<bool> find_ring_bonds(int atom_count, const std::vector<Bond>& bonds);

}  // namespace opv::chem
