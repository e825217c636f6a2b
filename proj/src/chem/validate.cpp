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

#include "opvforge/chem/validate.hpp"

#include <fmt/format.h>

#include "opvforge/chem/smiles.hpp"

namespace opv::chem {

// Aromatic bonds count one unit each and an aromatic carbon adds one unit for
// its pi bond, i.e. the valence of the least-saturated Kekule assignment.
// Heteroatoms may be pyrrole-like and get no pi unit.
int valence_sum(const MolecularGraph& graph, int atom) {
  const Atom& a = graph.atoms()[atom];
  int total = 0;
  bool has_aromatic_bond = false;
  for (const Neighbor& n : graph.neighbors(atom)) {
    switch (graph.bonds()[n.bond].order) {
      case BondOrder::Single: total += 1; break;
      case BondOrder::Double: total += 2; break;
      case BondOrder::Triple: total += 3; break;
      case BondOrder::Aromatic:
        total += 1;
        has_aromatic_bond = true;
        break;
    }
  }
  if (a.aromatic && has_aromatic_bond && a.element == "C") total += 1;
  return total;
}

int valence_limit(const Atom& atom) {
  int limit = max_valence(atom.element);
  const bool onium = atom.element == "N" || atom.element == "O" || atom.element == "S";
  if (atom.formal_charge > 0 && onium) limit += atom.formal_charge;
  if (atom.formal_charge < 0) limit += atom.formal_charge;
  return limit;
}

ValidityReport validate(const MolecularGraph& graph) {
  ValidityReport report;
  const int n = graph.atom_count();
  if (n < kMinAtoms || n > kMaxAtoms) {
    report.violations.push_back(
        {-1, "size", fmt::format("{} atoms outside [{}, {}]", n, kMinAtoms, kMaxAtoms)});
  }
  for (int i = 0; i < n; ++i) {
    const int sum = valence_sum(graph, i);
    const int limit = valence_limit(graph.atoms()[i]);
    if (sum > limit) report.violations.push_back({i, "valence", fmt::format("{} > {}", sum, limit)});
    if (graph.atoms()[i].aromatic && !graph.in_ring(i)) {
      report.violations.push_back({i, "aromaticity", "aromatic atom outside ring"});
    }
  }
  if (n > 0) {
    const int parts = graph.components();
    if (parts != 1) {
      report.violations.push_back({-1, "connectivity", fmt::format("{} connected components", parts)});
    }
  }
  report.valid = report.violations.empty();
  return report;
}

bool is_valid_smiles(std::string_view smiles) {
  try {
    return validate(parse(smiles)).valid;
  } catch (const SmilesError&) {
    return false;
  }
}

}  // namespace opv::chem
