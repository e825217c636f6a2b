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

#include "opvforge/chem/descriptors.hpp"

namespace opv::chem {

double aromatic_fraction(const MolecularGraph& graph) {
  if (graph.atom_count() == 0) return 0.0;
  int aromatic = 0;
  for (const Atom& a : graph.atoms()) aromatic += a.aromatic ? 1 : 0;
  return static_cast<double>(aromatic) / graph.atom_count();
}

int halogen_count(const MolecularGraph& graph) {
  int n = 0;
  for (const Atom& a : graph.atoms()) n += is_halogen(a.element) ? 1 : 0;
  return n;
}

}  // namespace opv::chem
