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

#include "opvforge/chem/molecule.hpp"

namespace opv::chem {

// Initial color of an atom: (element, aromatic, formal charge).
uint64_t atom_seed_color(const Atom& atom);

// Weisfeiler-Lehman digest. Isomorphic graphs hash equal regardless of atom
// order; bond orders label the edges.
uint64_t wl_hash(const MolecularGraph& graph, int iterations = 3);

}  // namespace opv::chem
