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

#include "opvforge/chem/molecule.hpp"

namespace opv::chem {

struct Violation {
  int atom = -1;  // -1 for molecule-level rules
  std::string rule;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

struct ValidityReport {
  bool valid = true;
  std::vector<Violation> violations;
};

inline constexpr int kMinAtoms = 2;
inline constexpr int kMaxAtoms = 400;

// Valence sum of one atom as used by the "valence" rule.
int valence_sum(const MolecularGraph& graph, int atom);

// Charge-adjusted valence limit of one atom.
int valence_limit(const Atom& atom);

ValidityReport validate(const MolecularGraph& graph);

// parse + validate; false on any parse error or violation.
bool is_valid_smiles(std::string_view smiles);

}  // namespace opv::chem
