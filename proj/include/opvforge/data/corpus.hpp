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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opvforge/data/records.hpp"

namespace opv::data {

// Pretraining molecule with optional HOMO/LUMO labels in eV.
struct MoleculeEntry {
  std::string smiles;
  std::optional<double> homo;
  std::optional<double> lumo;
};

// "SMILES[<TAB>homo<TAB>lumo]" per line. Every SMILES must parse and
// validate; errors name the 1-based line.
std::vector<MoleculeEntry> load_molecule_corpus(const std::string& path);
void write_molecule_corpus(const std::string& path, const std::vector<MoleculeEntry>& entries);

// Role of the known (prompt) molecule in a generation pair.
enum class Role { Donor, Acceptor };

std::string_view role_name(Role role);
Role parse_role(std::string_view text);  // "donor" | "acceptor", else DataError
Role counterpart(Role role);

struct PairSequenceEntry {
  Role role = Role::Donor;
  std::string prompt;
  std::string completion;
};

// "role_tag<TAB>prompt<TAB>completion" per line.
std::vector<PairSequenceEntry> load_pair_sequences(const std::string& path);
void write_pair_sequences(const std::string& path, const std::vector<PairSequenceEntry>& entries);

// Two entries per record: donor prompting its acceptor, then the reverse.
std::vector<PairSequenceEntry> pair_sequences_from_records(const std::vector<PairRecord>& records);

}  // namespace opv::data
