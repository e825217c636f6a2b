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
#include <string>
#include <vector>

#include "opvforge/chem/molecule.hpp"

namespace opv::frag {

struct RingSystem {
  std::vector<int> atoms;  // ascending atom indices
  bool aromatic = false;   // every atom aromatic
  std::string digest;      // wl_hash of the induced subgraph, 16 hex digits

  int size() const { return static_cast<int>(atoms.size()); }
};

// Connected components of the ring-bond subgraph, ordered by smallest atom
// index. Atoms joined only through bridges belong to different systems.
std::vector<RingSystem> ring_systems(const chem::MolecularGraph& graph);

inline constexpr std::array<const char*, 4> kHalogens = {"F", "Cl", "Br", "I"};

struct HalogenStats {
  std::vector<std::array<int, 4>> per_molecule;  // counts in kHalogens order
  std::array<double, 4> mean{};
  std::array<int, 4> max{};
  double mean_total = 0.0;
  int max_total = 0;
  double halogenated_fraction = 0.0;  // molecules with at least one halogen
};

// Throws DataError naming the 1-based molecule index when one fails to parse.
HalogenStats halogen_stats(const std::vector<std::string>& molecules);

enum class FragmentKind { RingSystem, Halogen, RingHeteroatom };
const char* fragment_kind_name(FragmentKind kind);

struct FrequencyRow {
  FragmentKind kind = FragmentKind::RingSystem;
  std::string digest;  // hex WL digest for ring systems, "X-<element>" or "ring-<element>" for markers
  std::string label;   // source substring of the first occurrence, or the element symbol
  int count = 0;       // occurrences over all molecules
  int molecules = 0;   // molecules containing the fragment
  double fraction = 0.0;  // molecules / analysed molecules
};

struct FrequencyTable {
  std::vector<FrequencyRow> rows;  // count descending, digest ascending
  int analysed = 0;                // molecules that parsed
  int skipped = 0;                 // molecules that did not
};

// Ring systems, halogen atoms and N/S/O atoms in aromatic rings, counted per
// molecule and aggregated. Unparseable molecules are skipped; throws
// DataError("EmptyInput") when none parses.
FrequencyTable fragment_frequency(const std::vector<std::string>& molecules);

// One molecule per line, or the smiles column of a CSV whose header names
// one (the rl memory dump). Blank lines are ignored.
std::vector<std::string> read_molecule_list(const std::string& path);

// kind,digest,label,count,molecules,fraction
void write_frequency_csv(const std::string& path, const FrequencyTable& table);

}  // namespace opv::frag
