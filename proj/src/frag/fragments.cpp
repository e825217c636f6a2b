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

#include "opvforge/frag/fragments.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/wl_hash.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"

namespace opv::frag {

std::vector<RingSystem> ring_systems(const chem::MolecularGraph& graph) {
  const int n = graph.atom_count();
  const std::vector<bool>& ring_bond = graph.ring_bond_flags();
  std::vector<int> label(static_cast<size_t>(n), -1);
  std::vector<RingSystem> out;
  for (int start = 0; start < n; ++start) {
    if (label[start] >= 0 || !graph.in_ring(start)) continue;
    const int id = static_cast<int>(out.size());
    RingSystem system;
    std::vector<int> stack = {start};
    label[start] = id;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      system.atoms.push_back(a);
      for (const chem::Neighbor& nb : graph.neighbors(a)) {
        if (!ring_bond[static_cast<size_t>(nb.bond)] || label[nb.atom] >= 0) continue;
        label[nb.atom] = id;
        stack.push_back(nb.atom);
      }
    }
    std::sort(system.atoms.begin(), system.atoms.end());
    system.aromatic = std::all_of(system.atoms.begin(), system.atoms.end(),
                                  [&](int a) { return graph.atoms()[a].aromatic; });
    system.digest = fmt::format("{:016x}", chem::wl_hash(graph.induced_subgraph(system.atoms)));
    out.push_back(std::move(system));
  }
  return out;
}

namespace {

int halogen_slot(const std::string& element) {
  for (size_t k = 0; k < kHalogens.size(); ++k) {
    if (element == kHalogens[k]) return static_cast<int>(k);
  }
  return -1;
}

chem::MolecularGraph parse_indexed(const std::string& smiles, size_t index) {
  try {
    return chem::parse(smiles);
  } catch (const DataError& e) {
    throw DataError(fmt::format("molecule {}: {}", index + 1, e.what()));
  }
}

// Source text from the first to the last atom of `atoms`, extended over ring
// closure digits that directly follow the last atom.
std::string source_label(const std::string& smiles, const chem::MolecularGraph& graph, const std::vector<int>& atoms) {
  const auto& spans = graph.atom_spans();
  if (spans.size() != static_cast<size_t>(graph.atom_count()) || atoms.empty()) return {};
  int begin = spans[atoms.front()].first, end = spans[atoms.front()].second;
  for (int a : atoms) {
    begin = std::min(begin, spans[a].first);
    end = std::max(end, spans[a].second);
  }
  while (end < static_cast<int>(smiles.size()) &&
         (std::isdigit(static_cast<unsigned char>(smiles[end])) || smiles[end] == '%')) {
    ++end;
  }
  return smiles.substr(static_cast<size_t>(begin), static_cast<size_t>(end - begin));
}

}  // namespace

HalogenStats halogen_stats(const std::vector<std::string>& molecules) {
  HalogenStats stats;
  int halogenated = 0;
  std::array<long, 4> sums{};
  long total = 0;
  for (size_t i = 0; i < molecules.size(); ++i) {
    const chem::MolecularGraph g = parse_indexed(molecules[i], i);
    std::array<int, 4> counts{};
    for (const chem::Atom& atom : g.atoms()) {
      const int slot = halogen_slot(atom.element);
      if (slot >= 0) ++counts[static_cast<size_t>(slot)];
    }
    int molecule_total = 0;
    for (size_t k = 0; k < 4; ++k) {
      sums[k] += counts[k];
      stats.max[k] = std::max(stats.max[k], counts[k]);
      molecule_total += counts[k];
    }
    total += molecule_total;
    stats.max_total = std::max(stats.max_total, molecule_total);
    if (molecule_total > 0) ++halogenated;
    stats.per_molecule.push_back(counts);
  }
  if (!molecules.empty()) {
    const double n = static_cast<double>(molecules.size());
    for (size_t k = 0; k < 4; ++k) stats.mean[k] = static_cast<double>(sums[k]) / n;
    stats.mean_total = static_cast<double>(total) / n;
    stats.halogenated_fraction = halogenated / n;
  }
  return stats;
}

const char* fragment_kind_name(FragmentKind kind) {
  switch (kind) {
    case FragmentKind::RingSystem:
      return "ring_system";
    case FragmentKind::Halogen:
      return "halogen";
    case FragmentKind::RingHeteroatom:
      return "ring_heteroatom";
  }
  return "?";
}

FrequencyTable fragment_frequency(const std::vector<std::string>& molecules) {
  FrequencyTable table;
  std::map<std::string, FrequencyRow> rows;
  auto add = [&](FragmentKind kind, const std::string& digest, const std::string& label, int count) {
    auto [it, inserted] = rows.try_emplace(digest);
    FrequencyRow& row = it->second;
    if (inserted) {
      row.kind = kind;
      row.digest = digest;
      row.label = label;
    }
    row.count += count;
    ++row.molecules;
  };
  for (const std::string& smiles : molecules) {
    chem::MolecularGraph g;
    try {
      g = chem::parse(smiles);
    } catch (const DataError&) {
      ++table.skipped;
      continue;
    }
    ++table.analysed;
    std::map<std::string, std::pair<std::string, int>> systems;  // digest -> (label, occurrences)
    for (const RingSystem& system : ring_systems(g)) {
      auto [it, inserted] = systems.try_emplace(system.digest, source_label(smiles, g, system.atoms), 0);
      ++it->second.second;
    }
    for (const auto& [digest, entry] : systems) add(FragmentKind::RingSystem, digest, entry.first, entry.second);

    std::map<std::string, int> halogens, heteroatoms;
    for (const chem::Atom& atom : g.atoms()) {
      if (halogen_slot(atom.element) >= 0) ++halogens[atom.element];
      if (atom.aromatic && g.in_ring(atom.index) && (atom.element == "N" || atom.element == "S" || atom.element == "O")) {
        ++heteroatoms[atom.element];
      }
    }
    for (const auto& [element, count] : halogens) add(FragmentKind::Halogen, "X-" + element, element, count);
    for (const auto& [element, count] : heteroatoms) {
      add(FragmentKind::RingHeteroatom, "ring-" + element, element, count);
    }
  }
  if (table.analysed == 0) throw DataError("EmptyInput: no molecule could be parsed");
  for (auto& [digest, row] : rows) {
    row.fraction = static_cast<double>(row.molecules) / static_cast<double>(table.analysed);
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const FrequencyRow& a, const FrequencyRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.digest < b.digest;
  });
  return table;
}

std::vector<std::string> read_molecule_list(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<std::string> out;
  int column = -1;
  size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first < lines.size() && lines[first].find(',') != std::string::npos) {
    const std::vector<std::string> header = split_csv_line(trim(lines[first]));
    for (size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "smiles") column = static_cast<int>(c);
    }
    if (column < 0) throw DataError(path + ": CSV header has no smiles column");
    ++first;
  }
  for (size_t i = first; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    if (column < 0) {
      out.emplace_back(line);
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) <= column) {
      throw DataError(fmt::format("{}:{}: expected at least {} fields", path, i + 1, column + 1));
    }
    out.push_back(fields[static_cast<size_t>(column)]);
  }
  return out;
}

void write_frequency_csv(const std::string& path, const FrequencyTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "kind,digest,label,count,molecules,fraction\n";
  for (const FrequencyRow& row : table.rows) {
    out << join_csv({fragment_kind_name(row.kind), row.digest, row.label, std::to_string(row.count),
                     std::to_string(row.molecules), format_fixed(row.fraction)})
        << '\n';
  }
}

}  // namespace opv::frag
