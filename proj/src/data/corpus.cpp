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

#include "opvforge/data/corpus.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>

#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"

namespace opv::data {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_energy(std::string_view text, const std::string& where) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("{}: '{}' is not a number", where, text));
  }
  return v;
}

void require_valid(const std::string& smiles, const std::string& where) {
  try {
    const chem::ValidityReport report = chem::validate(chem::parse(smiles));
    if (!report.valid) {
      const chem::Violation& v = report.violations.front();
      throw DataError(fmt::format("{}: invalid molecule {} ({}: {})", where, smiles, v.rule, v.detail));
    }
  } catch (const chem::SmilesError& e) {
    throw DataError(fmt::format("{}: {}", where, e.what()));
  }
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

std::vector<MoleculeEntry> load_molecule_corpus(const std::string& path) {
  std::vector<MoleculeEntry> entries;
  const std::vector<std::string> lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = fmt::format("{} line {}", path, i + 1);
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 1 && fields.size() != 3) {
      throw DataError(where + ": expected SMILES or SMILES<TAB>homo<TAB>lumo");
    }
    MoleculeEntry e;
    e.smiles = std::string(trim(fields[0]));
    require_valid(e.smiles, where);
    if (fields.size() == 3) {
      if (!trim(fields[1]).empty()) e.homo = parse_energy(fields[1], where);
      if (!trim(fields[2]).empty()) e.lumo = parse_energy(fields[2], where);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_molecule_corpus(const std::string& path, const std::vector<MoleculeEntry>& entries) {
  auto out = open_for_write(path);
  for (const MoleculeEntry& e : entries) {
    out << e.smiles;
    if (e.homo || e.lumo) {
      out << '\t' << (e.homo ? format_fixed(*e.homo) : "") << '\t' << (e.lumo ? format_fixed(*e.lumo) : "");
    }
    out << '\n';
  }
}

std::string_view role_name(Role role) { return role == Role::Donor ? "donor" : "acceptor"; }

Role parse_role(std::string_view text) {
  text = trim(text);
  if (text == "donor") return Role::Donor;
  if (text == "acceptor") return Role::Acceptor;
  throw DataError(fmt::format("unknown role '{}' (expected donor or acceptor)", text));
}

Role counterpart(Role role) { return role == Role::Donor ? Role::Acceptor : Role::Donor; }

std::vector<PairSequenceEntry> load_pair_sequences(const std::string& path) {
  std::vector<PairSequenceEntry> entries;
  const std::vector<std::string> lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = fmt::format("{} line {}", path, i + 1);
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 3) throw DataError(where + ": expected role_tag<TAB>prompt<TAB>completion");
    PairSequenceEntry e;
    try {
      e.role = parse_role(fields[0]);
    } catch (const DataError& err) {
      throw DataError(where + ": " + err.what());
    }
    e.prompt = std::string(trim(fields[1]));
    e.completion = std::string(trim(fields[2]));
    require_valid(e.prompt, where);
    require_valid(e.completion, where);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_pair_sequences(const std::string& path, const std::vector<PairSequenceEntry>& entries) {
  auto out = open_for_write(path);
  for (const PairSequenceEntry& e : entries) out << role_name(e.role) << '\t' << e.prompt << '\t' << e.completion << '\n';
}

std::vector<PairSequenceEntry> pair_sequences_from_records(const std::vector<PairRecord>& records) {
  std::vector<PairSequenceEntry> out;
  out.reserve(records.size() * 2);
  for (const PairRecord& r : records) {
    out.push_back({Role::Donor, r.donor_smiles, r.acceptor_smiles});
    out.push_back({Role::Acceptor, r.acceptor_smiles, r.donor_smiles});
  }
  return out;
}

}  // namespace opv::data
