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

#include "opvforge/data/records.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/chem/wl_hash.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/hash.hpp"
#include "opvforge/common/random.hpp"

namespace opv::data {

namespace {

constexpr size_t kColumns = 11;

// Empty cell is missing; anything else must be a complete number.
bool parse_number(std::string_view cell, std::optional<double>* out) {
  cell = trim(cell);
  if (cell.empty()) {
    out->reset();
    return true;
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return false;
  *out = v;
  return true;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_fixed(*v) : std::string(); }

std::optional<std::string> molecule_problem(const std::string& smiles, const char* role, std::string* rule) {
  try {
    const chem::ValidityReport report = chem::validate(chem::parse(smiles));
    if (!report.valid) {
      const chem::Violation& v = report.violations.front();
      *rule = "validate";
      return fmt::format("{} {}: atom {} {} ({})", role, smiles, v.atom, v.rule, v.detail);
    }
  } catch (const chem::SmilesError& e) {
    *rule = "parse";
    return fmt::format("{} {}: {}", role, smiles, e.what());
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::pair<std::string, std::string>> check_record(const PairRecord& r) {
  if (!std::isfinite(r.pce) || r.pce < 0.0 || r.pce > 100.0) return {{"pce range", fmt::format("pce {} outside [0, 100]", r.pce)}};
  if (r.jsc && !(*r.jsc >= 0.0)) return {{"jsc range", fmt::format("jsc {} < 0", *r.jsc)}};
  if (r.voc && !(*r.voc >= 0.0)) return {{"voc range", fmt::format("voc {} < 0", *r.voc)}};
  if (r.ff && !(*r.ff >= 0.0 && *r.ff <= 100.0)) return {{"ff range", fmt::format("ff {} outside [0, 100]", *r.ff)}};
  if (r.jsc && r.voc && r.ff) {
    const double implied = *r.jsc * *r.voc * (*r.ff / 100.0);
    const double tolerance = std::max(1.0, 0.15 * r.pce);
    if (std::abs(r.pce - implied) > tolerance) {
      return {{"consistency", fmt::format("pce {} vs jsc*voc*ff {:.4f} (tolerance {:.4f})", r.pce, implied, tolerance)}};
    }
  }
  for (const auto& [smiles, role] : {std::pair{&r.donor_smiles, "donor"}, std::pair{&r.acceptor_smiles, "acceptor"}}) {
    std::string rule;
    if (auto detail = molecule_problem(*smiles, role, &rule)) return {{rule, *detail}};
  }
  return std::nullopt;
}

LoadResult load_pairs(const std::string& path) {
  if (!std::filesystem::exists(path)) throw DataError("MissingFile: " + path);
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || std::string(trim(lines[0])) != kPairHeader) {
    throw DataError("BadHeader: " + path + " must start with '" + kPairHeader + "'");
  }
  LoadResult result;
  for (size_t i = 1; i < lines.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    if (trim(lines[i]).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(lines[i]);
    if (cells.size() != kColumns) {
      result.rejections.push_back({line, "columns", fmt::format("expected {} columns, found {}", kColumns, cells.size())});
      continue;
    }
    PairRecord r;
    r.donor_smiles = std::string(trim(cells[0]));
    r.acceptor_smiles = std::string(trim(cells[1]));
    r.source = cells[10];
    std::optional<double> pce;
    std::optional<double>* numeric[] = {&pce, &r.jsc, &r.voc, &r.ff, &r.donor_homo, &r.donor_lumo, &r.acceptor_homo, &r.acceptor_lumo};
    static constexpr const char* kNames[] = {"pce", "jsc", "voc", "ff", "donor_homo", "donor_lumo", "acceptor_homo", "acceptor_lumo"};
    bool ok = true;
    for (size_t k = 0; k < 8 && ok; ++k) {
      if (!parse_number(cells[k + 2], numeric[k])) {
        result.rejections.push_back({line, "number", fmt::format("{} '{}' is not a number", kNames[k], cells[k + 2])});
        ok = false;
      }
    }
    if (!ok) continue;
    if (!pce) {
      result.rejections.push_back({line, "pce range", "pce is missing"});
      continue;
    }
    r.pce = *pce;
    if (auto problem = check_record(r)) {
      result.rejections.push_back({line, problem->first, problem->second});
      continue;
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

void write_pairs(const std::string& path, const std::vector<PairRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << kPairHeader << '\n';
  for (const PairRecord& r : records) {
    out << join_csv({r.donor_smiles, r.acceptor_smiles, format_fixed(r.pce), optional_cell(r.jsc), optional_cell(r.voc),
                     optional_cell(r.ff), optional_cell(r.donor_homo), optional_cell(r.donor_lumo),
                     optional_cell(r.acceptor_homo), optional_cell(r.acceptor_lumo), r.source})
        << '\n';
  }
}

void write_rejections(const std::string& path, const std::vector<Rejection>& rejections) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << "line,rule,detail\n";
  for (const Rejection& r : rejections) out << join_csv({std::to_string(r.line), r.rule, r.detail}) << '\n';
}

DedupeResult dedupe(const std::vector<PairRecord>& records) {
  std::unordered_map<uint64_t, size_t> slot_of;  // key -> index into kept
  std::vector<PairRecord> kept;
  for (const PairRecord& r : records) {
    uint64_t key = chem::wl_hash(chem::parse(r.donor_smiles));
    key = hash_combine(key, chem::wl_hash(chem::parse(r.acceptor_smiles)));
    auto [it, inserted] = slot_of.emplace(key, kept.size());
    if (inserted) {
      kept.push_back(r);
    } else if (r.pce > kept[it->second].pce) {
      kept[it->second] = r;
    }
  }
  DedupeResult result;
  result.removed = static_cast<int>(records.size() - kept.size());
  result.records = std::move(kept);
  return result;
}

SplitIndices split_indices(size_t n, uint64_t seed) {
  if (n < 10) throw DataError(fmt::format("InsufficientData: {} records, need at least 10", n));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(derive_seed(seed, 0x5e11));
  rng.shuffle(order);
  const size_t n_val = n / 10;
  const size_t n_test = n / 10;
  const size_t n_train = n - n_val - n_test;
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

Split split(const std::vector<PairRecord>& records, uint64_t seed) {
  const SplitIndices idx = split_indices(records.size(), seed);
  Split s;
  for (size_t i : idx.train) s.train.push_back(records[i]);
  for (size_t i : idx.val) s.val.push_back(records[i]);
  for (size_t i : idx.test) s.test.push_back(records[i]);
  return s;
}

DatasetSummary summarize(const std::vector<PairRecord>& records, int bins) {
  DatasetSummary summary;
  summary.record_count = static_cast<int>(records.size());
  using Getter = std::optional<double> (*)(const PairRecord&);
  const std::vector<std::pair<const char*, Getter>> fields = {
      {"pce", [](const PairRecord& r) -> std::optional<double> { return r.pce; }},
      {"jsc", [](const PairRecord& r) { return r.jsc; }},
      {"voc", [](const PairRecord& r) { return r.voc; }},
      {"ff", [](const PairRecord& r) { return r.ff; }},
      {"donor_homo", [](const PairRecord& r) { return r.donor_homo; }},
      {"donor_lumo", [](const PairRecord& r) { return r.donor_lumo; }},
      {"acceptor_homo", [](const PairRecord& r) { return r.acceptor_homo; }},
      {"acceptor_lumo", [](const PairRecord& r) { return r.acceptor_lumo; }},
  };
  for (const auto& [name, get] : fields) {
    std::vector<double> values;
    for (const PairRecord& r : records) {
      if (auto v = get(r)) values.push_back(*v);
    }
    if (values.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
    const double width = (hi - lo) / bins;
    Histogram h;
    h.field = name;
    for (int b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + width * b);
    h.counts.assign(static_cast<size_t>(bins), 0);
    for (double v : values) {
      const int b = std::clamp(static_cast<int>(std::floor((v - lo) / width)), 0, bins - 1);
      ++h.counts[static_cast<size_t>(b)];
    }
    summary.histograms.push_back(std::move(h));
  }
  return summary;
}

void write_summary_csv(const std::string& path, const DatasetSummary& summary) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << "field,bin,lower,upper,count\n";
  for (const Histogram& h : summary.histograms) {
    for (size_t b = 0; b < h.counts.size(); ++b) {
      out << join_csv({h.field, std::to_string(b), format_fixed(h.edges[b]), format_fixed(h.edges[b + 1]),
                       std::to_string(h.counts[b])})
          << '\n';
    }
  }
}

}  // namespace opv::data
