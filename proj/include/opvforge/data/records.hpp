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
#include <optional>
#include <string>
#include <vector>

namespace opv::data {

// One donor/acceptor device entry. PCE and FF are percentages, Jsc mA/cm^2,
// Voc volts, energy levels eV.
struct PairRecord {
  std::string donor_smiles;
  std::string acceptor_smiles;
  double pce = 0.0;
  std::optional<double> jsc;
  std::optional<double> voc;
  std::optional<double> ff;
  std::optional<double> donor_homo;
  std::optional<double> donor_lumo;
  std::optional<double> acceptor_homo;
  std::optional<double> acceptor_lumo;
  std::string source;
};

inline constexpr const char* kPairHeader =
    "donor_smiles,acceptor_smiles,pce,jsc,voc,ff,donor_homo,donor_lumo,acceptor_homo,acceptor_lumo,source";

struct Rejection {
  int line = 0;  // 1-based file line
  std::string rule;
  std::string detail;
};

struct LoadResult {
  std::vector<PairRecord> records;
  std::vector<Rejection> rejections;
};

// First violated record invariant as (rule, detail), or nullopt.
std::optional<std::pair<std::string, std::string>> check_record(const PairRecord& record);

// Throws DataError prefixed "MissingFile" or "BadHeader"; per-row problems
// become rejections.
LoadResult load_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<PairRecord>& records);
void write_rejections(const std::string& path, const std::vector<Rejection>& rejections);

struct DedupeResult {
  std::vector<PairRecord> records;
  int removed = 0;
};

// Duplicates share (wl_hash(donor), wl_hash(acceptor)); the highest PCE
// survives (earliest on ties) and keeps the position of the group's first
// occurrence.
DedupeResult dedupe(const std::vector<PairRecord>& records);

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> val;
  std::vector<size_t> test;
};

// Seeded shuffle, then floor(10%) validation, floor(10%) test and the rest
// train. Throws DataError("InsufficientData ...") below 10 items.
SplitIndices split_indices(size_t n, uint64_t seed);

struct Split {
  std::vector<PairRecord> train;
  std::vector<PairRecord> val;
  std::vector<PairRecord> test;
};

Split split(const std::vector<PairRecord>& records, uint64_t seed);

struct Histogram {
  std::string field;
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;
};

struct DatasetSummary {
  int record_count = 0;
  int dedup_removed = 0;
  std::vector<Histogram> histograms;  // populated fields only
};

DatasetSummary summarize(const std::vector<PairRecord>& records, int bins = 20);

// Long format: field,bin,lower,upper,count.
void write_summary_csv(const std::string& path, const DatasetSummary& summary);

}  // namespace opv::data
