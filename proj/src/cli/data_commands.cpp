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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "commands.hpp"
#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/json_util.hpp"
#include "opvforge/common/random.hpp"
#include "opvforge/data/corpus.hpp"
#include "opvforge/data/records.hpp"
#include "opvforge/data/synth.hpp"
#include "opvforge/frag/fragments.hpp"

namespace opv::data {

void to_json(nlohmann::json& j, const SyntheticPce& p) {
  j = {{"base", p.base},
       {"aromatic_weight", p.aromatic_weight},
       {"halogen_weight", p.halogen_weight},
       {"noise", p.noise},
       {"cap", p.cap}};
}

void from_json(const nlohmann::json& j, SyntheticPce& p) {
  reject_unknown_keys(j, {"base", "aromatic_weight", "halogen_weight", "noise", "cap"}, "synthetic pce");
  read_optional(j, "base", p.base);
  read_optional(j, "aromatic_weight", p.aromatic_weight);
  read_optional(j, "halogen_weight", p.halogen_weight);
  read_optional(j, "noise", p.noise);
  read_optional(j, "cap", p.cap);
}

}  // namespace opv::data

namespace opv::cli {

namespace fs = std::filesystem;

namespace {

struct InputConfig {
  std::string input;
};

void to_json(nlohmann::json& j, const InputConfig& c) { j = {{"input", c.input}}; }

InputConfig read_input_config(const nlohmann::json& j, const std::string& context) {
  reject_unknown_keys(j, {"input"}, context);
  InputConfig c;
  read_optional(j, "input", c.input);
  return c;
}

struct SynthConfig {
  uint64_t seed = 0;
  int pairs = 500;
  int molecules = 200;
  data::SyntheticPce pce;
};

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"seed", c.seed}, {"pairs", c.pairs}, {"molecules", c.molecules}, {"pce", c.pce}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  reject_unknown_keys(j, {"seed", "pairs", "molecules", "pce"}, "synth config");
  read_optional(j, "seed", c.seed);
  read_optional(j, "pairs", c.pairs);
  read_optional(j, "molecules", c.molecules);
  read_optional(j, "pce", c.pce);
}

struct DataPrepConfig {
  std::string input;
  uint64_t split_seed = 0;
  int bins = 20;
};

void to_json(nlohmann::json& j, const DataPrepConfig& c) {
  j = {{"input", c.input}, {"split_seed", c.split_seed}, {"bins", c.bins}};
}

void from_json(const nlohmann::json& j, DataPrepConfig& c) {
  reject_unknown_keys(j, {"input", "split_seed", "bins"}, "data-prep config");
  read_optional(j, "input", c.input);
  read_optional(j, "split_seed", c.split_seed);
  read_optional(j, "bins", c.bins);
}

std::vector<std::vector<std::string>> read_csv_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("MissingArtifact: " + path.string());
  std::vector<std::vector<std::string>> rows;
  for (const std::string& line : read_lines(path.string())) {
    if (!trim(line).empty()) rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw DataError("MissingArtifact: " + path.string() + " has no header");
  return rows;
}

void markdown_table(std::ostream& md, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  md << '|';
  for (const std::string& h : header) md << ' ' << h << " |";
  md << "\n|";
  for (size_t i = 0; i < header.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& row : rows) {
    md << '|';
    for (const std::string& cell : row) md << ' ' << cell << " |";
    md << '\n';
  }
}

// Columns of `rows` (header first) in the order of `names`.
std::vector<std::vector<std::string>> select_columns(const std::vector<std::vector<std::string>>& rows,
                                                     const std::vector<std::string>& names, const fs::path& path,
                                                     size_t limit = SIZE_MAX) {
  std::vector<size_t> idx;
  for (const std::string& name : names) {
    const auto it = std::find(rows[0].begin(), rows[0].end(), name);
    if (it == rows[0].end()) throw DataError(fmt::format("{}: missing column {}", path.string(), name));
    idx.push_back(static_cast<size_t>(it - rows[0].begin()));
  }
  std::vector<std::vector<std::string>> out;
  for (size_t r = 1; r < rows.size() && out.size() < limit; ++r) {
    std::vector<std::string> cells;
    for (size_t i : idx) {
      if (i >= rows[r].size()) throw DataError(fmt::format("{}:{}: short row", path.string(), r + 1));
      cells.push_back(rows[r][i]);
    }
    out.push_back(std::move(cells));
  }
  return out;
}

}  // namespace

nlohmann::json data_command_defaults(const std::string& command) {
  if (command == "validate" || command == "fragments" || command == "report") return InputConfig{};
  if (command == "synth") return SynthConfig{};
  if (command == "data-prep") return DataPrepConfig{};
  return nullptr;
}

void cmd_validate(const Invocation& inv) {
  InputConfig c = read_input_config(inv.config, "validate config");
  c.input = input_path(inv, c.input);
  const std::vector<std::string> lines = read_lines(c.input);
  int valid = 0, invalid = 0;
  std::vector<std::string> csv_rows;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string smiles(trim(lines[i]));
    if (smiles.empty()) continue;
    std::string reason;
    try {
      const chem::ValidityReport report = chem::validate(chem::parse(smiles));
      if (!report.valid) reason = report.violations.front().rule + ": " + report.violations.front().detail;
    } catch (const DataError& e) {
      reason = e.what();
    }
    reason.empty() ? ++valid : ++invalid;
    csv_rows.push_back(join_csv({std::to_string(i + 1), smiles, reason.empty() ? "1" : "0", reason}));
  }
  *inv.out << valid << " valid / " << invalid << " invalid\n";
  if (!inv.out_dir.empty()) {
    require_out_dir(inv);
    std::ofstream out(out_path(inv, "validity.csv"));
    out << "line,smiles,valid,reason\n";
    for (const std::string& row : csv_rows) out << row << '\n';
    write_resolved_config(inv, c);
  }
}

void cmd_synth(const Invocation& inv) {
  SynthConfig c = inv.config.get<SynthConfig>();
  if (inv.seed) c.seed = *inv.seed;
  if (c.pairs < 1 || c.molecules < 1) throw UsageError("synth needs pairs >= 1 and molecules >= 1");
  require_out_dir(inv);
  const std::vector<data::PairRecord> pairs = data::synth_pairs(c.seed, c.pairs, c.pce);
  data::write_pairs(out_path(inv, "pairs.csv"), pairs);
  data::write_pair_sequences(out_path(inv, "sequences.tsv"), data::pair_sequences_from_records(pairs));
  data::write_molecule_corpus(out_path(inv, "molecules.tsv"),
                              data::synth_molecule_corpus(derive_seed(c.seed, 1), c.molecules));
  write_resolved_config(inv, c);
  *inv.out << fmt::format("wrote {} pairs, {} pair sequences and {} molecules to {}\n", pairs.size(),
                          2 * pairs.size(), c.molecules, inv.out_dir);
}

void cmd_data_prep(const Invocation& inv) {
  DataPrepConfig c = inv.config.get<DataPrepConfig>();
  c.input = input_path(inv, c.input);
  if (inv.seed) c.split_seed = *inv.seed;
  if (c.bins < 1) throw UsageError("bins must be positive");
  require_out_dir(inv);
  const data::LoadResult loaded = data::load_pairs(c.input);
  data::write_rejections(out_path(inv, "rejections.csv"), loaded.rejections);
  const data::DedupeResult deduped = data::dedupe(loaded.records);
  data::write_pairs(out_path(inv, "clean.csv"), deduped.records);
  data::DatasetSummary summary = data::summarize(deduped.records, c.bins);
  summary.dedup_removed = deduped.removed;
  data::write_summary_csv(out_path(inv, "summary.csv"), summary);
  if (deduped.records.size() >= 10) {
    const data::Split s = data::split(deduped.records, c.split_seed);
    data::write_pairs(out_path(inv, "train.csv"), s.train);
    data::write_pairs(out_path(inv, "val.csv"), s.val);
    data::write_pairs(out_path(inv, "test.csv"), s.test);
    *inv.out << fmt::format("split {}/{}/{} (train/val/test)\n", s.train.size(), s.val.size(), s.test.size());
  } else {
    *inv.out << "fewer than 10 records after deduplication; no split written\n";
  }
  write_resolved_config(inv, c);
  *inv.out << fmt::format("{} accepted, {} rejected, {} duplicates removed, {} kept\n", loaded.records.size(),
                          loaded.rejections.size(), deduped.removed, deduped.records.size());
}

void cmd_fragments(const Invocation& inv) {
  InputConfig c = read_input_config(inv.config, "fragments config");
  c.input = input_path(inv, c.input);
  require_out_dir(inv);
  const std::vector<std::string> molecules = frag::read_molecule_list(c.input);
  const frag::FrequencyTable table = frag::fragment_frequency(molecules);
  frag::write_frequency_csv(out_path(inv, "frequency.csv"), table);

  std::vector<std::string> parsed;
  for (const std::string& m : molecules) {
    if (chem::is_valid_smiles(m)) parsed.push_back(m);
  }
  const frag::HalogenStats halogens = frag::halogen_stats(parsed);
  std::ofstream out(out_path(inv, "halogens.csv"));
  out << "element,mean,max\n";
  for (size_t k = 0; k < frag::kHalogens.size(); ++k) {
    out << join_csv({frag::kHalogens[k], format_fixed(halogens.mean[k]), std::to_string(halogens.max[k])}) << '\n';
  }
  out << join_csv({"any", format_fixed(halogens.mean_total), std::to_string(halogens.max_total)}) << '\n';
  write_resolved_config(inv, c);
  *inv.out << fmt::format("{} molecules analysed, {} skipped, {} fragment rows, {} halogenated\n", table.analysed,
                          table.skipped, table.rows.size(), format_fixed(halogens.halogenated_fraction, 4));
}

void cmd_report(const Invocation& inv) {
  InputConfig c = read_input_config(inv.config, "report config");
  c.input = input_path(inv, c.input);
  const fs::path run(c.input);
  if (!fs::is_directory(run)) throw DataError("MissingArtifact: run directory " + run.string());
  const auto trend = read_csv_artifact(run / "trend.csv");
  const auto memory = read_csv_artifact(run / "memory.csv");

  std::ostringstream md;
  md << "# Campaign report\n\n## Trend\n\n";
  markdown_table(md, {"step", "top-1 PCE", "mean s", "validity", "sigma"},
                 select_columns(trend, {"step", "top1_pce", "mean_s", "validity_rate", "sigma"}, run / "trend.csv"));
  md << "\n## Top candidates\n\n";
  const auto top = select_columns(memory, {"rank", "smiles", "pce", "score"}, run / "memory.csv", 10);
  if (top.empty()) {
    md << "no valid candidates\n";
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : top) rows.push_back({r[0], "`" + r[1] + "`", r[2], r[3]});
    markdown_table(md, {"rank", "SMILES", "predicted PCE", "score"}, rows);
  }
  if (fs::exists(run / "frequency.csv")) {
    md << "\n## Fragments\n\n";
    const auto freq = read_csv_artifact(run / "frequency.csv");
    markdown_table(md, {"kind", "label", "count", "fraction"},
                   select_columns(freq, {"kind", "label", "count", "fraction"}, run / "frequency.csv"));
  }
  if (inv.out_dir.empty()) {
    *inv.out << md.str();
    return;
  }
  require_out_dir(inv);
  std::ofstream out(out_path(inv, "report.md"));
  out << md.str();
  write_resolved_config(inv, c);
  *inv.out << "wrote " << out_path(inv, "report.md") << '\n';
}

}  // namespace opv::cli
