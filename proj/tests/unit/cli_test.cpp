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

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "../support/smoke_pipeline.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"

namespace opv::cli {
namespace {

namespace fs = std::filesystem;
using opv::testing::read_text;
using opv::testing::run_cli;
using opv::testing::write_text;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const std::string name = ::testing::UnitTest::GetInstance()->current_test_info()->name();
    dir_ = fs::temp_directory_path() / ("opvforge_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start < text.size()) {
    const size_t end = text.find('\n', start);
    out.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

TEST_F(CliTest, ValidateReportsCounts) {
  write_text(dir_ / "mols.txt", "c1ccccc1\n");
  const auto r = run_cli({"validate", "--in", path("mols.txt")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("1 valid / 0 invalid"), std::string::npos) << r.out;

  write_text(dir_ / "mixed.txt", "CCO\nC(C)(C)(C)(C)C\nc1ccc\n\nc1ccsc1\n");
  const auto m = run_cli({"validate", "--in", path("mixed.txt"), "--out", path("v")});
  EXPECT_EQ(m.code, kExitOk) << m.err;
  EXPECT_NE(m.out.find("2 valid / 2 invalid"), std::string::npos) << m.out;
  EXPECT_TRUE(fs::exists(dir_ / "v" / "validity.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "v" / "config.resolved.json"));
}

TEST_F(CliTest, UsageErrorsExitOneAndPrintSchema) {
  write_text(dir_ / "bad.json", R"({"inptu": "x"})");
  const auto r = run_cli({"validate", "--config", path("bad.json")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("inptu"), std::string::npos);
  EXPECT_NE(r.err.find("\"input\""), std::string::npos) << "schema help missing: " << r.err;

  write_text(dir_ / "broken.json", "{");
  EXPECT_EQ(run_cli({"validate", "--config", path("broken.json")}).code, kExitUsage);
  write_text(dir_ / "type.json", R"({"total_steps": "many"})");
  EXPECT_EQ(run_cli({"rl-run", "--config", path("type.json")}).code, kExitUsage);
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"no-such-command"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"validate"}).code, kExitUsage);  // no input anywhere
  EXPECT_EQ(run_cli({"validate", "--in", path("x"), "--threads", "-2"}).code, kExitUsage);
}

TEST_F(CliTest, MissingFilesAreDataErrors) {
  const auto r = run_cli({"validate", "--config", path("absent.json")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find(path("absent.json")), std::string::npos);
  EXPECT_EQ(run_cli({"validate", "--in", path("absent.txt")}).code, kExitData);
}

TEST_F(CliTest, RlRunWithMissingPredictorNamesThePath) {
  const std::string missing = path("no_predictor");
  write_text(dir_ / "c.json", R"({"prior": ")" + path("no_prior") + R"(", "predictor": ")" + missing +
                                  R"(", "target_smiles": "c1ccsc1", "total_steps": 5, "batch_size": 4})");
  const auto r = run_cli({"rl-run", "--config", path("c.json"), "--out", path("run")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(CliTest, ResolveThreads) {
  EXPECT_EQ(resolve_threads(3, "8"), 3);
  EXPECT_EQ(resolve_threads(0, "8"), 8);
  EXPECT_EQ(resolve_threads(0, nullptr), 1);
  EXPECT_EQ(resolve_threads(0, ""), 1);
  EXPECT_THROW(resolve_threads(0, "eight"), UsageError);
  EXPECT_THROW(resolve_threads(0, "0"), UsageError);
  EXPECT_THROW(resolve_threads(0, "4x"), UsageError);
  EXPECT_THROW(resolve_threads(-1, nullptr), UsageError);
}

TEST_F(CliTest, ReportFromArtifacts) {
  fs::create_directories(dir_ / "run");
  write_text(dir_ / "run" / "trend.csv",
             "step,top1_pce,mean_s,validity_rate,sigma\n0,1.5,0.1,0.5,100\n1,2.5,0.2,0.75,50\n");
  write_text(dir_ / "run" / "memory.csv", "rank,smiles,pce,score,digest\n");
  const auto empty = run_cli({"report", "--in", path("run")});
  EXPECT_EQ(empty.code, kExitOk) << empty.err;
  EXPECT_NE(empty.out.find("no valid candidates"), std::string::npos);
  EXPECT_NE(empty.out.find("| 1 | 2.5 | 0.2 | 0.75 | 50 |"), std::string::npos) << empty.out;

  write_text(dir_ / "run" / "memory.csv",
             "rank,smiles,pce,score,digest\n1,c1ccsc1,9.5,0.38,aa\n2,CCO,7.25,0.29,bb\n");
  const auto full = run_cli({"report", "--in", path("run"), "--out", path("rep")});
  EXPECT_EQ(full.code, kExitOk) << full.err;
  const std::string md = read_text(dir_ / "rep" / "report.md");
  const size_t first = md.find("| 1 | `c1ccsc1` | 9.5 | 0.38 |");
  const size_t second = md.find("| 2 | `CCO` | 7.25 | 0.29 |");
  ASSERT_NE(first, std::string::npos) << md;
  ASSERT_NE(second, std::string::npos) << md;
  EXPECT_LT(first, second);

  fs::remove(dir_ / "run" / "trend.csv");
  const auto missing = run_cli({"report", "--in", path("run")});
  EXPECT_EQ(missing.code, kExitData);
  EXPECT_NE(missing.err.find("MissingArtifact"), std::string::npos);
}

TEST_F(CliTest, SmokePipelineProducesFiftyStepTrend) {
  const auto r = opv::testing::run_smoke_pipeline(dir_, 5);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* stage : {"data", "gnn", "pred", "gen", "run"}) {
    EXPECT_TRUE(fs::exists(dir_ / stage / "config.resolved.json")) << stage;
  }
  const std::vector<std::string> trend = lines_of(read_text(dir_ / "run" / "trend.csv"));
  ASSERT_EQ(trend.size(), 51u);
  EXPECT_EQ(trend.front(), "step,top1_pce,mean_s,validity_rate,sigma");
  EXPECT_EQ(split_csv_line(trend.back()).front(), "49");

  // The report passes the trend through row for row and keeps memory order.
  const auto rep = run_cli({"report", "--in", path("run")});
  ASSERT_EQ(rep.code, kExitOk) << rep.err;
  const std::vector<std::string> md = lines_of(rep.out);
  int trend_rows = 0;
  bool in_trend = false;
  for (const std::string& line : md) {
    if (line == "## Trend") in_trend = true;
    if (line == "## Top candidates") in_trend = false;
    if (in_trend && line.rfind("| ", 0) == 0 && line.rfind("| step", 0) != 0) ++trend_rows;
  }
  EXPECT_EQ(trend_rows, 50);
  const std::vector<std::string> memory = lines_of(read_text(dir_ / "run" / "memory.csv"));
  size_t last = 0;
  for (size_t i = 1; i < memory.size() && i <= 10; ++i) {
    const std::string smiles = split_csv_line(memory[i])[1];
    const size_t at = rep.out.find("`" + smiles + "`", last);
    ASSERT_NE(at, std::string::npos) << smiles;
    last = at;
  }

  // Rerunning from the resolved config reproduces the campaign exactly.
  const std::string before = read_text(dir_ / "run" / "trend.csv");
  const auto again = run_cli({"rl-run", "--config", path("run/config.resolved.json"), "--out", path("rerun")});
  ASSERT_EQ(again.code, kExitOk) << again.err;
  EXPECT_EQ(read_text(dir_ / "rerun" / "trend.csv"), before);
  EXPECT_EQ(read_text(dir_ / "rerun" / "memory.csv"), read_text(dir_ / "run" / "memory.csv"));

  // Fragments of the memory feed the report's fragment table.
  const std::string pairs_before = read_text(dir_ / "data" / "pairs.csv");
  ASSERT_EQ(run_cli({"fragments", "--in", path("run/memory.csv"), "--out", path("run")}).code, kExitOk);
  const auto with_frag = run_cli({"report", "--in", path("run")});
  EXPECT_NE(with_frag.out.find("## Fragments"), std::string::npos);

  write_text(dir_ / "gen.json", R"({"generator": ")" + path("run/agent") + R"(", "predictor": ")" + path("pred") +
                                    R"(", "target_smiles": "c1ccsc1", "samples": 24, "max_new": 30})");
  const auto gen = run_cli({"generate", "--config", path("gen.json"), "--out", path("cand")});
  ASSERT_EQ(gen.code, kExitOk) << gen.err;
  const std::vector<std::string> cand = lines_of(read_text(dir_ / "cand" / "candidates.csv"));
  ASSERT_FALSE(cand.empty());
  EXPECT_EQ(cand.front(), "rank,smiles,pce,score,digest");
  for (size_t i = 2; i < cand.size(); ++i) {
    EXPECT_GE(std::stod(split_csv_line(cand[i - 1])[3]), std::stod(split_csv_line(cand[i])[3]));
  }
  EXPECT_EQ(read_text(dir_ / "data" / "pairs.csv"), pairs_before);
}

TEST_F(CliTest, DataPrepWritesSplits) {
  ASSERT_EQ(run_cli({"synth", "--seed", "3", "--out", path("data")}).code, kExitOk);
  const auto r = run_cli({"data-prep", "--in", path("data/pairs.csv"), "--out", path("prep")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"clean.csv", "rejections.csv", "summary.csv", "train.csv", "val.csv", "test.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "prep" / f)) << f;
  }
  const size_t total = lines_of(read_text(dir_ / "prep" / "clean.csv")).size() - 1;
  size_t split = 0;
  for (const char* f : {"train.csv", "val.csv", "test.csv"}) split += lines_of(read_text(dir_ / "prep" / f)).size() - 1;
  EXPECT_EQ(split, total);
}

}  // namespace
}  // namespace opv::cli
