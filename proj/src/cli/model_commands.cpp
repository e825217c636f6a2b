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

#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "commands.hpp"
#include "opvforge/baseline/config_json.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/common/csv.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/json_util.hpp"
#include "opvforge/common/random.hpp"
#include "opvforge/data/corpus.hpp"
#include "opvforge/data/metrics.hpp"
#include "opvforge/data/records.hpp"
#include "opvforge/gen/config_json.hpp"
#include "opvforge/gen/pretrain.hpp"
#include "opvforge/gnn/config_json.hpp"
#include "opvforge/gnn/pretrain.hpp"
#include "opvforge/predictor/config_json.hpp"
#include "opvforge/predictor/predictor.hpp"

namespace opv::cli {

namespace fs = std::filesystem;

namespace {

struct GnnCommandConfig {
  std::string input;  // molecule corpus, "SMILES[<TAB>homo<TAB>lumo]" per line
  gnn::PretrainConfig pretrain;
};

void to_json(nlohmann::json& j, const GnnCommandConfig& c) { j = {{"input", c.input}, {"pretrain", c.pretrain}}; }

void from_json(const nlohmann::json& j, GnnCommandConfig& c) {
  reject_unknown_keys(j, {"input", "pretrain"}, "pretrain-gnn config");
  read_optional(j, "input", c.input);
  read_optional(j, "pretrain", c.pretrain);
}

struct PredictorCommandConfig {
  std::string input;  // pair CSV
  predictor::TrainConfig train;
};

void to_json(nlohmann::json& j, const PredictorCommandConfig& c) { j = {{"input", c.input}, {"train", c.train}}; }

void from_json(const nlohmann::json& j, PredictorCommandConfig& c) {
  reject_unknown_keys(j, {"input", "train"}, "train-predictor config");
  read_optional(j, "input", c.input);
  read_optional(j, "train", c.train);
}

struct BaselineCommandConfig {
  std::string input;
  uint64_t split_seed = 0;
  baseline::FingerprintConfig fingerprint;
  baseline::ForestConfig forest;
};

void to_json(nlohmann::json& j, const BaselineCommandConfig& c) {
  j = {{"input", c.input}, {"split_seed", c.split_seed}, {"fingerprint", c.fingerprint}, {"forest", c.forest}};
}

void from_json(const nlohmann::json& j, BaselineCommandConfig& c) {
  reject_unknown_keys(j, {"input", "split_seed", "fingerprint", "forest"}, "train-baseline config");
  read_optional(j, "input", c.input);
  read_optional(j, "split_seed", c.split_seed);
  read_optional(j, "fingerprint", c.fingerprint);
  read_optional(j, "forest", c.forest);
}

struct GenCommandConfig {
  std::string input;  // pair CSV (.csv) or pair-sequence file
  gen::PretrainConfig pretrain;
  int eval_samples = 0;  // completions sampled after training to measure validity
  int eval_max_new = 128;
};

void to_json(nlohmann::json& j, const GenCommandConfig& c) {
  j = {{"input", c.input}, {"pretrain", c.pretrain}, {"eval_samples", c.eval_samples}, {"eval_max_new", c.eval_max_new}};
}

void from_json(const nlohmann::json& j, GenCommandConfig& c) {
  reject_unknown_keys(j, {"input", "pretrain", "eval_samples", "eval_max_new"}, "pretrain-gen config");
  read_optional(j, "input", c.input);
  read_optional(j, "pretrain", c.pretrain);
  read_optional(j, "eval_samples", c.eval_samples);
  read_optional(j, "eval_max_new", c.eval_max_new);
}

// Loads a pair CSV and fails on any rejected row, so training never
// silently drops data.
std::vector<data::PairRecord> load_clean_pairs(const std::string& path) {
  data::LoadResult loaded = data::load_pairs(path);
  if (!loaded.rejections.empty()) {
    const data::Rejection& r = loaded.rejections.front();
    throw DataError(fmt::format("{}: {} rejected rows, first at line {} ({}: {}); run data-prep first", path,
                                loaded.rejections.size(), r.line, r.rule, r.detail));
  }
  return std::move(loaded.records);
}

std::ofstream open_csv(const std::string& path, const char* header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << header << '\n';
  return out;
}

}  // namespace

nlohmann::json model_command_defaults(const std::string& command) {
  if (command == "pretrain-gnn") return GnnCommandConfig{};
  if (command == "train-predictor") return PredictorCommandConfig{};
  if (command == "train-baseline") return BaselineCommandConfig{};
  if (command == "pretrain-gen") return GenCommandConfig{};
  return nullptr;
}

void cmd_pretrain_gnn(const Invocation& inv) {
  GnnCommandConfig c = inv.config.get<GnnCommandConfig>();
  c.input = input_path(inv, c.input);
  if (inv.seed) c.pretrain.seed = *inv.seed;
  c.pretrain.check();
  require_out_dir(inv);
  gnn::EncoderPretrainer trainer(c.pretrain, data::load_molecule_corpus(c.input));
  std::ofstream csv = open_csv(out_path(inv, "history.csv"), "epoch,reconstruction,homo_lumo,mask_accuracy,lr");
  trainer.run([&](const gnn::EpochLosses& e) {
    csv << join_csv({std::to_string(e.epoch), format_fixed(e.reconstruction), format_fixed(e.homo_lumo),
                     format_fixed(e.mask_accuracy), format_fixed(e.lr, 8)})
        << '\n';
    *inv.out << fmt::format("epoch {:3d}  reconstruction {:.4f}  homo/lumo {:.4f}  mask acc {:.3f}\n", e.epoch,
                            e.reconstruction, e.homo_lumo, e.mask_accuracy);
  });
  trainer.save(inv.out_dir);
  write_resolved_config(inv, c);
}

void cmd_train_predictor(const Invocation& inv) {
  PredictorCommandConfig c = inv.config.get<PredictorCommandConfig>();
  c.input = input_path(inv, c.input);
  if (inv.seed) c.train.seed = *inv.seed;
  c.train.check();
  require_out_dir(inv);
  const std::vector<data::PairRecord> records = load_clean_pairs(c.input);
  predictor::PairPredictor<float> model(c.train.model, c.train.seed);
  std::ofstream csv = open_csv(out_path(inv, "epochs.csv"), "epoch,train_mse,val_mse,lr");
  const predictor::TrainResult result =
      predictor::train_predictor(model, records, c.train, [&](const data::EpochMetrics& e) {
        csv << join_csv({std::to_string(e.epoch), format_fixed(e.train_mse), format_fixed(e.val_mse),
                         format_fixed(e.lr, 8)})
            << '\n';
        *inv.out << fmt::format("epoch {:3d}  train {:.4f}  val {:.4f}\n", e.epoch, e.train_mse, e.val_mse);
      });
  predictor::save_predictor(inv.out_dir, model);
  data::write_report_json(out_path(inv, "report.json"), result.report);
  write_resolved_config(inv, c);
  *inv.out << fmt::format("best epoch {}: train {:.4f}  val {:.4f}  test {:.4f}\n", result.report.best_epoch,
                          result.report.train_mse, result.report.val_mse, result.report.test_mse);
}

void cmd_train_baseline(const Invocation& inv) {
  BaselineCommandConfig c = inv.config.get<BaselineCommandConfig>();
  c.input = input_path(inv, c.input);
  if (inv.seed) c.forest.seed = *inv.seed;
  c.fingerprint.check();
  c.forest.check();
  require_out_dir(inv);
  const baseline::BaselineResult result =
      baseline::baseline_evaluate(load_clean_pairs(c.input), c.split_seed, c.fingerprint, c.forest);
  data::write_report_json(out_path(inv, "report.json"), result.report);
  write_resolved_config(inv, c);
  *inv.out << fmt::format("forest: train {:.4f}  val {:.4f}  test {:.4f}\n", result.report.train_mse,
                          result.report.val_mse, result.report.test_mse);
}

void cmd_pretrain_gen(const Invocation& inv) {
  GenCommandConfig c = inv.config.get<GenCommandConfig>();
  c.input = input_path(inv, c.input);
  if (inv.seed) c.pretrain.seed = *inv.seed;
  c.pretrain.check();
  if (c.eval_samples < 0 || c.eval_max_new < 1) throw UsageError("eval_samples >= 0 and eval_max_new >= 1 required");
  require_out_dir(inv);

  const std::vector<data::PairSequenceEntry> entries =
      fs::path(c.input).extension() == ".csv" ? data::pair_sequences_from_records(load_clean_pairs(c.input))
                                              : data::load_pair_sequences(c.input);
  std::vector<std::string> smiles;
  for (const data::PairSequenceEntry& e : entries) {
    smiles.push_back(e.prompt);
    smiles.push_back(e.completion);
  }
  const chem::Vocabulary vocab = gen::generator_vocabulary(smiles);
  const std::vector<std::vector<int>> sequences = gen::encode_corpus(vocab, entries, c.pretrain.model.max_length);
  gen::Generator<float> model(c.pretrain.model, vocab, c.pretrain.seed);
  std::ofstream csv = open_csv(out_path(inv, "perplexity.csv"), "epoch,loss,perplexity,lr");
  gen::pretrain_generator(model, sequences, c.pretrain, [&](const gen::EpochPerplexity& e) {
    csv << join_csv({std::to_string(e.epoch), format_fixed(e.loss), format_fixed(e.perplexity), format_fixed(e.lr, 8)})
        << '\n';
    *inv.out << fmt::format("epoch {:3d}  loss {:.4f}  perplexity {:.4f}\n", e.epoch, e.loss, e.perplexity);
  });
  gen::save_generator(inv.out_dir, model);

  nlohmann::json resolved = c;
  if (c.eval_samples > 0) {
    std::vector<std::vector<int>> prompts;
    for (int i = 0; i < c.eval_samples; ++i) {
      const data::PairSequenceEntry& e = entries[static_cast<size_t>(i) % entries.size()];
      prompts.push_back(gen::encode_prompt(vocab, e.role, e.prompt).ids);
    }
    const std::vector<gen::Sample> samples =
        gen::sample(model, prompts, gen::SampleOptions{c.eval_max_new, derive_seed(c.pretrain.seed, 0x65)});
    int valid = 0;
    for (const gen::Sample& s : samples) {
      if (s.finished && chem::is_valid_smiles(gen::decode_completion(vocab, s.ids))) ++valid;
    }
    *inv.out << fmt::format("{} of {} sampled completions valid\n", valid, c.eval_samples);
    std::ofstream eval(out_path(inv, "validity.json"));
    eval << nlohmann::json{{"samples", c.eval_samples}, {"valid", valid}}.dump(2) << '\n';
  }
  write_resolved_config(inv, resolved);
}

}  // namespace opv::cli
