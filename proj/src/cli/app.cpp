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

#include "opvforge/cli/app.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/parallel.hpp"

namespace opv::cli {

namespace fs = std::filesystem;

int resolve_threads(int flag_value, const char* env_value) {
  if (flag_value != 0) {
    if (flag_value < 0) throw UsageError("--threads must be positive");
    return flag_value;
  }
  if (env_value == nullptr || *env_value == '\0') return 1;
  const std::string_view text(env_value);
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || value < 1) {
    throw UsageError("OPVFORGE_THREADS must be a positive integer, got \"" + std::string(text) + "\"");
  }
  return value;
}

namespace {

struct Command {
  const char* name;
  const char* help;
  void (*fn)(const Invocation&);
};

constexpr Command kCommands[] = {
    {"validate", "Check a molecule-per-line file and report valid/invalid counts", cmd_validate},
    {"data-prep", "Load, deduplicate, split and summarize a pair CSV", cmd_data_prep},
    {"synth", "Write synthetic pair, molecule and pair-sequence corpora", cmd_synth},
    {"pretrain-gnn", "Pretrain the graph encoder (masked atoms + HOMO/LUMO)", cmd_pretrain_gnn},
    {"train-predictor", "Train the donor/acceptor PCE predictor", cmd_train_predictor},
    {"train-baseline", "Fit the fingerprint random-forest baseline", cmd_train_baseline},
    {"pretrain-gen", "Pretrain the pair-conditioned SMILES generator", cmd_pretrain_gen},
    {"rl-run", "Fine-tune the generator against a reward", cmd_rl_run},
    {"generate", "Sample candidates for a target and rank them by predicted PCE", cmd_generate},
    {"fragments", "Fragment frequency analysis of a molecule set", cmd_fragments},
    {"report", "Render a markdown report from a campaign directory", cmd_report},
};

nlohmann::json load_config_file(const std::string& path) {
  if (!fs::exists(path)) throw DataError("MissingFile: " + path);
  std::ifstream in(path);
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw UsageError("config " + path + " must hold a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
}

void print_schema(const std::string& command, std::ostream& err) {
  if (command.empty()) return;
  err << "configuration keys of '" << command << "' with their defaults:\n" << default_config(command).dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Donor/acceptor molecule design pipeline for organic photovoltaics", "opvforge"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path, out_dir, input;
  uint64_t seed = 0;
  int threads = 0;
  std::map<const CLI::App*, const Command*> by_app;
  std::map<const CLI::App*, CLI::Option*> seed_options;
  for (const Command& c : kCommands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON configuration file");
    seed_options[sub] = sub->add_option("--seed", seed, "Seed overriding the configuration");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--in", input, "Input file or directory overriding the configuration");
    sub->add_option("--threads", threads, "Worker threads (default: OPVFORGE_THREADS or 1)");
    by_app[sub] = &c;
  }

  std::string command;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    const CLI::App* sub = app.get_subcommands().front();
    const Command& c = *by_app.at(sub);
    command = c.name;

    set_thread_count(resolve_threads(threads, std::getenv("OPVFORGE_THREADS")));
    Invocation inv;
    inv.command = command;
    if (!config_path.empty()) inv.config = load_config_file(config_path);
    if (seed_options.at(sub)->count() > 0) inv.seed = seed;
    inv.out_dir = out_dir;
    inv.input = input;
    inv.out = &out;
    c.fn(inv);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    print_schema(command, err);
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "usage error: bad configuration value: " << e.what() << '\n';
    print_schema(command, err);
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace opv::cli
