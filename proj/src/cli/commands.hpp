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
#include <ostream>
#include <string>

#include <json.hpp>

namespace opv::cli {

// Flags shared by every subcommand, plus the loaded --config document.
struct Invocation {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::optional<uint64_t> seed;  // --seed
  std::string out_dir;           // --out
  std::string input;             // --in
  std::ostream* out = nullptr;
};

// Each returns normally on success and throws UsageError, DataError or
// NumericError otherwise.
void cmd_validate(const Invocation& inv);
void cmd_synth(const Invocation& inv);
void cmd_data_prep(const Invocation& inv);
void cmd_pretrain_gnn(const Invocation& inv);
void cmd_train_predictor(const Invocation& inv);
void cmd_train_baseline(const Invocation& inv);
void cmd_pretrain_gen(const Invocation& inv);
void cmd_rl_run(const Invocation& inv);
void cmd_generate(const Invocation& inv);
void cmd_fragments(const Invocation& inv);
void cmd_report(const Invocation& inv);

// Default configuration of a subcommand, shown with usage errors. Each
// command file answers for its own commands and returns null otherwise.
nlohmann::json default_config(const std::string& command);
nlohmann::json data_command_defaults(const std::string& command);
nlohmann::json model_command_defaults(const std::string& command);
nlohmann::json campaign_command_defaults(const std::string& command);

// Helpers shared by the command files.
void require_out_dir(const Invocation& inv);
void write_resolved_config(const Invocation& inv, const nlohmann::json& resolved);
std::string out_path(const Invocation& inv, const std::string& file);
// --in wins over the config's "input" key; UsageError when neither is set.
std::string input_path(const Invocation& inv, const std::string& from_config);

}  // namespace opv::cli
