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

#include "commands.hpp"
#include "opvforge/common/error.hpp"

namespace opv::cli {

namespace fs = std::filesystem;

nlohmann::json default_config(const std::string& command) {
  for (auto* defaults : {data_command_defaults, model_command_defaults, campaign_command_defaults}) {
    nlohmann::json j = defaults(command);
    if (!j.is_null()) return j;
  }
  return nlohmann::json::object();
}

void require_out_dir(const Invocation& inv) {
  if (inv.out_dir.empty()) throw UsageError(inv.command + " needs --out DIR");
  std::error_code ec;
  fs::create_directories(inv.out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + inv.out_dir + ": " + ec.message());
}

std::string out_path(const Invocation& inv, const std::string& file) { return (fs::path(inv.out_dir) / file).string(); }

void write_resolved_config(const Invocation& inv, const nlohmann::json& resolved) {
  const std::string path = out_path(inv, "config.resolved.json");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << resolved.dump(2) << '\n';
}

std::string input_path(const Invocation& inv, const std::string& from_config) {
  const std::string path = inv.input.empty() ? from_config : inv.input;
  if (path.empty()) throw UsageError(inv.command + " needs an input: --in PATH or the \"input\" config key");
  return path;
}

}  // namespace opv::cli
