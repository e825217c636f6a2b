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

#include <ostream>
#include <string>
#include <vector>

namespace opv::cli {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitInternal = 4;

// Runs one subcommand. `args` excludes the program name. Reports go to
// `out`, diagnostics to `err`; errors never escape.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Worker count from --threads, else the OPVFORGE_THREADS environment
// variable, else 1. Throws UsageError on a non-positive or malformed value.
int resolve_threads(int flag_value, const char* env_value);

}  // namespace opv::cli
