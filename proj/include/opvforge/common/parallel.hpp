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

#include <cstddef>
#include <functional>

namespace opv {

// Process-wide worker count used by parallel_for. Defaults to 1.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n) over contiguous chunks. Callers must write only
// to per-index slots so results do not depend on the thread count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace opv
