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

#include <string>
#include <utility>
#include <vector>

#include "opvforge/ad/tensor.hpp"

namespace opv::ad {

inline constexpr uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor<float>>>;

// Binary layout (little-endian): "OPVW", u32 version, u32 count, then per
// entry u32 name length, name bytes, u32 rank, u64 dims[rank], f32 values.
void save_tensors(const std::string& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::string& path);

void save_checkpoint(const std::string& path, const ParameterRefs<float>& params);

// Copies stored values into `params` by name. Every parameter must be present
// with an identical shape; extra entries in the file are ignored unless
// `strict` is set.
void load_checkpoint(const std::string& path, const ParameterRefs<float>& params, bool strict = true);

// Same matching rules against an in-memory table.
void assign_tensors(const NamedTensors& tensors, const ParameterRefs<float>& params, bool strict = true);

NamedTensors snapshot(const ParameterRefs<float>& params);

}  // namespace opv::ad
