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

#include "opvforge/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace opv::ad {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'O', 'P', 'V', 'W'};

template <typename U>
void put(std::ofstream& out, U value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U get(std::ifstream& in, const std::string& path) {
  U value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!in) throw DataError("checkpoint " + path + ": truncated file");
  return value;
}

}  // namespace

void save_tensors(const std::string& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, 4);
  put<uint32_t>(out, kCheckpointVersion);
  put<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<uint32_t>(out, static_cast<uint32_t>(t.rank()));
    for (int64_t d : t.shape()) put<uint64_t>(out, static_cast<uint64_t>(d));
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw DataError("error while writing checkpoint " + path);
}

NamedTensors load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint " + path + ": bad magic");
  const auto version = get<uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint " + path + ": unsupported format version " + std::to_string(version));
  }
  const auto count = get<uint32_t>(in, path);
  NamedTensors out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const auto len = get<uint32_t>(in, path);
    if (len > (1u << 16)) throw DataError("checkpoint " + path + ": implausible name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rank = get<uint32_t>(in, path);
    if (rank > 8) throw DataError("checkpoint " + path + ": implausible rank for " + name);
    Shape shape;
    for (uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<int64_t>(get<uint64_t>(in, path)));
    std::vector<float> data(static_cast<size_t>(shape_size(shape)));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in) throw DataError("checkpoint " + path + ": truncated values for " + name);
    out.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
  }
  return out;
}

NamedTensors snapshot(const ParameterRefs<float>& params) {
  NamedTensors out;
  out.reserve(params.size());
  for (const Parameter<float>* p : params) out.emplace_back(p->name, p->value);
  return out;
}

void save_checkpoint(const std::string& path, const ParameterRefs<float>& params) {
  save_tensors(path, snapshot(params));
}

void assign_tensors(const NamedTensors& tensors, const ParameterRefs<float>& params, bool strict) {
  std::unordered_map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  if (strict && by_name.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(by_name.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  }
  for (Parameter<float>* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw DataError("checkpoint is missing parameter " + p->name);
    if (it->second->shape() != p->value.shape()) {
      throw DataError("checkpoint shape " + shape_string(it->second->shape()) + " for " + p->name +
                      " does not match " + shape_string(p->value.shape()));
    }
    p->value = *it->second;
  }
}

void load_checkpoint(const std::string& path, const ParameterRefs<float>& params, bool strict) {
  assign_tensors(load_tensors(path), params, strict);
}

}  // namespace opv::ad
