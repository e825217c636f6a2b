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
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opvforge/chem/smiles.hpp"

namespace opv::chem {

class Vocabulary {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kSep = "<sep>";
  static constexpr std::string_view kUnk = "<unk>";

  // Specials only.
  Vocabulary();

  // Specials first, then `tokens` in the given order. Duplicates and special
  // texts in `tokens` are rejected.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(texts_.size()); }
  int pad() const { return 0; }
  int bos() const { return 1; }
  int eos() const { return 2; }
  int sep() const { return 3; }
  int unk() const { return 4; }

  bool contains(std::string_view text) const;
  // Index of `text`, or unk() for unknown texts.
  int index(std::string_view text) const;
  const std::string& text(int index) const;
  const std::vector<std::string>& texts() const { return texts_; }

  // Copy with extra tokens appended after the existing ones.
  Vocabulary with_appended(const std::vector<std::string>& extra) const;

  std::vector<int> encode(const std::vector<Token>& tokens) const;

 private:
  void add(std::string text);

  std::vector<std::string> texts_;
  std::unordered_map<std::string, int> index_;
};

// Specials plus every distinct token text of the corpus, sorted. Tokenize
// errors are rethrown as DataError naming the corpus index.
Vocabulary build_vocabulary(const std::vector<std::string>& corpus);

}  // namespace opv::chem
