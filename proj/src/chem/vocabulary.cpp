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

#include "opvforge/chem/vocabulary.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace opv::chem {

Vocabulary::Vocabulary() {
  for (std::string_view s : {kPad, kBos, kEos, kSep, kUnk}) add(std::string(s));
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const std::string& t : tokens) add(t);
}

void Vocabulary::add(std::string text) {
  if (text.empty()) throw std::invalid_argument("empty vocabulary token");
  if (index_.count(text)) throw std::invalid_argument("duplicate vocabulary token: " + text);
  index_.emplace(text, static_cast<int>(texts_.size()));
  texts_.push_back(std::move(text));
}

bool Vocabulary::contains(std::string_view text) const { return index_.count(std::string(text)) > 0; }

int Vocabulary::index(std::string_view text) const {
  auto it = index_.find(std::string(text));
  return it == index_.end() ? unk() : it->second;
}

const std::string& Vocabulary::text(int index) const { return texts_.at(static_cast<size_t>(index)); }

Vocabulary Vocabulary::with_appended(const std::vector<std::string>& extra) const {
  Vocabulary v = *this;
  for (const std::string& t : extra) v.add(t);
  return v;
}

std::vector<int> Vocabulary::encode(const std::vector<Token>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const Token& t : tokens) ids.push_back(index(t.text));
  return ids;
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus) {
  std::set<std::string> distinct;
  for (size_t i = 0; i < corpus.size(); ++i) {
    try {
      for (Token& t : tokenize(corpus[i])) distinct.insert(std::move(t.text));
    } catch (const SmilesError& e) {
      throw DataError(fmt::format("corpus entry {}: {}", i, e.what()));
    }
  }
  return Vocabulary(std::vector<std::string>(distinct.begin(), distinct.end()));
}

}  // namespace opv::chem
