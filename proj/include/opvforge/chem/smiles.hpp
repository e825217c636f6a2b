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
#include <vector>

#include "opvforge/chem/molecule.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/random.hpp"

namespace opv::chem {

enum class TokenKind { Atom, BracketAtom, Bond, RingClosure, BranchOpen, BranchClose, Special };

struct Token {
  std::string text;
  TokenKind kind = TokenKind::Atom;
  int position = 0;  // byte offset in the source string

  bool operator==(const Token& other) const { return text == other.text && kind == other.kind; }
};

class SmilesError : public DataError {
 public:
  enum class Kind {
    EmptyInput,
    UnknownCharacter,
    UnterminatedBracket,
    UnmatchedRingClosure,
    UnbalancedParenthesis,
    BondWithoutAtom,
    UnsupportedElement,
    BadBracketAtom,
    RingBondConflict,
  };

  // `value` is the ring-closure number for UnmatchedRingClosure and the byte
  // position for every other kind.
  SmilesError(Kind kind, int value, const std::string& detail = {});

  Kind kind() const { return kind_; }
  int value() const { return value_; }

  static const char* kind_name(Kind kind);

 private:
  Kind kind_;
  int value_;
};

std::vector<Token> tokenize(std::string_view smiles);

std::string detokenize(const std::vector<Token>& tokens);

MolecularGraph parse(std::string_view smiles);

struct WriteOptions {
  int start_atom = 0;
  Rng* shuffle = nullptr;  // randomizes traversal order when set
};

// Non-canonical SMILES for `graph`. Different options give different but
// equivalent strings; parse(write_smiles(g)) is isomorphic to g.
std::string write_smiles(const MolecularGraph& graph, const WriteOptions& options = {});

}  // namespace opv::chem
