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

#include "opvforge/chem/smiles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>

namespace opv::chem {

namespace {

bool is_two_letter_organic(std::string_view s) {
  return s == "Cl" || s == "Br" || s == "Si" || s == "Se" || s == "Sn" || s == "se";
}

bool is_one_letter_organic(char c) {
  switch (c) {
    case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
    case 'b': case 'c': case 'n': case 'o': case 'p': case 's': case '*':
      return true;
    default:
      return false;
  }
}

bool is_bond_char(char c) {
  return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\' || c == '.';
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

bool aromatic_capable(std::string_view element) {
  return element == "B" || element == "C" || element == "N" || element == "O" ||
         element == "P" || element == "S" || element == "Se";
}

Atom organic_atom(std::string_view text, int position) {
  Atom atom;
  const bool lower = std::islower(static_cast<unsigned char>(text[0])) != 0;
  atom.element = capitalize(text);
  atom.aromatic = lower;
  if (element_index(atom.element) < 0) {
    throw SmilesError(SmilesError::Kind::UnsupportedElement, position, std::string(text));
  }
  return atom;
}

// Bracket atom grammar: [isotope? symbol chirality? hcount? charge? class?]
Atom bracket_atom(std::string_view text, int position) {
  std::string_view body = text.substr(1, text.size() - 2);
  size_t i = 0;
  auto bad = [&](const char* what) {
    return SmilesError(SmilesError::Kind::BadBracketAtom, position,
                       fmt::format("{} in {}", what, text));
  };
  while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
  if (i >= body.size()) throw bad("missing element");
  Atom atom;
  std::string symbol;
  if (body[i] == '*') {
    symbol = "*";
    ++i;
  } else if (std::isupper(static_cast<unsigned char>(body[i]))) {
    symbol.push_back(body[i++]);
    if (i < body.size() && std::islower(static_cast<unsigned char>(body[i]))) symbol.push_back(body[i++]);
  } else if (std::islower(static_cast<unsigned char>(body[i]))) {
    if (body.substr(i, 2) == "se") {
      symbol = "se";
      i += 2;
    } else {
      symbol.push_back(body[i++]);
    }
    atom.aromatic = true;
  } else {
    throw bad("missing element");
  }
  atom.element = capitalize(symbol);
  if (element_index(atom.element) < 0 || (atom.aromatic && !aromatic_capable(atom.element))) {
    throw SmilesError(SmilesError::Kind::UnsupportedElement, position, symbol);
  }
  while (i < body.size() && body[i] == '@') {
    ++i;
    // Extended chirality classes such as @TH1 / @SP2.
    while (i < body.size() && std::isupper(static_cast<unsigned char>(body[i])) && body[i] != 'H') ++i;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
  }
  if (i < body.size() && body[i] == 'H') {
    ++i;
    int count = 1;
    if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) count = body[i++] - '0';
    atom.explicit_h = count;
  } else {
    atom.explicit_h = 0;
  }
  if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
    const char sign = body[i++];
    int magnitude = 1;
    if (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      magnitude = 0;
      while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) magnitude = magnitude * 10 + (body[i++] - '0');
    } else {
      while (i < body.size() && body[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    atom.formal_charge = sign == '+' ? magnitude : -magnitude;
  }
  if (i < body.size() && body[i] == ':') {
    ++i;
    if (i >= body.size()) throw bad("empty atom class");
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
  }
  if (i != body.size()) throw bad("unexpected character");
  return atom;
}

std::optional<BondOrder> bond_from_char(char c) {
  switch (c) {
    case '-': case '/': case '\\': return BondOrder::Single;
    case '=': return BondOrder::Double;
    case '#': return BondOrder::Triple;
    case ':': return BondOrder::Aromatic;
    default: return std::nullopt;
  }
}

}  // namespace

SmilesError::SmilesError(Kind kind, int value, const std::string& detail)
    : DataError(detail.empty() ? fmt::format("{}({})", kind_name(kind), value)
                               : fmt::format("{}({}): {}", kind_name(kind), value, detail)),
      kind_(kind),
      value_(value) {}

const char* SmilesError::kind_name(Kind kind) {
  switch (kind) {
    case Kind::EmptyInput: return "EmptyInput";
    case Kind::UnknownCharacter: return "UnknownCharacter";
    case Kind::UnterminatedBracket: return "UnterminatedBracket";
    case Kind::UnmatchedRingClosure: return "UnmatchedRingClosure";
    case Kind::UnbalancedParenthesis: return "UnbalancedParenthesis";
    case Kind::BondWithoutAtom: return "BondWithoutAtom";
    case Kind::UnsupportedElement: return "UnsupportedElement";
    case Kind::BadBracketAtom: return "BadBracketAtom";
    case Kind::RingBondConflict: return "RingBondConflict";
  }
  return "SmilesError";
}

std::vector<Token> tokenize(std::string_view smiles) {
  if (smiles.empty()) throw SmilesError(SmilesError::Kind::EmptyInput, 0);
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < smiles.size()) {
    const char c = smiles[i];
    const int pos = static_cast<int>(i);
    if (c == '[') {
      const size_t close = smiles.find(']', i);
      const size_t next_open = smiles.find('[', i + 1);
      if (close == std::string_view::npos || next_open < close) {
        throw SmilesError(SmilesError::Kind::UnterminatedBracket, pos);
      }
      tokens.push_back({std::string(smiles.substr(i, close - i + 1)), TokenKind::BracketAtom, pos});
      i = close + 1;
    } else if (i + 1 < smiles.size() && is_two_letter_organic(smiles.substr(i, 2))) {
      tokens.push_back({std::string(smiles.substr(i, 2)), TokenKind::Atom, pos});
      i += 2;
    } else if (is_one_letter_organic(c)) {
      tokens.push_back({std::string(1, c), TokenKind::Atom, pos});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      tokens.push_back({std::string(1, c), TokenKind::RingClosure, pos});
      ++i;
    } else if (c == '%') {
      if (i + 2 < smiles.size() && std::isdigit(static_cast<unsigned char>(smiles[i + 1])) &&
          std::isdigit(static_cast<unsigned char>(smiles[i + 2]))) {
        tokens.push_back({std::string(smiles.substr(i, 3)), TokenKind::RingClosure, pos});
        i += 3;
      } else {
        throw SmilesError(SmilesError::Kind::UnknownCharacter, pos, "'%' needs two digits");
      }
    } else if (c == '(') {
      tokens.push_back({"(", TokenKind::BranchOpen, pos});
      ++i;
    } else if (c == ')') {
      tokens.push_back({")", TokenKind::BranchClose, pos});
      ++i;
    } else if (is_bond_char(c)) {
      tokens.push_back({std::string(1, c), TokenKind::Bond, pos});
      ++i;
    } else {
      throw SmilesError(SmilesError::Kind::UnknownCharacter, pos,
                        std::isprint(static_cast<unsigned char>(c)) ? fmt::format("'{}'", c)
                                                                    : fmt::format("byte {}", static_cast<int>(static_cast<unsigned char>(c))));
    }
  }
  return tokens;
}

std::string detokenize(const std::vector<Token>& tokens) {
  std::string out;
  for (const Token& t : tokens) out += t.text;
  return out;
}

MolecularGraph parse(std::string_view smiles) {
  const std::vector<Token> tokens = tokenize(smiles);
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<std::pair<int, int>> spans;
  std::set<std::pair<int, int>> bonded;

  struct PendingBond {
    char symbol;
    int position;
  };
  struct OpenRing {
    int atom;
    std::optional<PendingBond> bond;
    int position;
  };
  int prev = -1;
  std::optional<PendingBond> pending;
  std::vector<std::pair<int, int>> branches;  // (atom, paren position)
  std::map<int, OpenRing> open_rings;

  auto add_bond = [&](int a, int b, std::optional<PendingBond> symbol, int position) {
    const auto key = std::minmax(a, b);
    if (a == b || bonded.count(key)) {
      throw SmilesError(SmilesError::Kind::RingBondConflict, position, "duplicate bond");
    }
    bonded.insert(key);
    BondOrder order = atoms[a].aromatic && atoms[b].aromatic ? BondOrder::Aromatic : BondOrder::Single;
    if (symbol) order = *bond_from_char(symbol->symbol);
    bonds.push_back({a, b, order});
  };

  for (const Token& tok : tokens) {
    switch (tok.kind) {
      case TokenKind::Atom:
      case TokenKind::BracketAtom: {
        Atom atom = tok.kind == TokenKind::Atom ? organic_atom(tok.text, tok.position)
                                                : bracket_atom(tok.text, tok.position);
        atoms.push_back(std::move(atom));
        spans.emplace_back(tok.position, tok.position + static_cast<int>(tok.text.size()));
        const int idx = static_cast<int>(atoms.size()) - 1;
        if (prev >= 0) add_bond(prev, idx, pending, tok.position);
        pending.reset();
        prev = idx;
        break;
      }
      case TokenKind::Bond: {
        if (prev < 0 || pending) throw SmilesError(SmilesError::Kind::BondWithoutAtom, tok.position);
        if (tok.text == ".") {
          prev = -1;
        } else {
          pending = PendingBond{tok.text[0], tok.position};
        }
        break;
      }
      case TokenKind::RingClosure: {
        if (prev < 0) throw SmilesError(SmilesError::Kind::BondWithoutAtom, tok.position);
        const int number = tok.text[0] == '%' ? std::stoi(tok.text.substr(1)) : tok.text[0] - '0';
        auto it = open_rings.find(number);
        if (it == open_rings.end()) {
          open_rings[number] = OpenRing{prev, pending, tok.position};
        } else {
          std::optional<PendingBond> symbol = it->second.bond;
          if (pending) {
            if (symbol && symbol->symbol != pending->symbol &&
                bond_from_char(symbol->symbol) != bond_from_char(pending->symbol)) {
              throw SmilesError(SmilesError::Kind::RingBondConflict, tok.position,
                                "ring closure bond symbols disagree");
            }
            symbol = pending;
          }
          add_bond(it->second.atom, prev, symbol, tok.position);
          open_rings.erase(it);
        }
        pending.reset();
        break;
      }
      case TokenKind::BranchOpen: {
        if (prev < 0) throw SmilesError(SmilesError::Kind::UnbalancedParenthesis, tok.position);
        if (pending) throw SmilesError(SmilesError::Kind::BondWithoutAtom, pending->position);
        branches.emplace_back(prev, tok.position);
        break;
      }
      case TokenKind::BranchClose: {
        if (branches.empty()) throw SmilesError(SmilesError::Kind::UnbalancedParenthesis, tok.position);
        if (pending) throw SmilesError(SmilesError::Kind::BondWithoutAtom, pending->position);
        prev = branches.back().first;
        branches.pop_back();
        break;
      }
      case TokenKind::Special:
        throw SmilesError(SmilesError::Kind::UnknownCharacter, tok.position, tok.text);
    }
  }
  if (pending) throw SmilesError(SmilesError::Kind::BondWithoutAtom, pending->position);
  if (!branches.empty()) throw SmilesError(SmilesError::Kind::UnbalancedParenthesis, branches.back().second);
  if (!open_rings.empty()) throw SmilesError(SmilesError::Kind::UnmatchedRingClosure, open_rings.begin()->first);

  MolecularGraph graph(std::move(atoms), std::move(bonds));
  graph.set_atom_spans(std::move(spans));
  return graph;
}

namespace {

std::string atom_text(const Atom& atom) {
  std::string symbol = atom.element;
  if (atom.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  const bool bare = atom.formal_charge == 0 && !atom.explicit_h.has_value() && atom.element != "H";
  if (bare) return symbol;
  std::string out = "[" + symbol;
  if (atom.explicit_h && *atom.explicit_h > 0) {
    out += "H";
    if (*atom.explicit_h > 1) out += std::to_string(*atom.explicit_h);
  }
  if (atom.formal_charge != 0) {
    out += atom.formal_charge > 0 ? "+" : "-";
    if (std::abs(atom.formal_charge) > 1) out += std::to_string(std::abs(atom.formal_charge));
  }
  return out + "]";
}

std::string bond_text(const MolecularGraph& g, const Bond& bond) {
  const bool both_aromatic = g.atoms()[bond.a].aromatic && g.atoms()[bond.b].aromatic;
  switch (bond.order) {
    case BondOrder::Single: return both_aromatic ? "-" : "";
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

std::string ring_label(int number) {
  return number < 10 ? std::to_string(number) : fmt::format("%{:02d}", number);
}

class SmilesWriter {
 public:
  SmilesWriter(const MolecularGraph& g, Rng* rng) : g_(g), rng_(rng), visited_(g.atom_count(), false),
        children_(g.atom_count()), events_(g.atom_count()), on_stack_(g.atom_count(), false) {}

  std::string write(int start) {
    std::string out;
    std::vector<int> roots;
    if (g_.atom_count() == 0) return out;
    roots.push_back(start);
    for (int i = 0; i < g_.atom_count(); ++i) roots.push_back(i);
    for (int r : roots) {
      if (visited_[r]) continue;
      plan(r, -1);
      if (!out.empty()) out += ".";
      emit(r, out);
    }
    return out;
  }

 private:
  struct RingEvent {
    int bond;
    bool opens;
  };

  std::vector<Neighbor> ordered_neighbors(int atom) {
    std::vector<Neighbor> nbrs = g_.neighbors(atom);
    if (rng_) rng_->shuffle(nbrs);
    return nbrs;
  }

  void plan(int atom, int parent_bond) {
    visited_[atom] = true;
    on_stack_[atom] = true;
    for (const Neighbor& n : ordered_neighbors(atom)) {
      if (n.bond == parent_bond) continue;
      if (!visited_[n.atom]) {
        children_[atom].push_back(n);
        plan(n.atom, n.bond);
      } else if (on_stack_[n.atom] && !closure_seen_.count(n.bond)) {
        closure_seen_.insert(n.bond);
        events_[n.atom].push_back({n.bond, true});
        events_[atom].push_back({n.bond, false});
      }
    }
    on_stack_[atom] = false;
  }

  void emit(int atom, std::string& out) {
    out += atom_text(g_.atoms()[atom]);
    std::vector<int> freed;
    for (const RingEvent& e : events_[atom]) {
      if (!e.opens) {
        const int number = ring_numbers_.at(e.bond);
        out += ring_label(number);
        freed.push_back(number);
      }
    }
    for (const RingEvent& e : events_[atom]) {
      if (e.opens) {
        int number = 1;
        while (in_use_.count(number)) ++number;
        in_use_.insert(number);
        ring_numbers_[e.bond] = number;
        out += bond_text(g_, g_.bonds()[e.bond]) + ring_label(number);
      }
    }
    for (int number : freed) in_use_.erase(number);
    const auto& kids = children_[atom];
    for (size_t i = 0; i < kids.size(); ++i) {
      const bool last = i + 1 == kids.size();
      if (!last) out += "(";
      out += bond_text(g_, g_.bonds()[kids[i].bond]);
      emit(kids[i].atom, out);
      if (!last) out += ")";
    }
  }

  const MolecularGraph& g_;
  Rng* rng_;
  std::vector<bool> visited_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<RingEvent>> events_;
  std::vector<bool> on_stack_;
  std::set<int> closure_seen_;
  std::map<int, int> ring_numbers_;
  std::set<int> in_use_;
};

}  // namespace

std::string write_smiles(const MolecularGraph& graph, const WriteOptions& options) {
  if (graph.atom_count() == 0) return {};
  const int start = std::clamp(options.start_atom, 0, graph.atom_count() - 1);
  return SmilesWriter(graph, options.shuffle).write(start);
}

}  // namespace opv::chem
