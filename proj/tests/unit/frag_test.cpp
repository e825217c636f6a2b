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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "opvforge/chem/smiles.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/random.hpp"
#include "opvforge/data/synth.hpp"
#include "opvforge/frag/fragments.hpp"

namespace opv::frag {
namespace {

namespace fs = std::filesystem;

// Exhaustive oracle: every bond that lies on some simple cycle, found by
// enumerating all simple paths between its endpoints that avoid the bond.
std::vector<std::set<int>> brute_force_systems(const chem::MolecularGraph& g) {
  const int n = g.atom_count();
  std::vector<bool> on_cycle(static_cast<size_t>(g.bond_count()), false);
  for (int b = 0; b < g.bond_count(); ++b) {
    const chem::Bond& bond = g.bonds()[static_cast<size_t>(b)];
    std::vector<bool> seen(static_cast<size_t>(n), false);
    std::function<bool(int)> reach = [&](int a) {
      if (a == bond.b) return true;
      seen[a] = true;
      for (const chem::Neighbor& nb : g.neighbors(a)) {
        if (nb.bond == b || seen[nb.atom]) continue;
        if (reach(nb.atom)) return true;
      }
      seen[a] = false;
      return false;
    };
    on_cycle[static_cast<size_t>(b)] = reach(bond.a);
  }
  // Union the endpoints of cycle bonds.
  std::vector<int> parent(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
  std::set<int> cycle_atoms;
  for (int b = 0; b < g.bond_count(); ++b) {
    if (!on_cycle[static_cast<size_t>(b)]) continue;
    const chem::Bond& bond = g.bonds()[static_cast<size_t>(b)];
    parent[root(bond.a)] = root(bond.b);
    cycle_atoms.insert(bond.a);
    cycle_atoms.insert(bond.b);
  }
  std::map<int, std::set<int>> groups;
  for (int a : cycle_atoms) groups[root(a)].insert(a);
  std::vector<std::set<int>> out;
  for (auto& [r, atoms] : groups) out.push_back(atoms);
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return *x.begin() < *y.begin(); });
  return out;
}

std::vector<std::set<int>> as_sets(const std::vector<RingSystem>& systems) {
  std::vector<std::set<int>> out;
  for (const RingSystem& s : systems) out.emplace_back(s.atoms.begin(), s.atoms.end());
  return out;
}

TEST(RingSystems, WorkedExamples) {
  std::vector<RingSystem> s = ring_systems(chem::parse("c1ccccc1"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].size(), 6);
  EXPECT_TRUE(s[0].aromatic);
  EXPECT_EQ(s[0].digest.size(), 16u);

  s = ring_systems(chem::parse("c1ccccc1-c2ccccc2"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].size(), 6);
  EXPECT_EQ(s[1].size(), 6);
  EXPECT_EQ(s[0].digest, s[1].digest);

  s = ring_systems(chem::parse("c1ccc2ccccc2c1"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].size(), 10);

  EXPECT_TRUE(ring_systems(chem::parse("CCCC")).empty());
  s = ring_systems(chem::parse("C1CCCC1CC"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_FALSE(s[0].aromatic);
  EXPECT_EQ(s[0].size(), 5);
}

TEST(RingSystems, SpiroAtomJoinsRings) {
  const std::vector<RingSystem> s = ring_systems(chem::parse("C1CCC12CCC2"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].size(), 7);
}

TEST(RingSystems, MatchesExhaustiveOracleOnRandomGraphs) {
  Rng rng(2024);
  int with_rings = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(11));  // up to 12 atoms
    std::vector<chem::Atom> atoms(static_cast<size_t>(n));
    for (chem::Atom& a : atoms) a.element = "C";
    std::vector<chem::Bond> bonds;
    std::set<std::pair<int, int>> used;
    // A random tree keeps most graphs connected, extra edges close cycles.
    for (int i = 1; i < n; ++i) {
      if (rng.bernoulli(0.9)) {
        const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i)));
        bonds.push_back({j, i, chem::BondOrder::Single});
        used.insert({j, i});
      }
    }
    const int extra = static_cast<int>(rng.below(4));
    for (int e = 0; e < extra; ++e) {
      int a = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
      int b = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!used.insert({a, b}).second) continue;
      bonds.push_back({a, b, chem::BondOrder::Single});
    }
    const chem::MolecularGraph g(atoms, bonds);
    const std::vector<RingSystem> systems = ring_systems(g);
    if (!systems.empty()) ++with_rings;
    EXPECT_EQ(as_sets(systems), brute_force_systems(g)) << "trial " << trial;
  }
  EXPECT_GT(with_rings, 100);
}

TEST(RingSystems, MatchesExhaustiveOracleOnSmallSyntheticMolecules) {
  int checked = 0;
  for (const data::PairRecord& r : data::synth_pairs(9, 200)) {
    for (const std::string& smiles : {r.acceptor_smiles, r.donor_smiles}) {
      const chem::MolecularGraph g = chem::parse(smiles);
      if (g.atom_count() > 12) continue;
      EXPECT_EQ(as_sets(ring_systems(g)), brute_force_systems(g)) << smiles;
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(RingSystems, EveryAtomOnACycleOfItsSystem) {
  for (const char* smiles : {"c1ccc2c(c1)sc1ccccc12", "C1CC2CCC1C2", "c1ccccc1CCc1ccncc1", "C1CC1C1CC1"}) {
    const chem::MolecularGraph g = chem::parse(smiles);
    for (const RingSystem& s : ring_systems(g)) {
      const chem::MolecularGraph sub = g.induced_subgraph(s.atoms);
      for (int a = 0; a < sub.atom_count(); ++a) EXPECT_TRUE(sub.in_ring(a)) << smiles;
      std::vector<int> labels;
      EXPECT_EQ(sub.components(&labels), 1) << smiles;
    }
  }
}

TEST(Halogens, WorkedExamples) {
  HalogenStats s = halogen_stats({"Fc1ccccc1F"});
  EXPECT_EQ(s.per_molecule[0][0], 2);
  EXPECT_EQ(s.halogenated_fraction, 1.0);
  s = halogen_stats({"CC"});
  EXPECT_EQ(s.per_molecule[0], (std::array<int, 4>{0, 0, 0, 0}));
  EXPECT_EQ(s.halogenated_fraction, 0.0);
  s = halogen_stats({"CC", "CF", "FCCF"});
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_EQ(s.max[0], 2);
  EXPECT_NEAR(s.halogenated_fraction, 2.0 / 3.0, 1e-15);
  s = halogen_stats({"ClCBr", "IC(Cl)Cl"});
  EXPECT_EQ(s.per_molecule[1], (std::array<int, 4>{0, 2, 0, 1}));
  EXPECT_DOUBLE_EQ(s.mean_total, 2.5);
  EXPECT_EQ(s.max_total, 3);
}

TEST(Halogens, ParseErrorNamesMolecule) {
  try {
    halogen_stats({"CC", "C1CC"});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("molecule 2"), std::string::npos);
  }
}

const FrequencyRow* find_row(const FrequencyTable& t, const std::string& digest) {
  for (const FrequencyRow& r : t.rows) {
    if (r.digest == digest) return &r;
  }
  return nullptr;
}

TEST(Frequency, WorkedExamples) {
  const std::string benzene = ring_systems(chem::parse("c1ccccc1"))[0].digest;
  FrequencyTable t = fragment_frequency({"c1ccccc1", "c1ccccc1"});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].digest, benzene);
  EXPECT_EQ(t.rows[0].count, 2);
  EXPECT_EQ(t.rows[0].fraction, 1.0);
  EXPECT_EQ(t.rows[0].label, "c1ccccc1");

  t = fragment_frequency({"c1ccccc1", "CC"});
  ASSERT_NE(find_row(t, benzene), nullptr);
  EXPECT_EQ(find_row(t, benzene)->fraction, 0.5);

  t = fragment_frequency({"c1ccc2ccccc2c1", "c1ccccc1"});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_NE(t.rows[0].digest, t.rows[1].digest);
  EXPECT_NE(find_row(t, benzene), nullptr);
  EXPECT_NE(find_row(t, ring_systems(chem::parse("c1ccc2ccccc2c1"))[0].digest), nullptr);
}

TEST(Frequency, MarkersAndAggregation) {
  const FrequencyTable t = fragment_frequency({"Fc1ccc(-c2ccccc2)s1", "c1ccccc1Cl", "c1cc(F)ncc1F", "not a smiles"});
  EXPECT_EQ(t.analysed, 3);
  EXPECT_EQ(t.skipped, 1);
  const FrequencyRow* f = find_row(t, "X-F");
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->count, 3);
  EXPECT_EQ(f->molecules, 2);
  EXPECT_DOUBLE_EQ(f->fraction, 2.0 / 3.0);
  EXPECT_EQ(find_row(t, "ring-S")->count, 1);
  EXPECT_EQ(find_row(t, "ring-N")->count, 1);
  EXPECT_EQ(find_row(t, "ring-O"), nullptr);
  const FrequencyRow* benzene = find_row(t, ring_systems(chem::parse("c1ccccc1"))[0].digest);
  ASSERT_NE(benzene, nullptr);
  EXPECT_EQ(benzene->molecules, 2);
  EXPECT_EQ(benzene->label, "c2ccccc2");
  for (size_t i = 1; i < t.rows.size(); ++i) {
    const FrequencyRow& a = t.rows[i - 1];
    const FrequencyRow& b = t.rows[i];
    EXPECT_TRUE(a.count > b.count || (a.count == b.count && a.digest < b.digest));
  }
  for (const FrequencyRow& r : t.rows) {
    EXPECT_GE(r.count, 1);
    EXPECT_EQ(r.fraction, static_cast<double>(r.molecules) / 3.0);
  }
}

TEST(Frequency, EmptyInput) {
  EXPECT_THROW(fragment_frequency({}), DataError);
  try {
    fragment_frequency({"C1CC", ")"});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("EmptyInput"), std::string::npos);
  }
}

TEST(Files, MoleculeListsAndCsv) {
  const fs::path dir = fs::temp_directory_path() / "opvforge_frag";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "plain.txt") << "c1ccccc1\n\nCCO\r\n";
    std::ofstream(dir / "memory.csv") << "rank,smiles,pce,score,digest\n1,c1ccsc1,3.0,0.12,ab\n2,CCF,1.0,0.04,cd\n";
    std::ofstream(dir / "other.csv") << "a,b\n1,2\n";
  }
  EXPECT_EQ(read_molecule_list((dir / "plain.txt").string()), (std::vector<std::string>{"c1ccccc1", "CCO"}));
  EXPECT_EQ(read_molecule_list((dir / "memory.csv").string()), (std::vector<std::string>{"c1ccsc1", "CCF"}));
  EXPECT_THROW(read_molecule_list((dir / "other.csv").string()), DataError);
  EXPECT_THROW(read_molecule_list((dir / "missing.txt").string()), DataError);

  write_frequency_csv((dir / "freq.csv").string(), fragment_frequency({"c1ccsc1", "CCF"}));
  std::ifstream in(dir / "freq.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,digest,label,count,molecules,fraction");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace opv::frag
