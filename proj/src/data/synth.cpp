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

#include "opvforge/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "opvforge/chem/descriptors.hpp"
#include "opvforge/chem/smiles.hpp"

namespace opv::data {

namespace {

constexpr std::array<std::string_view, 7> kDonorUnits = {
    "c1ccccc1", "c1ccsc1", "c1ccoc1", "c1ccc2ccccc2c1", "c1cc2sccc2s1", "c1ccc2sccc2c1", "c1ccncc1",
};

constexpr std::array<std::string_view, 5> kAcceptorCores = {
    "c1ccc2nsnc2c1", "c1ccc2ccccc2c1", "c1cc2sccc2s1", "c1cnc2ccccc2n1", "N#Cc1ccc(C#N)cc1",
};

// Accumulates atoms and bonds; substitution sites are aromatic carbons that
// still carry an implicit hydrogen.
class Builder {
 public:
  int add_atom(std::string element, bool aromatic = false) {
    chem::Atom a;
    a.element = std::move(element);
    a.aromatic = aromatic;
    a.index = static_cast<int>(atoms_.size());
    atoms_.push_back(std::move(a));
    return atoms_.back().index;
  }

  void add_bond(int a, int b, chem::BondOrder order = chem::BondOrder::Single) { bonds_.push_back({a, b, order}); }

  // Copies a fragment in and returns its open sites (atom ids in this builder).
  std::vector<int> add_fragment(std::string_view smiles) {
    const chem::MolecularGraph g = chem::parse(smiles);
    const int offset = static_cast<int>(atoms_.size());
    for (const chem::Atom& a : g.atoms()) add_atom(a.element, a.aromatic);
    for (const chem::Bond& b : g.bonds()) add_bond(b.a + offset, b.b + offset, b.order);
    std::vector<int> sites;
    for (int i = 0; i < g.atom_count(); ++i) {
      const chem::Atom& a = g.atoms()[i];
      if (a.aromatic && a.element == "C" && g.degree(i) == 2) sites.push_back(i + offset);
    }
    return sites;
  }

  void add_chain(int anchor, int length) {
    int prev = anchor;
    for (int i = 0; i < length; ++i) {
      const int c = add_atom("C");
      add_bond(prev, c);
      prev = c;
    }
  }

  chem::MolecularGraph graph() const { return chem::MolecularGraph(atoms_, bonds_); }

 private:
  std::vector<chem::Atom> atoms_;
  std::vector<chem::Bond> bonds_;
};

int take_site(std::vector<int>& sites, Rng& rng) {
  const size_t k = rng.below(sites.size());
  const int site = sites[k];
  sites.erase(sites.begin() + static_cast<std::ptrdiff_t>(k));
  return site;
}

void add_side_chain(Builder& b, int anchor, Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.6) {
    b.add_chain(anchor, rng.uniform_int(3, 8));
  } else if (u < 0.8) {
    // 2-ethylhexyl-like branch.
    const int c1 = b.add_atom("C");
    b.add_bond(anchor, c1);
    const int c2 = b.add_atom("C");
    b.add_bond(c1, c2);
    b.add_chain(c2, 2);
    b.add_chain(c2, rng.uniform_int(2, 4));
  } else {
    const int o = b.add_atom("O");
    b.add_bond(anchor, o);
    b.add_chain(o, rng.uniform_int(3, 7));
  }
}

}  // namespace

std::string synth_donor(Rng& rng) {
  Builder b;
  const int units = rng.uniform_int(1, 3);
  std::vector<int> free_sites;
  std::vector<int> link_sites;
  for (int u = 0; u < units; ++u) {
    std::vector<int> sites = b.add_fragment(kDonorUnits[rng.below(kDonorUnits.size())]);
    if (u > 0) {
      const int here = take_site(sites, rng);
      b.add_bond(take_site(link_sites, rng), here);
      free_sites.insert(free_sites.end(), link_sites.begin(), link_sites.end());
    }
    link_sites = std::move(sites);
  }
  free_sites.insert(free_sites.end(), link_sites.begin(), link_sites.end());
  const int chains = std::min<int>(units + static_cast<int>(rng.below(2)), static_cast<int>(free_sites.size()));
  for (int c = 0; c < chains; ++c) add_side_chain(b, take_site(free_sites, rng), rng);
  if (!free_sites.empty() && rng.bernoulli(0.15)) {
    const int f = b.add_atom("F");
    b.add_bond(take_site(free_sites, rng), f);
  }
  return chem::write_smiles(b.graph());
}

std::string synth_acceptor(Rng& rng) {
  Builder b;
  std::vector<int> sites = b.add_fragment(kAcceptorCores[rng.below(kAcceptorCores.size())]);
  const int halogens = std::min(rng.uniform_int(0, 3), static_cast<int>(sites.size()));
  for (int i = 0; i < halogens; ++i) {
    const int x = b.add_atom(rng.bernoulli(0.5) ? "F" : "Cl");
    b.add_bond(take_site(sites, rng), x);
  }
  return chem::write_smiles(b.graph());
}

std::vector<std::string> synth_molecules(uint64_t seed, int n, MoleculeKind kind) {
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(std::max(n, 0)));
  Rng rng(derive_seed(seed, 0x301));
  for (int i = 0; i < n; ++i) {
    const bool donor = kind == MoleculeKind::Donor || (kind == MoleculeKind::Mixed && rng.bernoulli(0.5));
    out.push_back(donor ? synth_donor(rng) : synth_acceptor(rng));
  }
  return out;
}

HomoLumo synthetic_homo_lumo(const chem::MolecularGraph& graph) {
  const double af = chem::aromatic_fraction(graph);
  const int halogens = chem::halogen_count(graph);
  int hetero = 0;
  for (const chem::Atom& a : graph.atoms()) hetero += (a.aromatic && a.element != "C") ? 1 : 0;
  HomoLumo e;
  e.homo = -5.9 + 1.1 * af - 0.12 * halogens + 0.05 * hetero;
  e.lumo = e.homo + 3.6 - 1.5 * af - 0.05 * halogens;
  return e;
}

std::vector<MoleculeEntry> synth_molecule_corpus(uint64_t seed, int n) {
  std::vector<MoleculeEntry> out;
  for (std::string& s : synth_molecules(seed, n, MoleculeKind::Mixed)) {
    const HomoLumo e = synthetic_homo_lumo(chem::parse(s));
    out.push_back({std::move(s), e.homo, e.lumo});
  }
  return out;
}

double synthetic_pce_mean(const chem::MolecularGraph& donor, const chem::MolecularGraph& acceptor,
                          const SyntheticPce& params) {
  return params.base + params.aromatic_weight * chem::aromatic_fraction(donor) +
         params.halogen_weight * chem::halogen_count(acceptor);
}

std::vector<PairRecord> synth_pairs(uint64_t seed, int n, const SyntheticPce& params) {
  std::vector<PairRecord> out;
  out.reserve(static_cast<size_t>(std::max(n, 0)));
  Rng rng(derive_seed(seed, 0x302));
  for (int i = 0; i < n; ++i) {
    PairRecord r;
    r.donor_smiles = synth_donor(rng);
    r.acceptor_smiles = synth_acceptor(rng);
    const chem::MolecularGraph donor = chem::parse(r.donor_smiles);
    const chem::MolecularGraph acceptor = chem::parse(r.acceptor_smiles);
    const double noise = params.noise > 0.0 ? rng.normal(0.0, params.noise) : 0.0;
    r.pce = std::clamp(synthetic_pce_mean(donor, acceptor, params) + noise, 0.0, params.cap);
    r.voc = 0.6 + 0.3 * rng.uniform();
    r.ff = 55.0 + 20.0 * rng.uniform();
    r.jsc = r.pce / (*r.voc * *r.ff / 100.0);
    const HomoLumo d = synthetic_homo_lumo(donor);
    const HomoLumo a = synthetic_homo_lumo(acceptor);
    r.donor_homo = d.homo;
    r.donor_lumo = d.lumo;
    r.acceptor_homo = a.homo;
    r.acceptor_lumo = a.lumo;
    r.source = "synthetic";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace opv::data
