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

#include <cstdint>
#include <string>
#include <vector>

#include "opvforge/chem/molecule.hpp"
#include "opvforge/common/random.hpp"
#include "opvforge/data/corpus.hpp"
#include "opvforge/data/records.hpp"

namespace opv::data {

// Donors: one to three linked aromatic units carrying alkyl or alkoxy side
// chains. Acceptors: one electron-poor fused core with zero to three F/Cl.
// Both are built as graphs and written with write_smiles, so every output
// validates.
std::string synth_donor(Rng& rng);
std::string synth_acceptor(Rng& rng);

enum class MoleculeKind { Donor, Acceptor, Mixed };

std::vector<std::string> synth_molecules(uint64_t seed, int n, MoleculeKind kind = MoleculeKind::Mixed);

struct HomoLumo {
  double homo = 0.0;
  double lumo = 0.0;
};

// Deterministic stand-in for computed orbital energies; homo < lumo always.
HomoLumo synthetic_homo_lumo(const chem::MolecularGraph& graph);

// Mixed donors/acceptors labelled with synthetic_homo_lumo.
std::vector<MoleculeEntry> synth_molecule_corpus(uint64_t seed, int n);

// pce = clamp(base + aromatic_weight * aromatic_fraction(donor)
//             + halogen_weight * halogen_count(acceptor) + N(0, noise), 0, cap)
struct SyntheticPce {
  double base = 5.0;
  double aromatic_weight = 10.0;
  double halogen_weight = 1.5;
  double noise = 0.3;
  double cap = 20.0;
};

// Noise-free part of the formula before clamping.
double synthetic_pce_mean(const chem::MolecularGraph& donor, const chem::MolecularGraph& acceptor,
                          const SyntheticPce& params);

// Records with pce from the formula and jsc/voc/ff back-solved so that
// jsc * voc * ff / 100 == pce.
std::vector<PairRecord> synth_pairs(uint64_t seed, int n, const SyntheticPce& params = {});

}  // namespace opv::data
