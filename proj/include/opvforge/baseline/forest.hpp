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
#include <vector>

#include "opvforge/chem/molecule.hpp"
#include "opvforge/data/metrics.hpp"
#include "opvforge/data/records.hpp"

namespace opv::baseline {

struct FingerprintConfig {
  int radius = 2;
  int bits = 2048;  // power of two

  void check() const;  // throws UsageError
};

// Circular substructure fingerprint. Radius-0 identifiers hash the atom's
// seed color with its degree and ring flag; each further round hashes the
// previous identifier with the sorted (bond order, neighbor identifier)
// pairs. Every (atom, radius) identifier sets bit id mod bits.
struct Fingerprint {
  std::vector<uint8_t> bits;

  std::vector<int> on_bits() const;
  int count() const;
};

Fingerprint fingerprint(const chem::MolecularGraph& graph, const FingerprintConfig& config = {});

// Sparse binary design matrix: the set bits of each row, ascending.
struct SparseRows {
  std::vector<std::vector<int>> rows;
  int features = 0;
};

struct ForestConfig {
  int trees = 200;
  int max_depth = 16;
  int min_samples_split = 2;
  uint64_t seed = 0;

  void check() const;
};

// Split on one binary feature: rows with the bit set go right.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const std::vector<int>& row_bits) const;
  int depth() const;
};

// Bagged variance-reduction trees. Each node samples
// floor(sqrt(features)) candidates from the features that are not constant
// over the node's samples, and keeps the candidate with the largest drop in
// squared error. Tree t uses the seed stream derive_seed(seed, t).
class Forest {
 public:
  static Forest fit(const SparseRows& x, const std::vector<double>& y, const ForestConfig& config);

  const std::vector<RegressionTree>& trees() const { return trees_; }
  double predict(const std::vector<int>& row_bits) const;
  std::vector<double> predict(const SparseRows& x) const;

 private:
  std::vector<RegressionTree> trees_;
};

// Donor fingerprint followed by the acceptor fingerprint, bits offset by
// config.bits. Molecules must parse and validate.
SparseRows pair_features(const std::vector<data::PairRecord>& records, const FingerprintConfig& config = {});

struct BaselineResult {
  data::RegressionReport report;
  data::SplitIndices split;
  Forest forest;
};

// Fits on the training part of data::split_indices(split_seed) and reports
// MSE for all three parts in the predictor's report schema.
BaselineResult baseline_evaluate(const std::vector<data::PairRecord>& records, uint64_t split_seed,
                                 const FingerprintConfig& fp = {}, const ForestConfig& forest = {});

}  // namespace opv::baseline
