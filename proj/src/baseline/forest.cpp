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

#include "opvforge/baseline/forest.hpp"

#include <algorithm>
#include <cmath>

#include "opvforge/chem/smiles.hpp"
#include "opvforge/chem/validate.hpp"
#include "opvforge/chem/wl_hash.hpp"
#include "opvforge/common/error.hpp"
#include "opvforge/common/hash.hpp"
#include "opvforge/common/parallel.hpp"

namespace opv::baseline {

void FingerprintConfig::check() const {
  if (radius < 0) throw UsageError("fingerprint radius must be >= 0");
  if (bits < 1 || (bits & (bits - 1)) != 0) throw UsageError("fingerprint length must be a power of two");
}

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> out;
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

int Fingerprint::count() const { return static_cast<int>(std::count(bits.begin(), bits.end(), uint8_t{1})); }

Fingerprint fingerprint(const chem::MolecularGraph& graph, const FingerprintConfig& config) {
  config.check();
  const int n = graph.atom_count();
  std::vector<uint64_t> ids(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) {
    uint64_t h = chem::atom_seed_color(graph.atoms()[static_cast<size_t>(a)]);
    h = hash_combine(h, static_cast<uint64_t>(graph.degree(a)));
    ids[static_cast<size_t>(a)] = hash_combine(h, graph.in_ring(a) ? 1 : 0);
  }
  Fingerprint fp;
  fp.bits.assign(static_cast<size_t>(config.bits), 0);
  const uint64_t mask = static_cast<uint64_t>(config.bits) - 1;
  auto set_all = [&]() {
    for (uint64_t id : ids) fp.bits[static_cast<size_t>(id & mask)] = 1;
  };
  set_all();
  for (int r = 1; r <= config.radius; ++r) {
    std::vector<uint64_t> next(ids.size());
    for (int a = 0; a < n; ++a) {
      std::vector<std::pair<int, uint64_t>> env;
      for (const chem::Neighbor& nb : graph.neighbors(a)) {
        env.emplace_back(static_cast<int>(graph.bonds()[static_cast<size_t>(nb.bond)].order),
                         ids[static_cast<size_t>(nb.atom)]);
      }
      std::sort(env.begin(), env.end());
      uint64_t h = hash_combine(ids[static_cast<size_t>(a)], static_cast<uint64_t>(r));
      for (const auto& [order, id] : env) h = hash_combine(hash_combine(h, static_cast<uint64_t>(order)), id);
      next[static_cast<size_t>(a)] = h;
    }
    ids = std::move(next);
    set_all();
  }
  return fp;
}

void ForestConfig::check() const {
  if (trees < 1) throw UsageError("forest needs at least one tree");
  if (max_depth < 0) throw UsageError("max_depth must be >= 0");
  if (min_samples_split < 2) throw UsageError("min_samples_split must be >= 2");
}

double RegressionTree::predict(const std::vector<int>& row_bits) const {
  int at = 0;
  while (nodes[static_cast<size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<size_t>(at)];
    at = std::binary_search(row_bits.begin(), row_bits.end(), node.feature) ? node.right : node.left;
  }
  return nodes[static_cast<size_t>(at)].value;
}

int RegressionTree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (nodes[i].feature >= 0) {
      depth[static_cast<size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const SparseRows& x, const std::vector<double>& y, const ForestConfig& config, Rng& rng)
      : x_(x),
        y_(y),
        config_(config),
        rng_(rng),
        candidates_(std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.features)))))),
        count_(static_cast<size_t>(x.features), 0),
        sum_(static_cast<size_t>(x.features), 0.0) {}

  RegressionTree build(std::vector<int> samples) {
    tree_.nodes.clear();
    grow(std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int> samples, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double total = 0.0;
    for (int s : samples) total += y_[static_cast<size_t>(s)];
    const double n = static_cast<double>(samples.size());
    tree_.nodes[static_cast<size_t>(id)].value = total / n;
    if (depth >= config_.max_depth || static_cast<int>(samples.size()) < config_.min_samples_split) return id;
    bool constant_y = true;
    for (int s : samples) constant_y = constant_y && y_[static_cast<size_t>(s)] == y_[static_cast<size_t>(samples[0])];
    if (constant_y) return id;

    // Per-feature counts and label sums over the rows with the bit set.
    std::vector<int> touched;
    for (int s : samples) {
      for (int f : x_.rows[static_cast<size_t>(s)]) {
        if (count_[static_cast<size_t>(f)] == 0) touched.push_back(f);
        ++count_[static_cast<size_t>(f)];
        sum_[static_cast<size_t>(f)] += y_[static_cast<size_t>(s)];
      }
    }
    std::sort(touched.begin(), touched.end());
    std::vector<int> varying;
    for (int f : touched) {
      if (count_[static_cast<size_t>(f)] < static_cast<int>(samples.size())) varying.push_back(f);
    }
    if (static_cast<int>(varying.size()) > candidates_) {
      for (int k = 0; k < candidates_; ++k) {
        const size_t pick = static_cast<size_t>(k) + rng_.below(varying.size() - static_cast<size_t>(k));
        std::swap(varying[static_cast<size_t>(k)], varying[pick]);
      }
      varying.resize(static_cast<size_t>(candidates_));
    }
    // Maximizing S_on^2 / n_on + S_off^2 / n_off minimizes the children's
    // summed squared error.
    int best_feature = -1;
    double best_score = total * total / n;
    for (int f : varying) {
      const double n_on = count_[static_cast<size_t>(f)];
      const double s_on = sum_[static_cast<size_t>(f)];
      const double score = s_on * s_on / n_on + (total - s_on) * (total - s_on) / (n - n_on);
      if (score > best_score + 1e-12 * std::abs(best_score)) {
        best_score = score;
        best_feature = f;
      }
    }
    for (int f : touched) {
      count_[static_cast<size_t>(f)] = 0;
      sum_[static_cast<size_t>(f)] = 0.0;
    }
    if (best_feature < 0) return id;

    std::vector<int> left, right;
    for (int s : samples) {
      const auto& row = x_.rows[static_cast<size_t>(s)];
      (std::binary_search(row.begin(), row.end(), best_feature) ? right : left).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<size_t>(id)];
    node.feature = best_feature;
    node.left = l;
    node.right = r;
    return id;
  }

  const SparseRows& x_;
  const std::vector<double>& y_;
  const ForestConfig& config_;
  Rng& rng_;
  int candidates_;
  std::vector<int> count_;
  std::vector<double> sum_;
  RegressionTree tree_;
};

}  // namespace

Forest Forest::fit(const SparseRows& x, const std::vector<double>& y, const ForestConfig& config) {
  config.check();
  if (x.rows.size() != y.size()) throw ShapeError("forest inputs differ in length");
  if (y.size() < 5) throw DataError("InsufficientData: a forest needs at least 5 samples");
  Forest forest;
  forest.trees_.resize(static_cast<size_t>(config.trees));
  parallel_for(forest.trees_.size(), [&](size_t t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<int> bootstrap(y.size());
    for (int& s : bootstrap) s = static_cast<int>(rng.below(y.size()));
    TreeBuilder builder(x, y, config, rng);
    forest.trees_[t] = builder.build(std::move(bootstrap));
  });
  return forest;
}

double Forest::predict(const std::vector<int>& row_bits) const {
  double total = 0.0;
  for (const RegressionTree& t : trees_) total += t.predict(row_bits);
  return total / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict(const SparseRows& x) const {
  std::vector<double> out;
  out.reserve(x.rows.size());
  for (const auto& row : x.rows) out.push_back(predict(row));
  return out;
}

SparseRows pair_features(const std::vector<data::PairRecord>& records, const FingerprintConfig& config) {
  config.check();
  SparseRows out;
  out.features = 2 * config.bits;
  out.rows.reserve(records.size());
  auto graph_of = [](const std::string& smiles, size_t i, const char* role) {
    const std::string where = "record " + std::to_string(i + 1) + " " + role;
    chem::MolecularGraph g;
    try {
      g = chem::parse(smiles);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!chem::validate(g).valid) throw DataError(where + ": invalid molecule " + smiles);
    return g;
  };
  for (size_t i = 0; i < records.size(); ++i) {
    std::vector<int> row = fingerprint(graph_of(records[i].donor_smiles, i, "donor"), config).on_bits();
    for (int b : fingerprint(graph_of(records[i].acceptor_smiles, i, "acceptor"), config).on_bits()) {
      row.push_back(b + config.bits);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

BaselineResult baseline_evaluate(const std::vector<data::PairRecord>& records, uint64_t split_seed,
                                 const FingerprintConfig& fp, const ForestConfig& forest_config) {
  BaselineResult result;
  result.split = data::split_indices(records.size(), split_seed);
  const SparseRows x = pair_features(records, fp);
  auto subset = [&](const std::vector<size_t>& idx, SparseRows* rows, std::vector<double>* y) {
    rows->features = x.features;
    for (size_t i : idx) {
      rows->rows.push_back(x.rows[i]);
      y->push_back(records[i].pce);
    }
  };
  SparseRows train_x, val_x, test_x;
  std::vector<double> train_y, val_y, test_y;
  subset(result.split.train, &train_x, &train_y);
  subset(result.split.val, &val_x, &val_y);
  subset(result.split.test, &test_x, &test_y);
  result.forest = Forest::fit(train_x, train_y, forest_config);

  data::RegressionReport& r = result.report;
  r.model = "fingerprint-forest";
  r.init = "n/a";
  r.split_seed = split_seed;
  r.train_size = train_y.size();
  r.val_size = val_y.size();
  r.test_size = test_y.size();
  r.train_mse = data::mean_squared_error(result.forest.predict(train_x), train_y);
  r.val_mse = data::mean_squared_error(result.forest.predict(val_x), val_y);
  r.test_mse = test_y.empty() ? 0.0 : data::mean_squared_error(result.forest.predict(test_x), test_y);
  return result;
}

}  // namespace opv::baseline
