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

#include "opvforge/data/metrics.hpp"

#include <fstream>

#include <json.hpp>

#include "opvforge/common/error.hpp"

namespace opv::data {

using nlohmann::json;

void write_report_json(const std::string& path, const RegressionReport& r) {
  json epochs = json::array();
  for (const EpochMetrics& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}, {"lr", e.lr}});
  }
  const json j = {{"model", r.model},
                  {"init", r.init},
                  {"split", {{"seed", r.split_seed}, {"train", r.train_size}, {"val", r.val_size}, {"test", r.test_size}}},
                  {"epochs", epochs},
                  {"best_epoch", r.best_epoch},
                  {"train_mse", r.train_mse},
                  {"val_mse", r.val_mse},
                  {"test_mse", r.test_mse}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

RegressionReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("MissingFile: " + path);
  try {
    const json j = json::parse(in);
    RegressionReport r;
    r.model = j.at("model").get<std::string>();
    r.init = j.at("init").get<std::string>();
    const json& s = j.at("split");
    r.split_seed = s.at("seed").get<uint64_t>();
    r.train_size = s.at("train").get<size_t>();
    r.val_size = s.at("val").get<size_t>();
    r.test_size = s.at("test").get<size_t>();
    for (const json& e : j.at("epochs")) {
      r.epochs.push_back({e.at("epoch").get<int>(), e.at("train_mse").get<double>(), e.at("val_mse").get<double>(),
                          e.at("lr").get<double>()});
    }
    r.best_epoch = j.at("best_epoch").get<int>();
    r.train_mse = j.at("train_mse").get<double>();
    r.val_mse = j.at("val_mse").get<double>();
    r.test_mse = j.at("test_mse").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw DataError("malformed report " + path + ": " + e.what());
  }
}

double mean_squared_error(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.size() != actual.size() || predicted.empty()) {
    throw ShapeError("mean_squared_error needs equal, non-empty inputs");
  }
  double total = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    total += d * d;
  }
  return total / static_cast<double>(predicted.size());
}

}  // namespace opv::data
