/*
 * Copyright 2026 The toxens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Gradient-boosted regression trees with logistic loss, one booster per
// class.

#ifndef TOXENS_GBDT_H_
#define TOXENS_GBDT_H_

#include <cstdint>
#include <string>
#include <vector>

namespace toxens {

struct GbdtConfig {
  int rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  size_t min_leaf = 20;
  // L2 penalty on leaf values.
  double lambda = 1.0;
  uint64_t seed = 1;

  void Validate() const;
  uint64_t Hash() const;
};

// Flat binary tree. A node with feature < 0 is a leaf.
struct TreeNode {
  int32_t feature = -1;
  double threshold = 0;
  int32_t left = -1;
  int32_t right = -1;
  double value = 0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  // Goes left when x[feature] < threshold.
  double Predict(const double* x) const;
  int Depth() const;
};

struct ClassBooster {
  std::string name;
  // Log-odds of (positives + 0.5) / (n + 1).
  double base_score = 0;
  std::vector<RegressionTree> trees;
  // Mean training loss before the first round, then after each round.
  std::vector<double> loss_log;

  double PredictLogit(const double* x) const;
};

struct GbdtModel {
  GbdtConfig config;
  std::vector<std::string> feature_names;
  std::vector<ClassBooster> boosters;

  // Per-class probabilities for one feature row.
  std::vector<double> Predict(const double* x) const;
  std::string DumpTrees() const;
  void Save(const std::string& path) const;
  static GbdtModel Load(const std::string& path, uint64_t expected_config_hash = 0);
};

// `x` is row-major rows x feature_names.size(); labels[r][c] in {0,1}. A class
// with constant labels gets no trees. Classes are fitted in parallel.
GbdtModel GbdtFit(const std::vector<double>& x, const std::vector<std::string>& feature_names,
                  const std::vector<std::vector<uint8_t>>& labels,
                  const std::vector<std::string>& classes, const GbdtConfig& config,
                  int threads = 1);

}  // namespace toxens

#endif  // TOXENS_GBDT_H_
