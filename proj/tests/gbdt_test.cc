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

#include <cmath>
#include <filesystem>
#include <functional>

#include "doctest.h"
#include "oracles.h"
#include "toxens/common.h"
#include "toxens/gbdt.h"

namespace toxens {
namespace {

struct Data {
  size_t rows = 0, cols = 0;
  std::vector<double> x;
  std::vector<std::vector<uint8_t>> labels;
  std::vector<std::string> names;
};

Data RandomData(uint64_t seed, size_t rows, size_t cols, bool coarse) {
  CounterRng rng(seed, 0);
  Data d;
  d.rows = rows;
  d.cols = cols;
  for (size_t j = 0; j < cols; ++j) d.names.push_back("f" + std::to_string(j));
  for (size_t r = 0; r < rows; ++r) {
    double s = 0;
    for (size_t j = 0; j < cols; ++j) {
      const double v = coarse ? static_cast<double>(rng.NextBelow(6)) : rng.NextDouble();
      d.x.push_back(v);
      s += (j % 2 ? -1 : 1) * v;
    }
    d.labels.push_back({static_cast<uint8_t>(s + rng.Uniform(-1, 1) > 0)});
  }
  return d;
}

oracle::Mat Rows(const Data& d) {
  oracle::Mat m(d.rows);
  for (size_t r = 0; r < d.rows; ++r) m[r].assign(d.x.begin() + r * d.cols, d.x.begin() + (r + 1) * d.cols);
  return m;
}

TEST_CASE("single stump matches the exhaustive search") {
  int checked = 0;
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    const Data d = RandomData(seed, 12 + seed % 9, 1 + seed % 3, seed % 2 == 0);
    GbdtConfig cfg;
    cfg.rounds = 1;
    cfg.max_depth = 1;
    cfg.min_leaf = 1 + seed % 3;
    cfg.lambda = 1.0;
    cfg.learning_rate = 0.3;
    const GbdtModel m = GbdtFit(d.x, d.names, d.labels, {"y"}, cfg);
    const auto& b = m.boosters[0];
    size_t pos = 0;
    std::vector<uint8_t> y;
    for (const auto& l : d.labels) {
      pos += l[0];
      y.push_back(l[0]);
    }
    if (pos == 0 || pos == d.rows) continue;
    const double base = std::log((pos + 0.5) / (d.rows - pos + 0.5));
    CHECK(b.base_score == doctest::Approx(base).epsilon(1e-12));
    const auto o = oracle::BestStump(Rows(d), y, base, cfg.min_leaf, cfg.lambda);
    REQUIRE(b.trees.size() == 1);
    const auto& nodes = b.trees[0].nodes;
    if (o.feature < 0) {
      CHECK(nodes.size() == 1);
      continue;
    }
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].feature == o.feature);
    CHECK(nodes[0].threshold == doctest::Approx(o.threshold).epsilon(1e-12));
    CHECK(nodes[nodes[0].left].value == doctest::Approx(cfg.learning_rate * o.left_value).epsilon(1e-9));
    CHECK(nodes[nodes[0].right].value == doctest::Approx(cfg.learning_rate * o.right_value).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("training loss never increases") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Data d = RandomData(100 + seed, 300, 4, false);
    GbdtConfig cfg;
    cfg.rounds = 40;
    cfg.seed = seed;
    const GbdtModel m = GbdtFit(d.x, d.names, d.labels, {"y"}, cfg);
    const auto& log = m.boosters[0].loss_log;
    REQUIRE(log.size() == 41);
    for (size_t i = 1; i < log.size(); ++i) CHECK(log[i] <= log[i - 1] + 1e-12);
  }
}

TEST_CASE("constant labels give the smoothed base rate") {
  Data d = RandomData(3, 50, 2, false);
  for (auto& l : d.labels) l = {0, 1};
  const GbdtModel m = GbdtFit(d.x, d.names, d.labels, {"never", "always"}, GbdtConfig{});
  CHECK(m.boosters[0].trees.empty());
  CHECK(m.boosters[1].trees.empty());
  for (size_t r = 0; r < d.rows; ++r) {
    const auto p = m.Predict(d.x.data() + r * d.cols);
    CHECK(p[0] == doctest::Approx(0.5 / 51).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(50.5 / 51).epsilon(1e-12));
  }
}

TEST_CASE("a separating feature reaches full training accuracy") {
  Data d;
  d.cols = 2;
  d.names = {"noise", "signal"};
  CounterRng rng(8, 0);
  for (size_t r = 0; r < 200; ++r) {
    const bool y = r % 2;
    d.x.push_back(rng.NextDouble());
    d.x.push_back(y ? 0.6 + 0.4 * rng.NextDouble() : 0.4 * rng.NextDouble());
    d.labels.push_back({static_cast<uint8_t>(y)});
  }
  d.rows = 200;
  GbdtConfig cfg;
  cfg.max_depth = 1;
  cfg.rounds = 30;
  const GbdtModel m = GbdtFit(d.x, d.names, d.labels, {"y"}, cfg);
  size_t correct = 0;
  for (size_t r = 0; r < d.rows; ++r) {
    correct += (m.Predict(d.x.data() + r * 2)[0] >= 0.5) == static_cast<bool>(d.labels[r][0]);
  }
  CHECK(correct == d.rows);
}

TEST_CASE("split thresholds lie strictly between observed values and depth is bounded") {
  for (int depth = 1; depth <= 4; ++depth) {
    const Data d = RandomData(20 + depth, 400, 3, depth % 2 == 0);
    GbdtConfig cfg;
    cfg.max_depth = depth;
    cfg.rounds = 10;
    cfg.min_leaf = 5;
    const GbdtModel m = GbdtFit(d.x, d.names, d.labels, {"y"}, cfg);
    for (const auto& tree : m.boosters[0].trees) {
      CHECK(tree.Depth() <= depth);
      std::function<void(int32_t, std::vector<size_t>)> walk = [&](int32_t id, std::vector<size_t> rows) {
        const TreeNode& n = tree.nodes[id];
        if (n.feature < 0) return;
        bool below = false, above = false;
        std::vector<size_t> l, r;
        for (size_t row : rows) {
          const double v = d.x[row * d.cols + n.feature];
          CHECK(v != n.threshold);
          below |= v < n.threshold;
          above |= v > n.threshold;
          (v < n.threshold ? l : r).push_back(row);
        }
        CHECK(below);
        CHECK(above);
        walk(n.left, l);
        walk(n.right, r);
      };
      std::vector<size_t> all(d.rows);
      for (size_t i = 0; i < d.rows; ++i) all[i] = i;
      walk(0, all);
    }
  }
}

TEST_CASE("model round trip and config hash") {
  const Data d = RandomData(77, 120, 3, false);
  GbdtConfig cfg;
  cfg.rounds = 5;
  const GbdtModel m = GbdtFit(d.x, d.names, d.labels, {"y"}, cfg);
  const auto path = (std::filesystem::temp_directory_path() / "toxens_gbdt_test.txgb").string();
  m.Save(path);
  const GbdtModel back = GbdtModel::Load(path, cfg.Hash());
  CHECK(back.DumpTrees() == m.DumpTrees());
  for (size_t r = 0; r < d.rows; ++r) {
    CHECK(back.Predict(d.x.data() + r * 3) == m.Predict(d.x.data() + r * 3));
  }
  GbdtConfig other = cfg;
  other.rounds = 6;
  CHECK_THROWS_AS(GbdtModel::Load(path, other.Hash()), Error);
  std::filesystem::remove(path);

  GbdtConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.Validate(), Error);
}

}  // namespace
}  // namespace toxens
