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

#include "toxens/gbdt.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "toxens/binary_io.h"
#include "toxens/common.h"

namespace toxens {

void GbdtConfig::Validate() const {
  if (rounds < 0 || max_depth < 1 || !(learning_rate > 0) || min_leaf < 1 || !(lambda >= 0)) {
    Fail(ErrorKind::kConfiguration, "invalid gbdt configuration");
  }
}

uint64_t GbdtConfig::Hash() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "gbdt|%d|%d|%.17g|%zu|%.17g|%llu", rounds, max_depth,
                learning_rate, min_leaf, lambda, static_cast<unsigned long long>(seed));
  return Fnv1a64(buf);
}

double RegressionTree::Predict(const double* x) const {
  int32_t n = 0;
  while (nodes[static_cast<size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<size_t>(n)];
    n = x[node.feature] < node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<size_t>(n)].value;
}

int RegressionTree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    for (int32_t c : {nodes[i].left, nodes[i].right}) {
      depth[static_cast<size_t>(c)] = depth[i] + 1;
      best = std::max(best, depth[i] + 1);
    }
  }
  return best;
}

double ClassBooster::PredictLogit(const double* x) const {
  double z = base_score;
  for (const auto& t : trees) z += t.Predict(x);
  return z;
}

std::vector<double> GbdtModel::Predict(const double* x) const {
  std::vector<double> out;
  out.reserve(boosters.size());
  for (const auto& b : boosters) out.push_back(Sigmoid(b.PredictLogit(x)));
  return out;
}

namespace {

struct Split {
  bool found = false;
  double gain = 0;
  int32_t feature = -1;
  double threshold = 0;
};

// Higher gain wins; gains within rounding noise of each other count as equal
// and prefer the lower threshold, then the lower feature index.
bool Better(const Split& a, const Split& b) {
  if (!b.found) return true;
  const double tol = 1e-12 * std::max(1.0, std::abs(b.gain));
  if (std::abs(a.gain - b.gain) > tol) return a.gain > b.gain;
  if (a.threshold != b.threshold) return a.threshold < b.threshold;
  return a.feature < b.feature;
}

double MeanLoss(const std::vector<double>& z, const std::vector<uint8_t>& y) {
  double s = 0;
  for (size_t i = 0; i < z.size(); ++i) s += Softplus(z[i]) - (y[i] ? z[i] : 0.0);
  return s / static_cast<double>(z.size());
}

class TreeGrower {
 public:
  TreeGrower(const std::vector<double>& x, size_t rows, size_t cols,
             const std::vector<std::vector<uint32_t>>& sorted, const GbdtConfig& config)
      : x_(x), rows_(rows), cols_(cols), sorted_(sorted), config_(config) {}

  // Grows one tree on gradients g and hessians h. Returns leaf assignment of
  // every row through `leaf_of`.
  RegressionTree Grow(const std::vector<double>& g, const std::vector<double>& h,
                      std::vector<int32_t>* leaf_of) const {
    RegressionTree tree;
    tree.nodes.push_back({});
    std::vector<int32_t> node_of(rows_, 0);
    std::vector<int32_t> active{0};
    for (int depth = 0; depth < config_.max_depth && !active.empty(); ++depth) {
      // Node totals.
      const size_t nn = tree.nodes.size();
      std::vector<double> G(nn, 0), H(nn, 0);
      std::vector<size_t> N(nn, 0);
      for (size_t i = 0; i < rows_; ++i) {
        const auto n = static_cast<size_t>(node_of[i]);
        G[n] += g[i];
        H[n] += h[i];
        ++N[n];
      }
      std::vector<uint8_t> is_active(nn, 0);
      for (int32_t a : active) is_active[static_cast<size_t>(a)] = 1;
      std::vector<Split> best(nn);
      std::vector<double> gl(nn), hl(nn), prev(nn);
      std::vector<size_t> cnt(nn);
      for (size_t f = 0; f < cols_; ++f) {
        std::fill(gl.begin(), gl.end(), 0.0);
        std::fill(hl.begin(), hl.end(), 0.0);
        std::fill(cnt.begin(), cnt.end(), 0);
        for (uint32_t i : sorted_[f]) {
          const auto n = static_cast<size_t>(node_of[i]);
          if (!is_active[n]) continue;
          const double v = x_[i * cols_ + f];
          if (cnt[n] > 0 && v != prev[n] && cnt[n] >= config_.min_leaf &&
              N[n] - cnt[n] >= config_.min_leaf) {
            const double mid = prev[n] + (v - prev[n]) / 2;
            if (prev[n] < mid && mid < v) {
              const double gr = G[n] - gl[n], hr = H[n] - hl[n];
              Split s;
              s.found = true;
              s.gain = gl[n] * gl[n] / (hl[n] + config_.lambda) +
                       gr * gr / (hr + config_.lambda) -
                       G[n] * G[n] / (H[n] + config_.lambda);
              s.feature = static_cast<int32_t>(f);
              s.threshold = mid;
              if (s.gain > 1e-12 && Better(s, best[n])) best[n] = s;
            }
          }
          gl[n] += g[i];
          hl[n] += h[i];
          ++cnt[n];
          prev[n] = v;
        }
      }
      std::vector<int32_t> next;
      for (int32_t a : active) {
        const auto& s = best[static_cast<size_t>(a)];
        if (!s.found) continue;
        const auto l = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& node = tree.nodes[static_cast<size_t>(a)];
        node.feature = s.feature;
        node.threshold = s.threshold;
        node.left = l;
        node.right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      for (size_t i = 0; i < rows_; ++i) {
        const auto& node = tree.nodes[static_cast<size_t>(node_of[i])];
        if (node.feature < 0) continue;
        node_of[i] = x_[i * cols_ + static_cast<size_t>(node.feature)] < node.threshold
                         ? node.left
                         : node.right;
      }
      active = std::move(next);
    }
    // Newton leaf values.
    std::vector<double> G(tree.nodes.size(), 0), H(tree.nodes.size(), 0);
    for (size_t i = 0; i < rows_; ++i) {
      G[static_cast<size_t>(node_of[i])] += g[i];
      H[static_cast<size_t>(node_of[i])] += h[i];
    }
    for (size_t n = 0; n < tree.nodes.size(); ++n) {
      if (tree.nodes[n].feature < 0) {
        tree.nodes[n].value = -config_.learning_rate * G[n] / (H[n] + config_.lambda);
      }
    }
    *leaf_of = std::move(node_of);
    return tree;
  }

 private:
  const std::vector<double>& x_;
  size_t rows_, cols_;
  const std::vector<std::vector<uint32_t>>& sorted_;
  const GbdtConfig& config_;
};

ClassBooster FitClass(const std::vector<double>& x, size_t rows, size_t cols,
                      const std::vector<std::vector<uint32_t>>& sorted,
                      const std::vector<uint8_t>& y, const std::string& name,
                      const GbdtConfig& config) {
  ClassBooster b;
  b.name = name;
  size_t pos = 0;
  for (uint8_t v : y) pos += v;
  const double rate = (static_cast<double>(pos) + 0.5) / (static_cast<double>(rows) + 1.0);
  b.base_score = std::log(rate / (1.0 - rate));
  std::vector<double> z(rows, b.base_score);
  b.loss_log.push_back(MeanLoss(z, y));
  if (pos == 0 || pos == rows) return b;
  TreeGrower grower(x, rows, cols, sorted, config);
  std::vector<double> g(rows), h(rows), z_new(rows);
  std::vector<int32_t> leaf_of;
  for (int round = 0; round < config.rounds; ++round) {
    for (size_t i = 0; i < rows; ++i) {
      const double p = Sigmoid(z[i]);
      g[i] = p - y[i];
      h[i] = std::max(p * (1 - p), 1e-16);
    }
    RegressionTree tree = grower.Grow(g, h, &leaf_of);
    const double old_loss = b.loss_log.back();
    double new_loss = old_loss;
    bool accepted = false;
    // Shrink the step until the training loss does not increase.
    for (int attempt = 0; attempt < 30; ++attempt) {
      for (size_t i = 0; i < rows; ++i) {
        z_new[i] = z[i] + tree.nodes[static_cast<size_t>(leaf_of[i])].value;
      }
      new_loss = MeanLoss(z_new, y);
      if (new_loss <= old_loss) {
        accepted = true;
        break;
      }
      for (auto& n : tree.nodes) n.value *= 0.5;
    }
    if (!accepted || tree.nodes.size() == 1) {
      b.loss_log.push_back(old_loss);
      if (tree.nodes.size() == 1) break;  // no admissible split remains
      continue;
    }
    z.swap(z_new);
    b.trees.push_back(std::move(tree));
    b.loss_log.push_back(new_loss);
  }
  return b;
}

}  // namespace

GbdtModel GbdtFit(const std::vector<double>& x, const std::vector<std::string>& feature_names,
                  const std::vector<std::vector<uint8_t>>& labels,
                  const std::vector<std::string>& classes, const GbdtConfig& config,
                  int threads) {
  config.Validate();
  const size_t cols = feature_names.size();
  const size_t rows = labels.size();
  if (x.size() != rows * cols) Fail(ErrorKind::kInternal, "gbdt feature matrix shape mismatch");
  if (rows == 0) Fail(ErrorKind::kConfiguration, "gbdt on zero rows");
  for (double v : x) {
    if (!std::isfinite(v)) Fail(ErrorKind::kValidation, "non-finite stacking feature");
  }
  std::vector<std::vector<uint32_t>> sorted(cols);
  for (size_t f = 0; f < cols; ++f) {
    auto& s = sorted[f];
    s.resize(rows);
    std::iota(s.begin(), s.end(), 0u);
    std::stable_sort(s.begin(), s.end(),
                     [&](uint32_t a, uint32_t b) { return x[a * cols + f] < x[b * cols + f]; });
  }
  GbdtModel model;
  model.config = config;
  model.feature_names = feature_names;
  model.boosters.resize(classes.size());
  auto fit = [&](size_t c) {
    std::vector<uint8_t> y(rows);
    for (size_t r = 0; r < rows; ++r) y[r] = labels[r][c];
    model.boosters[c] = FitClass(x, rows, cols, sorted, y, classes[c], config);
  };
  ParallelFor(classes.size(), threads, fit);
  return model;
}

std::string GbdtModel::DumpTrees() const {
  std::string out;
  char buf[256];
  for (const auto& b : boosters) {
    std::snprintf(buf, sizeof(buf), "class %s base_score=%.9g trees=%zu\n", b.name.c_str(),
                  b.base_score, b.trees.size());
    out += buf;
    for (size_t t = 0; t < b.trees.size(); ++t) {
      out += "  tree " + std::to_string(t) + "\n";
      const auto& nodes = b.trees[t].nodes;
      // Depth-first, children indented under their parent.
      std::vector<std::pair<int32_t, int>> stack{{0, 0}};
      while (!stack.empty()) {
        const auto [id, depth] = stack.back();
        stack.pop_back();
        const auto& n = nodes[static_cast<size_t>(id)];
        const std::string indent(static_cast<size_t>(4 + 2 * depth), ' ');
        if (n.feature < 0) {
          std::snprintf(buf, sizeof(buf), "%s%d: leaf=%.9g\n", indent.c_str(), id, n.value);
        } else {
          std::snprintf(buf, sizeof(buf), "%s%d: [%s < %.9g] yes=%d no=%d\n", indent.c_str(), id,
                        feature_names[static_cast<size_t>(n.feature)].c_str(), n.threshold,
                        n.left, n.right);
          stack.push_back({n.right, depth + 1});
          stack.push_back({n.left, depth + 1});
        }
        out += buf;
      }
    }
  }
  return out;
}

void GbdtModel::Save(const std::string& path) const {
  BinaryWriter w("TXGB", 1, config.Hash());
  w.Put<int32_t>(config.rounds);
  w.Put<int32_t>(config.max_depth);
  w.Put<double>(config.learning_rate);
  w.Put<uint64_t>(config.min_leaf);
  w.Put<double>(config.lambda);
  w.Put<uint64_t>(config.seed);
  w.Put<uint64_t>(feature_names.size());
  for (const auto& f : feature_names) w.PutString(f);
  w.Put<uint64_t>(boosters.size());
  for (const auto& b : boosters) {
    w.PutString(b.name);
    w.Put<double>(b.base_score);
    w.PutVector(b.loss_log);
    w.Put<uint64_t>(b.trees.size());
    for (const auto& t : b.trees) {
      w.Put<uint64_t>(t.nodes.size());
      for (const auto& n : t.nodes) {
        w.Put<int32_t>(n.feature);
        w.Put<double>(n.threshold);
        w.Put<int32_t>(n.left);
        w.Put<int32_t>(n.right);
        w.Put<double>(n.value);
      }
    }
  }
  w.WriteFile(path);
}

GbdtModel GbdtModel::Load(const std::string& path, uint64_t expected_config_hash) {
  auto r = BinaryReader::FromFile(path, "TXGB", 1, expected_config_hash);
  GbdtModel m;
  m.config.rounds = r.Get<int32_t>();
  m.config.max_depth = r.Get<int32_t>();
  m.config.learning_rate = r.Get<double>();
  m.config.min_leaf = r.Get<uint64_t>();
  m.config.lambda = r.Get<double>();
  m.config.seed = r.Get<uint64_t>();
  if (m.config.Hash() != r.config_hash()) Fail(ErrorKind::kParse, "gbdt config hash mismatch");
  const auto nf = r.Get<uint64_t>();
  for (uint64_t i = 0; i < nf; ++i) m.feature_names.push_back(r.GetString());
  const auto nb = r.Get<uint64_t>();
  for (uint64_t i = 0; i < nb; ++i) {
    ClassBooster b;
    b.name = r.GetString();
    b.base_score = r.Get<double>();
    b.loss_log = r.GetVector<double>();
    const auto nt = r.Get<uint64_t>();
    for (uint64_t t = 0; t < nt; ++t) {
      RegressionTree tree;
      const auto nn = r.Get<uint64_t>();
      for (uint64_t k = 0; k < nn; ++k) {
        TreeNode n;
        n.feature = r.Get<int32_t>();
        n.threshold = r.Get<double>();
        n.left = r.Get<int32_t>();
        n.right = r.Get<int32_t>();
        n.value = r.Get<double>();
        const auto limit = static_cast<int32_t>(nn);
        if (n.feature >= static_cast<int32_t>(nf) ||
            (n.feature >= 0 && (n.left <= 0 || n.left >= limit || n.right <= 0 || n.right >= limit))) {
          Fail(ErrorKind::kParse, "gbdt file has a malformed tree");
        }
        tree.nodes.push_back(n);
      }
      b.trees.push_back(std::move(tree));
    }
    m.boosters.push_back(std::move(b));
  }
  if (!r.AtEnd()) Fail(ErrorKind::kParse, "trailing bytes in gbdt file");
  return m;
}

}  // namespace toxens
