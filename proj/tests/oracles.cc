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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace oracle {

namespace {

double Logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Row r of a packed (rows x cols) matrix dotted with v.
double RowDot(const Vec& m, size_t r, size_t cols, const Vec& v) {
  double s = 0;
  for (size_t j = 0; j < cols; ++j) s += m[r * cols + j] * v[j];
  return s;
}

}  // namespace

std::pair<Vec, Vec> Lstm(const Vec& x, const Vec& h, const Vec& c, const Vec& w, const Vec& u,
                         const Vec& b) {
  const size_t H = h.size(), D = x.size();
  Vec h_out(H), c_out(H);
  for (size_t k = 0; k < H; ++k) {
    auto pre = [&](size_t gate) {
      const size_t r = gate * H + k;
      return b[r] + RowDot(w, r, D, x) + RowDot(u, r, H, h);
    };
    const double i = Logistic(pre(0));
    const double f = Logistic(pre(1));
    const double g = std::tanh(pre(2));
    const double o = Logistic(pre(3));
    c_out[k] = f * c[k] + i * g;
    h_out[k] = o * std::tanh(c_out[k]);
  }
  return {h_out, c_out};
}

Vec Gru(const Vec& x, const Vec& h, const Vec& w, const Vec& u, const Vec& b) {
  const size_t H = h.size(), D = x.size();
  Vec r(H), z(H);
  for (size_t k = 0; k < H; ++k) {
    z[k] = Logistic(b[k] + RowDot(w, k, D, x) + RowDot(u, k, H, h));
    r[k] = Logistic(b[H + k] + RowDot(w, H + k, D, x) + RowDot(u, H + k, H, h));
  }
  Vec rh(H);
  for (size_t k = 0; k < H; ++k) rh[k] = r[k] * h[k];
  Vec out(H);
  for (size_t k = 0; k < H; ++k) {
    const double n = std::tanh(b[2 * H + k] + RowDot(w, 2 * H + k, D, x) + RowDot(u, 2 * H + k, H, rh));
    out[k] = z[k] * h[k] + (1.0 - z[k]) * n;
  }
  return out;
}

Attention AttentionPool(const Mat& h, const Vec& w, const Vec& b, const Vec& context) {
  const size_t T = h.size(), D = h[0].size(), A = b.size();
  Vec score(T);
  for (size_t t = 0; t < T; ++t) {
    double s = 0;
    for (size_t a = 0; a < A; ++a) s += std::tanh(b[a] + RowDot(w, a, D, h[t])) * context[a];
    score[t] = s;
  }
  double z = 0;
  for (double s : score) z += std::exp(s);
  Attention out;
  out.pooled.assign(D, 0.0);
  for (size_t t = 0; t < T; ++t) {
    const double alpha = std::exp(score[t]) / z;
    out.weights.push_back(alpha);
    for (size_t d = 0; d < D; ++d) out.pooled[d] += alpha * h[t][d];
  }
  return out;
}

Vec ConvMaxPool(const Mat& x, const std::vector<Filter>& filters) {
  const size_t L = x.size(), E = x[0].size();
  Vec out;
  for (const auto& f : filters) {
    const size_t w = static_cast<size_t>(f.width);
    double best = 0;  // ReLU floor
    for (size_t s = 0; s + w <= L; ++s) {
      double v = f.b;
      for (size_t j = 0; j < w; ++j) {
        for (size_t e = 0; e < E; ++e) v += f.w[j * E + e] * x[s + j][e];
      }
      best = std::max(best, v);
    }
    out.push_back(best);
  }
  return out;
}

double AucByPairs(const Vec& scores, const std::vector<uint8_t>& gold) {
  double wins = 0;
  size_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!gold[i]) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (gold[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

Prf1 Prf1Of(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gold) {
  double tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && gold[i]) ++tp;
    if (pred[i] && !gold[i]) ++fp;
    if (!pred[i] && gold[i]) ++fn;
  }
  Prf1 out;
  out.p = tp + fp > 0 ? tp / (tp + fp) : 0;
  out.r = tp + fn > 0 ? tp / (tp + fn) : 0;
  out.f1 = out.p + out.r > 0 ? 2 * out.p * out.r / (out.p + out.r) : 0;
  return out;
}

double F1At(const Vec& scores, const std::vector<uint8_t>& gold, double t) {
  std::vector<uint8_t> pred(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= t;
  return Prf1Of(pred, gold).f1;
}

double Pearson(const Vec& a, const Vec& b) {
  long double n = static_cast<long double>(a.size());
  long double sa = 0, sb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const long double ma = sa / n, mb = sb / n;
  long double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(cov / std::sqrt(va * vb));
}

Stump BestStump(const Mat& x, const std::vector<uint8_t>& y, double base_score, size_t min_leaf,
                double lambda) {
  const size_t n = x.size();
  const double p = Logistic(base_score);
  // Gradient and hessian are the same for every row with the same label.
  auto g_of = [&](size_t i) { return p - y[i]; };
  const double h_each = p * (1 - p);
  auto score = [&](double g, double h) { return g * g / (h + lambda); };
  double g_all = 0;
  for (size_t i = 0; i < n; ++i) g_all += g_of(i);
  const double root = score(g_all, h_each * static_cast<double>(n));
  Stump best;
  for (size_t f = 0; f < x[0].size(); ++f) {
    std::set<double> values;
    for (size_t i = 0; i < n; ++i) values.insert(x[i][f]);
    std::vector<double> v(values.begin(), values.end());
    for (size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = v[k] + (v[k + 1] - v[k]) / 2;
      if (!(t > v[k] && t < v[k + 1])) continue;
      double gl = 0, gr = 0;
      size_t nl = 0, nr = 0;
      for (size_t i = 0; i < n; ++i) {
        if (x[i][f] < t) {
          gl += g_of(i);
          ++nl;
        } else {
          gr += g_of(i);
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      const double hl = h_each * static_cast<double>(nl), hr = h_each * static_cast<double>(nr);
      const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - root);
      if (gain <= 1e-12) continue;
      const bool better = best.feature < 0 || gain > best.gain + 1e-12 ||
                          (std::abs(gain - best.gain) <= 1e-12 && t < best.threshold);
      if (better) best = {static_cast<int>(f), t, gain, -gl / (hl + lambda), -gr / (hr + lambda)};
    }
  }
  return best;
}

double BestLinearXorAccuracy(const size_t n[2][2]) {
  // A linear score s(a, b) = c + u a + v b. A labeling L of the four
  // patterns is realizable iff some (c, u, v) puts positives strictly above
  // zero and negatives at or below it; for four points at the corners of a
  // square that fails exactly for the two XOR-type labelings.
  double best = 0;
  double total = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) total += static_cast<double>(n[a][b]);
  for (int mask = 0; mask < 16; ++mask) {
    const int l00 = mask & 1, l01 = (mask >> 1) & 1, l10 = (mask >> 2) & 1, l11 = (mask >> 3) & 1;
    const bool xor_type = (l00 == l11) && (l01 == l10) && (l00 != l01);
    if (xor_type) continue;
    const int label[2][2] = {{l00, l01}, {l10, l11}};
    double correct = 0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (label[a][b] == (a != b)) correct += static_cast<double>(n[a][b]);
      }
    }
    best = std::max(best, correct / total);
  }
  return best;
}

}  // namespace oracle
