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

// Independent reference implementations used by the unit tests and the
// acceptance suite. Everything here is written with plain scalar loops and
// shares no code with the library kernels.

#ifndef TOXENS_TESTS_ORACLES_H_
#define TOXENS_TESTS_ORACLES_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // rows

// Packed LSTM parameters: W (4H x D), U (4H x H), b (4H), gates i, f, g, o.
std::pair<Vec, Vec> Lstm(const Vec& x, const Vec& h, const Vec& c, const Vec& w, const Vec& u,
                         const Vec& b);

// Packed GRU parameters: W (3H x D), U (3H x H), b (3H), gates z, r, n, with
// n = tanh(W_n x + U_n (r * h) + b_n) and h' = (1 - z) n + z h.
Vec Gru(const Vec& x, const Vec& h, const Vec& w, const Vec& u, const Vec& b);

struct Attention {
  Vec pooled;
  Vec weights;
};
// W (A x D) packed row-major.
Attention AttentionPool(const Mat& h, const Vec& w, const Vec& b, const Vec& context);

struct Filter {
  int width = 0;
  Vec w;  // width * embed, window-major
  double b = 0;
};
// x: length rows of embed values. One feature per filter, in order.
Vec ConvMaxPool(const Mat& x, const std::vector<Filter>& filters);

// Fraction of (positive, negative) pairs ranked correctly, ties count half.
double AucByPairs(const Vec& scores, const std::vector<uint8_t>& gold);

struct Prf1 {
  double p = 0, r = 0, f1 = 0;
};
Prf1 Prf1Of(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gold);

// F1 of the rule score >= t.
double F1At(const Vec& scores, const std::vector<uint8_t>& gold, double t);

double Pearson(const Vec& a, const Vec& b);

struct Stump {
  int feature = -1;
  double threshold = 0;
  double gain = 0;
  double left_value = 0;   // raw Newton value, before shrinkage
  double right_value = 0;
};
// Best single split for logistic loss at a constant base score, over every
// feature and every midpoint between consecutive distinct values. Ties go to
// the lower threshold, then the lower feature index.
Stump BestStump(const Mat& x, const std::vector<uint8_t>& y, double base_score, size_t min_leaf,
                double lambda);

// Best training accuracy of any unigram linear classifier on the four
// two-marker patterns (alpha|gamma) x (beta|delta) with label alpha XOR beta
// and pattern counts n[a][b]. Unigram tf-idf rows with equal norms are affine
// in (a, b), so the achievable labelings are those with f(0,0) + f(1,1) =
// f(0,1) + f(1,0) in the score sense; this enumerates all 16 labelings and
// keeps the linearly separable ones.
double BestLinearXorAccuracy(const size_t n[2][2]);

}  // namespace oracle

#endif  // TOXENS_TESTS_ORACLES_H_
