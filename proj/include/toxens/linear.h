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

// L2-regularized logistic regression over sparse features, trained with
// L-BFGS.

#ifndef TOXENS_LINEAR_H_
#define TOXENS_LINEAR_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "toxens/features.h"

namespace toxens {

// Row-compressed sparse design matrix.
struct CsrMatrix {
  size_t cols = 0;
  std::vector<size_t> row_start{0};
  std::vector<uint32_t> index;
  std::vector<float> value;

  size_t rows() const { return row_start.size() - 1; }
  void AppendRow(const SparseVector& v);
};

struct LbfgsOptions {
  int history = 10;
  int max_iterations = 500;
  // Stop when |f_k - f_{k+1}| / max(|f_k|, 1) drops below this.
  double relative_tolerance = 1e-6;
};

struct LbfgsResult {
  double loss = 0;
  int iterations = 0;
  bool converged = false;
};

// Objective: returns f(x) and writes the gradient.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>* grad)>;

LbfgsResult MinimizeLbfgs(const Objective& f, std::vector<double>* x,
                          const LbfgsOptions& options = {});

// Binary: weights (cols) + bias. Loss = sum_i softplus(z_i) - y_i z_i
// + l2/2 ||w||^2, bias unregularized.
double BinaryLogisticObjective(const CsrMatrix& x, const std::vector<uint8_t>& y, double l2,
                               const std::vector<double>& params, std::vector<double>* grad);

// Multinomial: params = W (classes x cols) row-major followed by b (classes).
// Loss = sum_i logsumexp(z_i) - z_{i,y_i} + l2/2 ||W||^2.
double MultinomialLogisticObjective(const CsrMatrix& x, const std::vector<int>& y,
                                    size_t classes, double l2, const std::vector<double>& params,
                                    std::vector<double>* grad);

struct LogisticModel {
  bool multinomial = false;
  size_t classes = 0;
  size_t cols = 0;
  // One-vs-rest: classes blocks of (cols + 1). Multinomial: W then b.
  std::vector<double> params;
  std::vector<LbfgsResult> fits;

  std::vector<double> Predict(const SparseVector& v) const;
};

// One-vs-rest binary fits (multi-label) or a single multinomial fit
// (multi-class) on rows of `x` with per-row label vectors.
LogisticModel FitLogistic(const CsrMatrix& x, const std::vector<std::vector<uint8_t>>& labels,
                          bool multinomial, double l2, const LbfgsOptions& options = {});

}  // namespace toxens

#endif  // TOXENS_LINEAR_H_
