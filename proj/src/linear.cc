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

#include "toxens/linear.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "toxens/common.h"

namespace toxens {

void CsrMatrix::AppendRow(const SparseVector& v) {
  for (const auto& e : v.entries) {
    index.push_back(e.index);
    value.push_back(static_cast<float>(e.weight));
  }
  row_start.push_back(index.size());
}

namespace {

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LbfgsResult MinimizeLbfgs(const Objective& f, std::vector<double>* x,
                          const LbfgsOptions& options) {
  const size_t n = x->size();
  std::vector<double> g(n), g_new(n), d(n), x_new(n);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  LbfgsResult res;
  double fx = f(*x, &g);
  if (!std::isfinite(fx)) Fail(ErrorKind::kTraining, "non-finite loss at L-BFGS start");
  for (int it = 0; it < options.max_iterations; ++it) {
    // Two-loop recursion.
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * Dot(s_hist[k], d);
      for (size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      gamma = Dot(s_hist.back(), y_hist.back()) / Dot(y_hist.back(), y_hist.back());
    } else {
      const double gn = std::sqrt(Dot(g, g));
      gamma = gn > 0 ? 1.0 / gn : 1.0;
    }
    for (auto& v : d) v *= gamma;
    for (size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * Dot(y_hist[k], d);
      for (size_t i = 0; i < n; ++i) d[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    for (auto& v : d) v = -v;
    double slope = Dot(g, d);
    if (slope >= 0) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = g;
      for (auto& v : d) v = -v;
      slope = Dot(g, d);
      if (slope == 0) {
        res.converged = true;
        break;
      }
    }
    // Backtracking Armijo search.
    double step = 1.0;
    double f_new = 0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (size_t i = 0; i < n; ++i) x_new[i] = (*x)[i] + step * d[i];
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) {
      res.converged = true;  // no further progress possible at machine precision
      break;
    }
    std::vector<double> s(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - (*x)[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = Dot(s, y);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double rel = std::abs(fx - f_new) / std::max(std::abs(fx), 1.0);
    x->swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (rel < options.relative_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.loss = fx;
  return res;
}

double BinaryLogisticObjective(const CsrMatrix& x, const std::vector<uint8_t>& y, double l2,
                               const std::vector<double>& params, std::vector<double>* grad) {
  const size_t d = x.cols;
  grad->assign(d + 1, 0.0);
  double loss = 0;
  const double bias = params[d];
  for (size_t r = 0; r < x.rows(); ++r) {
    double z = bias;
    for (size_t k = x.row_start[r]; k < x.row_start[r + 1]; ++k) {
      z += params[x.index[k]] * static_cast<double>(x.value[k]);
    }
    loss += Softplus(z) - (y[r] ? z : 0.0);
    const double dz = Sigmoid(z) - static_cast<double>(y[r]);
    for (size_t k = x.row_start[r]; k < x.row_start[r + 1]; ++k) {
      (*grad)[x.index[k]] += dz * static_cast<double>(x.value[k]);
    }
    (*grad)[d] += dz;
  }
  for (size_t j = 0; j < d; ++j) {
    loss += 0.5 * l2 * params[j] * params[j];
    (*grad)[j] += l2 * params[j];
  }
  return loss;
}

double MultinomialLogisticObjective(const CsrMatrix& x, const std::vector<int>& y,
                                    size_t classes, double l2, const std::vector<double>& params,
                                    std::vector<double>* grad) {
  const size_t d = x.cols;
  const size_t bias_off = classes * d;
  grad->assign(classes * (d + 1), 0.0);
  double loss = 0;
  std::vector<double> z(classes), p(classes);
  for (size_t r = 0; r < x.rows(); ++r) {
    for (size_t c = 0; c < classes; ++c) {
      double s = params[bias_off + c];
      for (size_t k = x.row_start[r]; k < x.row_start[r + 1]; ++k) {
        s += params[c * d + x.index[k]] * static_cast<double>(x.value[k]);
      }
      z[c] = s;
    }
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (size_t c = 0; c < classes; ++c) sum += (p[c] = std::exp(z[c] - m));
    const double lse = m + std::log(sum);
    loss += lse - z[static_cast<size_t>(y[r])];
    for (size_t c = 0; c < classes; ++c) {
      const double dz = p[c] / sum - (static_cast<int>(c) == y[r] ? 1.0 : 0.0);
      for (size_t k = x.row_start[r]; k < x.row_start[r + 1]; ++k) {
        (*grad)[c * d + x.index[k]] += dz * static_cast<double>(x.value[k]);
      }
      (*grad)[bias_off + c] += dz;
    }
  }
  for (size_t j = 0; j < bias_off; ++j) {
    loss += 0.5 * l2 * params[j] * params[j];
    (*grad)[j] += l2 * params[j];
  }
  return loss;
}

std::vector<double> LogisticModel::Predict(const SparseVector& v) const {
  std::vector<double> out(classes);
  if (multinomial) {
    std::vector<double> z(classes);
    for (size_t c = 0; c < classes; ++c) {
      double s = params[classes * cols + c];
      for (const auto& e : v.entries) {
        if (e.index < cols) s += params[c * cols + e.index] * e.weight;
      }
      z[c] = s;
    }
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (size_t c = 0; c < classes; ++c) sum += (out[c] = std::exp(z[c] - m));
    for (auto& p : out) p /= sum;
    return out;
  }
  for (size_t c = 0; c < classes; ++c) {
    const double* w = params.data() + c * (cols + 1);
    double s = w[cols];
    for (const auto& e : v.entries) {
      if (e.index < cols) s += w[e.index] * e.weight;
    }
    out[c] = Sigmoid(s);
  }
  return out;
}

LogisticModel FitLogistic(const CsrMatrix& x, const std::vector<std::vector<uint8_t>>& labels,
                          bool multinomial, double l2, const LbfgsOptions& options) {
  if (labels.size() != x.rows()) Fail(ErrorKind::kInternal, "label rows differ from features");
  if (labels.empty()) Fail(ErrorKind::kConfiguration, "logistic regression on zero rows");
  LogisticModel m;
  m.multinomial = multinomial;
  m.classes = labels[0].size();
  m.cols = x.cols;
  if (multinomial) {
    std::vector<int> y(labels.size());
    for (size_t r = 0; r < labels.size(); ++r) {
      y[r] = static_cast<int>(std::max_element(labels[r].begin(), labels[r].end()) -
                              labels[r].begin());
    }
    m.params.assign(m.classes * (m.cols + 1), 0.0);
    auto f = [&](const std::vector<double>& p, std::vector<double>* g) {
      return MultinomialLogisticObjective(x, y, m.classes, l2, p, g);
    };
    m.fits.push_back(MinimizeLbfgs(f, &m.params, options));
    return m;
  }
  m.params.assign(m.classes * (m.cols + 1), 0.0);
  for (size_t c = 0; c < m.classes; ++c) {
    std::vector<uint8_t> y(labels.size());
    for (size_t r = 0; r < labels.size(); ++r) y[r] = labels[r][c];
    std::vector<double> p(m.cols + 1, 0.0);
    auto f = [&](const std::vector<double>& q, std::vector<double>* g) {
      return BinaryLogisticObjective(x, y, l2, q, g);
    };
    m.fits.push_back(MinimizeLbfgs(f, &p, options));
    std::copy(p.begin(), p.end(), m.params.begin() + static_cast<long>(c * (m.cols + 1)));
  }
  return m;
}

}  // namespace toxens
