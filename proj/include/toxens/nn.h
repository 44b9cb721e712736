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

// Forward and backward kernels for the recurrent, attention and convolutional
// building blocks. All kernels are templated on the scalar type so the same
// code runs in float for training and in double for gradient certification.
//
// Weight layouts are row-major. Gate blocks are stacked along the rows:
//   LSTM: W (4H x D), U (4H x H), b (4H), gate order input, forget,
//         candidate, output.
//   GRU:  W (3H x D), U (3H x H), b (3H), gate order update, reset,
//         candidate. h' = (1 - z) * n + z * h.

#ifndef TOXENS_NN_H_
#define TOXENS_NN_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "toxens/common.h"

namespace toxens::nn {

template <typename T>
using Vec = std::vector<T>;

// y += A x, A is rows x cols.
template <typename T>
inline void MatVecAdd(const T* a, size_t rows, size_t cols, const T* x, T* y) {
  for (size_t r = 0; r < rows; ++r) {
    const T* row = a + r * cols;
    T s = 0;
    for (size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

// y += A^T x, A is rows x cols, x has rows entries.
template <typename T>
inline void MatTVecAdd(const T* a, size_t rows, size_t cols, const T* x, T* y) {
  for (size_t r = 0; r < rows; ++r) {
    const T xr = x[r];
    if (xr == T(0)) continue;
    const T* row = a + r * cols;
    for (size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

// A += u v^T.
template <typename T>
inline void OuterAdd(T* a, size_t rows, size_t cols, const T* u, const T* v) {
  for (size_t r = 0; r < rows; ++r) {
    const T ur = u[r];
    if (ur == T(0)) continue;
    T* row = a + r * cols;
    for (size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

template <typename T>
struct CellParams {
  size_t input = 0;
  size_t hidden = 0;
  const T* w = nullptr;
  const T* u = nullptr;
  const T* b = nullptr;
};

template <typename T>
struct CellGrads {
  T* w = nullptr;
  T* u = nullptr;
  T* b = nullptr;
};

// Activations of one LSTM step kept for the backward pass.
template <typename T>
struct LstmStep {
  Vec<T> i, f, g, o, c, tanh_c, h;
};

template <typename T>
void LstmForward(std::span<const T> x, std::span<const T> h_prev,
                 std::span<const T> c_prev, const CellParams<T>& p,
                 LstmStep<T>* step) {
  const size_t H = p.hidden;
  Vec<T> a(p.b, p.b + 4 * H);
  MatVecAdd(p.w, 4 * H, p.input, x.data(), a.data());
  MatVecAdd(p.u, 4 * H, H, h_prev.data(), a.data());
  step->i.resize(H);
  step->f.resize(H);
  step->g.resize(H);
  step->o.resize(H);
  step->c.resize(H);
  step->tanh_c.resize(H);
  step->h.resize(H);
  for (size_t k = 0; k < H; ++k) {
    step->i[k] = Sigmoid(a[k]);
    step->f[k] = Sigmoid(a[H + k]);
    step->g[k] = std::tanh(a[2 * H + k]);
    step->o[k] = Sigmoid(a[3 * H + k]);
    step->c[k] = step->f[k] * c_prev[k] + step->i[k] * step->g[k];
    step->tanh_c[k] = std::tanh(step->c[k]);
    step->h[k] = step->o[k] * step->tanh_c[k];
  }
}

// Returns (h, c).
template <typename T>
std::pair<Vec<T>, Vec<T>> LstmCell(std::span<const T> x, std::span<const T> h_prev,
                                   std::span<const T> c_prev, const CellParams<T>& p) {
  LstmStep<T> s;
  LstmForward(x, h_prev, c_prev, p, &s);
  return {std::move(s.h), std::move(s.c)};
}

// dh: gradient w.r.t. h_t; dc: gradient w.r.t. c_t flowing back from t+1.
// Accumulates parameter gradients, adds to dx, and writes dh_prev/dc_prev.
template <typename T>
void LstmBackward(std::span<const T> x, std::span<const T> h_prev,
                  std::span<const T> c_prev, const CellParams<T>& p,
                  const LstmStep<T>& s, std::span<const T> dh, std::span<const T> dc,
                  const CellGrads<T>& g, T* dx, T* dh_prev, T* dc_prev) {
  const size_t H = p.hidden;
  Vec<T> da(4 * H);
  for (size_t k = 0; k < H; ++k) {
    const T d_o = dh[k] * s.tanh_c[k];
    const T d_c = dc[k] + dh[k] * s.o[k] * (T(1) - s.tanh_c[k] * s.tanh_c[k]);
    const T d_i = d_c * s.g[k];
    const T d_g = d_c * s.i[k];
    const T d_f = d_c * c_prev[k];
    dc_prev[k] = d_c * s.f[k];
    da[k] = d_i * s.i[k] * (T(1) - s.i[k]);
    da[H + k] = d_f * s.f[k] * (T(1) - s.f[k]);
    da[2 * H + k] = d_g * (T(1) - s.g[k] * s.g[k]);
    da[3 * H + k] = d_o * s.o[k] * (T(1) - s.o[k]);
  }
  OuterAdd(g.w, 4 * H, p.input, da.data(), x.data());
  OuterAdd(g.u, 4 * H, H, da.data(), h_prev.data());
  for (size_t k = 0; k < 4 * H; ++k) g.b[k] += da[k];
  if (dx) MatTVecAdd(p.w, 4 * H, p.input, da.data(), dx);
  std::fill(dh_prev, dh_prev + H, T(0));
  MatTVecAdd(p.u, 4 * H, H, da.data(), dh_prev);
}

template <typename T>
struct GruStep {
  Vec<T> z, r, n, rh, h;
};

template <typename T>
void GruForward(std::span<const T> x, std::span<const T> h_prev, const CellParams<T>& p,
                GruStep<T>* step) {
  const size_t H = p.hidden;
  const size_t D = p.input;
  // Input contributions for all three blocks.
  Vec<T> ax(p.b, p.b + 3 * H);
  MatVecAdd(p.w, 3 * H, D, x.data(), ax.data());
  // Recurrent contributions for update and reset gates.
  Vec<T> ah(2 * H, T(0));
  MatVecAdd(p.u, 2 * H, H, h_prev.data(), ah.data());
  step->z.resize(H);
  step->r.resize(H);
  step->n.resize(H);
  step->rh.resize(H);
  step->h.resize(H);
  for (size_t k = 0; k < H; ++k) {
    step->z[k] = Sigmoid(ax[k] + ah[k]);
    step->r[k] = Sigmoid(ax[H + k] + ah[H + k]);
    step->rh[k] = step->r[k] * h_prev[k];
  }
  Vec<T> an(ax.begin() + static_cast<long>(2 * H), ax.end());
  MatVecAdd(p.u + 2 * H * H, H, H, step->rh.data(), an.data());
  for (size_t k = 0; k < H; ++k) {
    step->n[k] = std::tanh(an[k]);
    step->h[k] = (T(1) - step->z[k]) * step->n[k] + step->z[k] * h_prev[k];
  }
}

template <typename T>
Vec<T> GruCell(std::span<const T> x, std::span<const T> h_prev, const CellParams<T>& p) {
  GruStep<T> s;
  GruForward(x, h_prev, p, &s);
  return std::move(s.h);
}

template <typename T>
void GruBackward(std::span<const T> x, std::span<const T> h_prev, const CellParams<T>& p,
                 const GruStep<T>& s, std::span<const T> dh, const CellGrads<T>& g,
                 T* dx, T* dh_prev) {
  const size_t H = p.hidden;
  const size_t D = p.input;
  Vec<T> da(3 * H);
  for (size_t k = 0; k < H; ++k) {
    dh_prev[k] = dh[k] * s.z[k];
    const T d_z = dh[k] * (h_prev[k] - s.n[k]);
    const T d_n = dh[k] * (T(1) - s.z[k]);
    da[k] = d_z * s.z[k] * (T(1) - s.z[k]);
    da[2 * H + k] = d_n * (T(1) - s.n[k] * s.n[k]);
  }
  // Candidate block: a_n = W_n x + U_n (r * h) + b_n.
  const T* un = p.u + 2 * H * H;
  Vec<T> drh(H, T(0));
  MatTVecAdd(un, H, H, da.data() + 2 * H, drh.data());
  OuterAdd(g.u + 2 * H * H, H, H, da.data() + 2 * H, s.rh.data());
  for (size_t k = 0; k < H; ++k) {
    dh_prev[k] += drh[k] * s.r[k];
    const T d_r = drh[k] * h_prev[k];
    da[H + k] = d_r * s.r[k] * (T(1) - s.r[k]);
  }
  OuterAdd(g.w, 3 * H, D, da.data(), x.data());
  OuterAdd(g.u, 2 * H, H, da.data(), h_prev.data());
  for (size_t k = 0; k < 3 * H; ++k) g.b[k] += da[k];
  if (dx) MatTVecAdd(p.w, 3 * H, D, da.data(), dx);
  MatTVecAdd(p.u, 2 * H, H, da.data(), dh_prev);
}

// Elementwise mean of a forward sequence and a backward sequence that is
// stored in processing order (backward[0] belongs to the last timestep).
template <typename T>
std::vector<Vec<T>> BidirectionalCombine(const std::vector<Vec<T>>& forward,
                                         const std::vector<Vec<T>>& backward_processing_order) {
  if (forward.size() != backward_processing_order.size()) {
    Fail(ErrorKind::kInternal, "bidirectional sequences differ in length");
  }
  const size_t n = forward.size();
  std::vector<Vec<T>> out(n);
  for (size_t t = 0; t < n; ++t) {
    const auto& f = forward[t];
    const auto& b = backward_processing_order[n - 1 - t];
    if (f.size() != b.size()) Fail(ErrorKind::kInternal, "bidirectional widths differ");
    out[t].resize(f.size());
    for (size_t k = 0; k < f.size(); ++k) out[t][k] = (f[k] + b[k]) / T(2);
  }
  return out;
}

template <typename T>
struct AttentionParams {
  size_t input = 0;      // width of h_t
  size_t attention = 0;  // width of u_t
  const T* w = nullptr;  // attention x input
  const T* b = nullptr;  // attention
  const T* context = nullptr;  // attention
};

template <typename T>
struct AttentionGrads {
  T* w = nullptr;
  T* b = nullptr;
  T* context = nullptr;
};

template <typename T>
struct AttentionResult {
  Vec<T> pooled;
  Vec<T> weights;              // one per position; 0 at masked positions
  std::vector<Vec<T>> u;       // tanh projections (unmasked positions)
};

// u_t = tanh(W h_t + b), alpha = softmax_t(u_t . context) over unmasked
// positions, pooled = sum_t alpha_t h_t. `mask` (optional) marks valid
// positions with true.
template <typename T>
AttentionResult<T> AttentionPool(const std::vector<Vec<T>>& h, const AttentionParams<T>& p,
                                 const std::vector<bool>* mask = nullptr) {
  const size_t n = h.size();
  AttentionResult<T> res;
  res.weights.assign(n, T(0));
  res.u.resize(n);
  res.pooled.assign(p.input, T(0));
  Vec<T> score(n, T(0));
  bool any = false;
  T best = T(0);
  for (size_t t = 0; t < n; ++t) {
    if (mask && !(*mask)[t]) continue;
    Vec<T> u(p.b, p.b + p.attention);
    MatVecAdd(p.w, p.attention, p.input, h[t].data(), u.data());
    T s = 0;
    for (size_t k = 0; k < p.attention; ++k) {
      u[k] = std::tanh(u[k]);
      s += u[k] * p.context[k];
    }
    score[t] = s;
    best = any ? std::max(best, s) : s;
    any = true;
    res.u[t] = std::move(u);
  }
  if (!any) Fail(ErrorKind::kInternal, "attention over a fully masked sequence");
  T z = 0;
  for (size_t t = 0; t < n; ++t) {
    if (mask && !(*mask)[t]) continue;
    res.weights[t] = std::exp(score[t] - best);
    z += res.weights[t];
  }
  for (size_t t = 0; t < n; ++t) {
    res.weights[t] /= z;
    if (res.weights[t] == T(0)) continue;
    for (size_t k = 0; k < p.input; ++k) res.pooled[k] += res.weights[t] * h[t][k];
  }
  return res;
}

// Adds d(loss)/d(h_t) into dh[t].
template <typename T>
void AttentionBackward(const std::vector<Vec<T>>& h, const AttentionParams<T>& p,
                       const AttentionResult<T>& fwd, std::span<const T> dpooled,
                       const AttentionGrads<T>& g, std::vector<Vec<T>>* dh,
                       const std::vector<bool>* mask = nullptr) {
  const size_t n = h.size();
  Vec<T> dalpha(n, T(0));
  T mean = 0;
  for (size_t t = 0; t < n; ++t) {
    if (mask && !(*mask)[t]) continue;
    T s = 0;
    for (size_t k = 0; k < p.input; ++k) {
      s += dpooled[k] * h[t][k];
      (*dh)[t][k] += fwd.weights[t] * dpooled[k];
    }
    dalpha[t] = s;
    mean += fwd.weights[t] * s;
  }
  Vec<T> da(p.attention);
  for (size_t t = 0; t < n; ++t) {
    if (mask && !(*mask)[t]) continue;
    const T ds = fwd.weights[t] * (dalpha[t] - mean);
    const auto& u = fwd.u[t];
    for (size_t k = 0; k < p.attention; ++k) {
      g.context[k] += ds * u[k];
      da[k] = ds * p.context[k] * (T(1) - u[k] * u[k]);
      g.b[k] += da[k];
    }
    OuterAdd(g.w, p.attention, p.input, da.data(), h[t].data());
    MatTVecAdd(p.w, p.attention, p.input, da.data(), (*dh)[t].data());
  }
}

template <typename T>
struct ConvBank {
  size_t width = 0;       // window length in tokens
  size_t maps = 0;        // number of filters
  const T* w = nullptr;   // maps x (width * embed)
  const T* b = nullptr;   // maps
};

template <typename T>
struct ConvBankGrads {
  T* w = nullptr;
  T* b = nullptr;
};

template <typename T>
struct ConvResult {
  Vec<T> features;
  // Per feature: winning window start, or -1 when the feature is zero after
  // ReLU (no gradient flows).
  std::vector<long> argmax;
};

// x is a (length x embed) row-major sequence; windows cover every start in
// [0, length - width]. Output per filter: max over windows of ReLU(conv).
// Features are concatenated bank by bank.
template <typename T>
ConvResult<T> ConvMaxPool(std::span<const T> x, size_t length, size_t embed,
                          const std::vector<ConvBank<T>>& banks) {
  ConvResult<T> res;
  for (const auto& bank : banks) {
    if (length < bank.width) Fail(ErrorKind::kInternal, "sequence shorter than filter width");
    const size_t span_len = bank.width * embed;
    const size_t windows = length - bank.width + 1;
    for (size_t f = 0; f < bank.maps; ++f) {
      const T* wf = bank.w + f * span_len;
      T best = T(0);
      long arg = -1;
      for (size_t s = 0; s < windows; ++s) {
        const T* xs = x.data() + s * embed;
        T v = bank.b[f];
        for (size_t k = 0; k < span_len; ++k) v += wf[k] * xs[k];
        if (v > best) {
          best = v;
          arg = static_cast<long>(s);
        }
      }
      res.features.push_back(best);
      res.argmax.push_back(arg);
    }
  }
  return res;
}

template <typename T>
void ConvMaxPoolBackward(std::span<const T> x, size_t embed,
                         const std::vector<ConvBank<T>>& banks, const ConvResult<T>& fwd,
                         std::span<const T> dfeatures,
                         const std::vector<ConvBankGrads<T>>& grads, T* dx) {
  size_t idx = 0;
  for (size_t bi = 0; bi < banks.size(); ++bi) {
    const auto& bank = banks[bi];
    const size_t span_len = bank.width * embed;
    for (size_t f = 0; f < bank.maps; ++f, ++idx) {
      const long arg = fwd.argmax[idx];
      if (arg < 0) continue;
      const T d = dfeatures[idx];
      const size_t s = static_cast<size_t>(arg);
      const T* xs = x.data() + s * embed;
      T* gw = grads[bi].w + f * span_len;
      for (size_t k = 0; k < span_len; ++k) gw[k] += d * xs[k];
      grads[bi].b[f] += d;
      if (dx) {
        const T* wf = bank.w + f * span_len;
        T* dxs = dx + s * embed;
        for (size_t k = 0; k < span_len; ++k) dxs[k] += d * wf[k];
      }
    }
  }
}

// Each non-padding id is replaced by unknown_id with probability `rate`.
// Inference mode returns the input unchanged.
std::vector<int32_t> SpatialWordDropout(const std::vector<int32_t>& ids, double rate,
                                        CounterRng& rng, bool training,
                                        int32_t pad_id = 0, int32_t unknown_id = 1);

}  // namespace toxens::nn

#endif  // TOXENS_NN_H_
