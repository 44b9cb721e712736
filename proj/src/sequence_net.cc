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

#include "toxens/sequence_net.h"

#include <algorithm>
#include <cmath>
#include <span>

#include "toxens/features.h"
#include "toxens/nn.h"

namespace toxens {

namespace nn {

std::vector<int32_t> SpatialWordDropout(const std::vector<int32_t>& ids, double rate,
                                        CounterRng& rng, bool training, int32_t pad_id,
                                        int32_t unknown_id) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    Fail(ErrorKind::kArgument, "dropout rate must lie in [0,1)");
  }
  if (!training || rate == 0.0) return ids;
  std::vector<int32_t> out = ids;
  for (auto& id : out) {
    if (id != pad_id && rng.Bernoulli(rate)) id = unknown_id;
  }
  return out;
}

}  // namespace nn

size_t NetConfig::FeatureWidth() const {
  if (encoder == Encoder::kCnn) return conv_widths.size() * conv_maps;
  return hidden;
}

template <typename T>
void Gradients<T>::Reset(size_t n_params, size_t vocab) {
  values.assign(n_params, T(0));
  touched_rows.clear();
  row_touched.assign(vocab, 0);
}

template <typename T>
void Gradients<T>::Clear(size_t embed_offset, size_t embed) {
  // Dense part lives after the embedding block.
  const size_t dense_begin = embed_offset + row_touched.size() * embed;
  std::fill(values.begin() + static_cast<long>(dense_begin), values.end(), T(0));
  std::fill(values.begin(), values.begin() + static_cast<long>(embed_offset), T(0));
  for (int32_t r : touched_rows) {
    auto* row = values.data() + embed_offset + static_cast<size_t>(r) * embed;
    std::fill(row, row + embed, T(0));
    row_touched[static_cast<size_t>(r)] = 0;
  }
  touched_rows.clear();
}

template <typename T>
struct SequenceNet<T>::Cache {
  std::vector<int32_t> ids;      // effective ids (length L, after dropout)
  size_t length = 0;             // effective length (>= widths for CNN)
  std::vector<T> x;              // length x embed
  // Recurrent state, per direction, in processing order.
  std::vector<nn::LstmStep<T>> lstm_f, lstm_b;
  std::vector<nn::GruStep<T>> gru_f, gru_b;
  std::vector<nn::Vec<T>> combined;
  nn::AttentionResult<T> attention;
  nn::ConvResult<T> conv;
  std::vector<T> pooled;         // before dropout
  std::vector<T> keep;           // dropout multipliers
  std::vector<T> features;       // after dropout
  std::vector<T> probs;
};

template <typename T>
SequenceNet<T>::SequenceNet(NetConfig config) : config_(std::move(config)) {
  if (config_.vocab < 2) Fail(ErrorKind::kConfiguration, "vocabulary must include reserved ids");
  if (config_.classes < 1) Fail(ErrorKind::kConfiguration, "at least one class required");
  if (config_.attention == 0) config_.attention = config_.hidden;
  const size_t E = config_.embed;
  const size_t H = config_.hidden;
  AddSlot("embedding", config_.vocab, E);
  switch (config_.encoder) {
    case Encoder::kCnn:
      for (size_t w : config_.conv_widths) {
        AddSlot("conv" + std::to_string(w) + ".w", config_.conv_maps, w * E);
        AddSlot("conv" + std::to_string(w) + ".b", config_.conv_maps, 1);
      }
      break;
    case Encoder::kLstm:
      AddSlot("fwd.w", 4 * H, E);
      AddSlot("fwd.u", 4 * H, H);
      AddSlot("fwd.b", 4 * H, 1);
      break;
    case Encoder::kBiLstm:
      for (const char* dir : {"fwd", "bwd"}) {
        AddSlot(std::string(dir) + ".w", 4 * H, E);
        AddSlot(std::string(dir) + ".u", 4 * H, H);
        AddSlot(std::string(dir) + ".b", 4 * H, 1);
      }
      break;
    case Encoder::kBiGru:
    case Encoder::kBiGruAttention:
      for (const char* dir : {"fwd", "bwd"}) {
        AddSlot(std::string(dir) + ".w", 3 * H, E);
        AddSlot(std::string(dir) + ".u", 3 * H, H);
        AddSlot(std::string(dir) + ".b", 3 * H, 1);
      }
      if (config_.encoder == Encoder::kBiGruAttention) {
        AddSlot("att.w", config_.attention, H);
        AddSlot("att.b", config_.attention, 1);
        AddSlot("att.context", config_.attention, 1);
      }
      break;
  }
  AddSlot("head.w", config_.classes, config_.FeatureWidth());
  AddSlot("head.b", config_.classes, 1);
  params_.assign(slots_.back().offset + slots_.back().size(), T(0));
  trainable_rows_.assign(config_.vocab, 1);
  trainable_rows_[kPadId] = 0;
}

template <typename T>
size_t SequenceNet<T>::AddSlot(const std::string& name, size_t rows, size_t cols) {
  const size_t offset = slots_.empty() ? 0 : slots_.back().offset + slots_.back().size();
  slots_.push_back({name, offset, rows, cols});
  return offset;
}

template <typename T>
const TensorSlot& SequenceNet<T>::Slot(const std::string& name) const {
  for (const auto& s : slots_) {
    if (s.name == name) return s;
  }
  Fail(ErrorKind::kInternal, "no parameter tensor '" + name + "'");
}

template <typename T>
void SequenceNet<T>::Initialize(CounterRng& rng) {
  for (const auto& s : slots_) {
    T* p = params_.data() + s.offset;
    if (s.name == "embedding") {
      for (size_t i = 0; i < s.size(); ++i) p[i] = static_cast<T>(rng.Uniform(-0.05, 0.05));
      std::fill(p, p + s.cols, T(0));
    } else if (s.cols == 1 && s.name != "att.context") {
      std::fill(p, p + s.size(), T(0));
    } else {
      // Gate blocks are initialized as independent matrices.
      size_t fan_out = s.rows;
      if (s.name.rfind("fwd.", 0) == 0 || s.name.rfind("bwd.", 0) == 0) {
        fan_out = config_.hidden;
      }
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_out + s.cols));
      for (size_t i = 0; i < s.size(); ++i) p[i] = static_cast<T>(rng.Uniform(-limit, limit));
    }
  }
  if (config_.encoder == Encoder::kLstm || config_.encoder == Encoder::kBiLstm) {
    for (const char* dir : {"fwd.b", "bwd.b"}) {
      if (config_.encoder == Encoder::kLstm && std::string(dir) == "bwd.b") continue;
      const auto& s = Slot(dir);
      std::fill(params_.begin() + static_cast<long>(s.offset + config_.hidden),
                params_.begin() + static_cast<long>(s.offset + 2 * config_.hidden), T(1));
    }
  }
}

template <typename T>
std::vector<T> SequenceNet<T>::Forward(const std::vector<int32_t>& ids, bool training,
                                       CounterRng* rng, Cache* c) const {
  const size_t E = config_.embed;
  const size_t H = config_.hidden;
  // Right padding: the effective sequence ends at the first pad id.
  size_t L = 0;
  while (L < ids.size() && ids[L] != kPadId) ++L;
  c->ids.assign(ids.begin(), ids.begin() + static_cast<long>(L));
  if (c->ids.empty()) c->ids.push_back(kUnknownId);
  if (training && config_.spatial_dropout > 0) {
    c->ids = nn::SpatialWordDropout(c->ids, config_.spatial_dropout, *rng, true);
  }
  L = c->ids.size();
  for (int32_t id : c->ids) {
    if (id < 0 || static_cast<size_t>(id) >= config_.vocab) {
      Fail(ErrorKind::kInternal, "token id outside the embedding matrix");
    }
  }

  size_t length = L;
  if (config_.encoder == Encoder::kCnn) {
    const size_t wmax = *std::max_element(config_.conv_widths.begin(), config_.conv_widths.end());
    length = std::max(L, wmax);
  }
  c->length = length;
  c->x.assign(length * E, T(0));
  const T* emb = params_.data() + slots_[0].offset;
  for (size_t t = 0; t < L; ++t) {
    std::copy(emb + static_cast<size_t>(c->ids[t]) * E,
              emb + static_cast<size_t>(c->ids[t] + 1) * E, c->x.begin() + static_cast<long>(t * E));
  }
  auto xt = [&](size_t t) { return std::span<const T>(c->x.data() + t * E, E); };
  auto cell = [&](const std::string& dir) {
    nn::CellParams<T> p;
    p.input = E;
    p.hidden = H;
    p.w = params_.data() + Slot(dir + ".w").offset;
    p.u = params_.data() + Slot(dir + ".u").offset;
    p.b = params_.data() + Slot(dir + ".b").offset;
    return p;
  };
  const std::vector<T> zeros(H, T(0));

  switch (config_.encoder) {
    case Encoder::kCnn: {
      std::vector<nn::ConvBank<T>> banks;
      for (size_t w : config_.conv_widths) {
        const std::string n = "conv" + std::to_string(w);
        banks.push_back({w, config_.conv_maps, params_.data() + Slot(n + ".w").offset,
                         params_.data() + Slot(n + ".b").offset});
      }
      c->conv = nn::ConvMaxPool<T>(c->x, length, E, banks);
      c->pooled = c->conv.features;
      break;
    }
    case Encoder::kLstm:
    case Encoder::kBiLstm: {
      const bool bi = config_.encoder == Encoder::kBiLstm;
      const auto pf = cell("fwd");
      c->lstm_f.resize(L);
      for (size_t t = 0; t < L; ++t) {
        const auto& hp = t ? c->lstm_f[t - 1].h : zeros;
        const auto& cp = t ? c->lstm_f[t - 1].c : zeros;
        nn::LstmForward<T>(xt(t), hp, cp, pf, &c->lstm_f[t]);
      }
      c->pooled = c->lstm_f[L - 1].h;
      if (bi) {
        const auto pb = cell("bwd");
        c->lstm_b.resize(L);
        for (size_t s = 0; s < L; ++s) {
          const auto& hp = s ? c->lstm_b[s - 1].h : zeros;
          const auto& cp = s ? c->lstm_b[s - 1].c : zeros;
          nn::LstmForward<T>(xt(L - 1 - s), hp, cp, pb, &c->lstm_b[s]);
        }
        for (size_t k = 0; k < H; ++k) {
          c->pooled[k] = (c->lstm_f[L - 1].h[k] + c->lstm_b[L - 1].h[k]) / T(2);
        }
      }
      break;
    }
    case Encoder::kBiGru:
    case Encoder::kBiGruAttention: {
      const auto pf = cell("fwd");
      const auto pb = cell("bwd");
      c->gru_f.resize(L);
      c->gru_b.resize(L);
      for (size_t t = 0; t < L; ++t) {
        nn::GruForward<T>(xt(t), t ? c->gru_f[t - 1].h : zeros, pf, &c->gru_f[t]);
      }
      for (size_t s = 0; s < L; ++s) {
        nn::GruForward<T>(xt(L - 1 - s), s ? c->gru_b[s - 1].h : zeros, pb, &c->gru_b[s]);
      }
      if (config_.encoder == Encoder::kBiGru) {
        c->pooled.resize(H);
        for (size_t k = 0; k < H; ++k) {
          c->pooled[k] = (c->gru_f[L - 1].h[k] + c->gru_b[L - 1].h[k]) / T(2);
        }
      } else {
        std::vector<nn::Vec<T>> hf(L), hb(L);
        for (size_t t = 0; t < L; ++t) {
          hf[t] = c->gru_f[t].h;
          hb[t] = c->gru_b[t].h;
        }
        c->combined = nn::BidirectionalCombine(hf, hb);
        nn::AttentionParams<T> ap{H, config_.attention, params_.data() + Slot("att.w").offset,
                                  params_.data() + Slot("att.b").offset,
                                  params_.data() + Slot("att.context").offset};
        c->attention = nn::AttentionPool(c->combined, ap);
        c->pooled = c->attention.pooled;
      }
      break;
    }
  }

  const size_t F = c->pooled.size();
  c->keep.assign(F, T(1));
  if (training && config_.dropout > 0) {
    const T scale = T(1) / T(1 - config_.dropout);
    for (auto& k : c->keep) k = rng->Bernoulli(config_.dropout) ? T(0) : scale;
  }
  c->features.resize(F);
  for (size_t k = 0; k < F; ++k) c->features[k] = c->pooled[k] * c->keep[k];

  const size_t C = config_.classes;
  std::vector<T> logits(params_.begin() + static_cast<long>(Slot("head.b").offset),
                        params_.begin() + static_cast<long>(Slot("head.b").offset + C));
  nn::MatVecAdd(params_.data() + Slot("head.w").offset, C, F, c->features.data(), logits.data());
  c->probs.resize(C);
  if (config_.softmax) {
    const T m = *std::max_element(logits.begin(), logits.end());
    T z = 0;
    for (size_t k = 0; k < C; ++k) z += (c->probs[k] = std::exp(logits[k] - m));
    for (auto& p : c->probs) p /= z;
  } else {
    for (size_t k = 0; k < C; ++k) c->probs[k] = Sigmoid(logits[k]);
  }
  return logits;
}

template <typename T>
std::vector<T> SequenceNet<T>::Predict(const std::vector<int32_t>& ids) const {
  Cache c;
  Forward(ids, false, nullptr, &c);
  return c.probs;
}

namespace {

template <typename T>
T SampleLoss(const std::vector<T>& logits, const std::vector<T>& probs,
             const std::vector<uint8_t>& gold, bool softmax) {
  T loss = 0;
  if (softmax) {
    const T m = *std::max_element(logits.begin(), logits.end());
    T z = 0;
    for (T l : logits) z += std::exp(l - m);
    for (size_t k = 0; k < gold.size(); ++k) {
      if (gold[k]) loss += -(logits[k] - m - std::log(z));
    }
  } else {
    for (size_t k = 0; k < gold.size(); ++k) {
      // BCE from logits: softplus(l) - y l.
      loss += Softplus(logits[k]) - (gold[k] ? logits[k] : T(0));
    }
  }
  (void)probs;
  return loss;
}

}  // namespace

template <typename T>
T SequenceNet<T>::Loss(const std::vector<int32_t>& ids, const std::vector<uint8_t>& gold) const {
  Cache c;
  const auto logits = Forward(ids, false, nullptr, &c);
  return SampleLoss(logits, c.probs, gold, config_.softmax);
}

template <typename T>
T SequenceNet<T>::LossAndGradient(const std::vector<int32_t>& ids,
                                  const std::vector<uint8_t>& gold, bool training,
                                  CounterRng* rng, Gradients<T>* grads) const {
  if (gold.size() != config_.classes) Fail(ErrorKind::kInternal, "gold width mismatch");
  Cache c;
  const auto logits = Forward(ids, training, rng, &c);
  std::vector<T> dlogits(config_.classes);
  for (size_t k = 0; k < config_.classes; ++k) dlogits[k] = c.probs[k] - T(gold[k]);
  Backward(c, dlogits, grads);
  return SampleLoss(logits, c.probs, gold, config_.softmax);
}

template <typename T>
void SequenceNet<T>::Backward(const Cache& c, const std::vector<T>& dlogits,
                              Gradients<T>* grads) const {
  const size_t E = config_.embed;
  const size_t H = config_.hidden;
  const size_t C = config_.classes;
  const size_t F = c.features.size();
  T* g = grads->values.data();

  const auto& hw = Slot("head.w");
  nn::OuterAdd(g + hw.offset, C, F, dlogits.data(), c.features.data());
  const auto& hb = Slot("head.b");
  for (size_t k = 0; k < C; ++k) g[hb.offset + k] += dlogits[k];
  std::vector<T> dpooled(F, T(0));
  nn::MatTVecAdd(params_.data() + hw.offset, C, F, dlogits.data(), dpooled.data());
  for (size_t k = 0; k < F; ++k) dpooled[k] *= c.keep[k];

  const size_t L = c.ids.size();
  std::vector<T> dx(c.length * E, T(0));
  auto xt = [&](size_t t) { return std::span<const T>(c.x.data() + t * E, E); };
  auto cell = [&](const std::string& dir) {
    nn::CellParams<T> p;
    p.input = E;
    p.hidden = H;
    p.w = params_.data() + Slot(dir + ".w").offset;
    p.u = params_.data() + Slot(dir + ".u").offset;
    p.b = params_.data() + Slot(dir + ".b").offset;
    return p;
  };
  auto cell_grads = [&](const std::string& dir) {
    return nn::CellGrads<T>{g + Slot(dir + ".w").offset, g + Slot(dir + ".u").offset,
                            g + Slot(dir + ".b").offset};
  };
  const std::vector<T> zeros(H, T(0));

  // Runs BPTT over one LSTM direction. dh_ext[s] is the external gradient on
  // the hidden state at processing step s; position(s) maps a processing step
  // to its timestep.
  auto lstm_bptt = [&](const std::vector<nn::LstmStep<T>>& steps, const std::string& dir,
                       const std::vector<std::vector<T>>& dh_ext, bool reversed) {
    const auto p = cell(dir);
    const auto pg = cell_grads(dir);
    std::vector<T> dh_next(H, T(0)), dc_next(H, T(0)), dh(H), dh_prev(H), dc_prev(H);
    for (size_t s = L; s-- > 0;) {
      for (size_t k = 0; k < H; ++k) dh[k] = dh_ext[s][k] + dh_next[k];
      const size_t t = reversed ? L - 1 - s : s;
      const auto& hp = s ? steps[s - 1].h : zeros;
      const auto& cp = s ? steps[s - 1].c : zeros;
      nn::LstmBackward<T>(xt(t), hp, cp, p, steps[s], dh, dc_next, pg, dx.data() + t * E,
                          dh_prev.data(), dc_prev.data());
      dh_next.swap(dh_prev);
      dc_next.swap(dc_prev);
    }
  };
  auto gru_bptt = [&](const std::vector<nn::GruStep<T>>& steps, const std::string& dir,
                      const std::vector<std::vector<T>>& dh_ext, bool reversed) {
    const auto p = cell(dir);
    const auto pg = cell_grads(dir);
    std::vector<T> dh_next(H, T(0)), dh(H), dh_prev(H);
    for (size_t s = L; s-- > 0;) {
      for (size_t k = 0; k < H; ++k) dh[k] = dh_ext[s][k] + dh_next[k];
      const size_t t = reversed ? L - 1 - s : s;
      nn::GruBackward<T>(xt(t), s ? steps[s - 1].h : zeros, p, steps[s], dh, pg,
                         dx.data() + t * E, dh_prev.data());
      dh_next.swap(dh_prev);
    }
  };

  switch (config_.encoder) {
    case Encoder::kCnn: {
      std::vector<nn::ConvBank<T>> banks;
      std::vector<nn::ConvBankGrads<T>> bank_grads;
      for (size_t w : config_.conv_widths) {
        const std::string n = "conv" + std::to_string(w);
        banks.push_back({w, config_.conv_maps, params_.data() + Slot(n + ".w").offset,
                         params_.data() + Slot(n + ".b").offset});
        bank_grads.push_back({g + Slot(n + ".w").offset, g + Slot(n + ".b").offset});
      }
      nn::ConvMaxPoolBackward<T>(c.x, E, banks, c.conv, dpooled, bank_grads, dx.data());
      break;
    }
    case Encoder::kLstm:
    case Encoder::kBiLstm: {
      const bool bi = config_.encoder == Encoder::kBiLstm;
      const T share = bi ? T(0.5) : T(1);
      std::vector<std::vector<T>> ext(L, std::vector<T>(H, T(0)));
      for (size_t k = 0; k < H; ++k) ext[L - 1][k] = dpooled[k] * share;
      lstm_bptt(c.lstm_f, "fwd", ext, false);
      if (bi) lstm_bptt(c.lstm_b, "bwd", ext, true);
      break;
    }
    case Encoder::kBiGru: {
      std::vector<std::vector<T>> ext(L, std::vector<T>(H, T(0)));
      for (size_t k = 0; k < H; ++k) ext[L - 1][k] = dpooled[k] * T(0.5);
      gru_bptt(c.gru_f, "fwd", ext, false);
      gru_bptt(c.gru_b, "bwd", ext, true);
      break;
    }
    case Encoder::kBiGruAttention: {
      std::vector<nn::Vec<T>> dcomb(L, nn::Vec<T>(H, T(0)));
      nn::AttentionParams<T> ap{H, config_.attention, params_.data() + Slot("att.w").offset,
                                params_.data() + Slot("att.b").offset,
                                params_.data() + Slot("att.context").offset};
      nn::AttentionGrads<T> ag{g + Slot("att.w").offset, g + Slot("att.b").offset,
                               g + Slot("att.context").offset};
      nn::AttentionBackward<T>(c.combined, ap, c.attention, dpooled, ag, &dcomb);
      std::vector<std::vector<T>> ext_f(L, std::vector<T>(H)), ext_b(L, std::vector<T>(H));
      for (size_t t = 0; t < L; ++t) {
        for (size_t k = 0; k < H; ++k) {
          ext_f[t][k] = dcomb[t][k] * T(0.5);
          ext_b[L - 1 - t][k] = dcomb[t][k] * T(0.5);
        }
      }
      gru_bptt(c.gru_f, "fwd", ext_f, false);
      gru_bptt(c.gru_b, "bwd", ext_b, true);
      break;
    }
  }

  const size_t emb = slots_[0].offset;
  for (size_t t = 0; t < L; ++t) {
    const auto row = static_cast<size_t>(c.ids[t]);
    if (!trainable_rows_[row]) continue;
    T* gr = g + emb + row * E;
    const T* d = dx.data() + t * E;
    for (size_t k = 0; k < E; ++k) gr[k] += d[k];
    if (!grads->row_touched[row]) {
      grads->row_touched[row] = 1;
      grads->touched_rows.push_back(static_cast<int32_t>(row));
    }
  }
}

template <typename T>
double AdamOptimizer<T>::Corrected() const {
  const double t = static_cast<double>(t_);
  return lr_ * std::sqrt(1.0 - std::pow(beta2_, t)) / (1.0 - std::pow(beta1_, t));
}

template <typename T>
void AdamOptimizer<T>::StepDense(std::vector<T>& params, const std::vector<T>& grads,
                                 size_t begin, size_t end, double scale) {
  const double step = Corrected();
  for (size_t i = begin; i < end; ++i) {
    const double gi = static_cast<double>(grads[i]) * scale;
    m_[i] = beta1_ * m_[i] + (1 - beta1_) * gi;
    v_[i] = beta2_ * v_[i] + (1 - beta2_) * gi * gi;
    params[i] -= static_cast<T>(step * m_[i] / (std::sqrt(v_[i]) + eps_));
  }
}

template <typename T>
void AdamOptimizer<T>::StepRows(std::vector<T>& params, const std::vector<T>& grads,
                                size_t offset, size_t cols, const std::vector<int32_t>& rows,
                                const std::vector<uint8_t>& trainable, double scale) {
  for (int32_t r : rows) {
    if (!trainable[static_cast<size_t>(r)]) continue;
    const size_t b = offset + static_cast<size_t>(r) * cols;
    StepDense(params, grads, b, b + cols, scale);
  }
}

template class SequenceNet<float>;
template class SequenceNet<double>;
template struct Gradients<float>;
template struct Gradients<double>;
template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace toxens
