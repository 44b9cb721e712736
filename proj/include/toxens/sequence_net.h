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

// Word-sequence classifiers: embedding -> spatial word dropout -> encoder
// (CNN, LSTM, BiLSTM, BiGRU, BiGRU + attention) -> dropout -> dense head.

#ifndef TOXENS_SEQUENCE_NET_H_
#define TOXENS_SEQUENCE_NET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "toxens/common.h"

namespace toxens {

enum class Encoder { kCnn, kLstm, kBiLstm, kBiGru, kBiGruAttention };

struct NetConfig {
  Encoder encoder = Encoder::kLstm;
  size_t vocab = 2;
  size_t embed = 100;
  // Recurrent units per direction.
  size_t hidden = 128;
  // Width of the attention projection; 0 means `hidden`.
  size_t attention = 0;
  std::vector<size_t> conv_widths{3, 4, 5};
  size_t conv_maps = 100;
  size_t classes = 1;
  bool softmax = false;
  double spatial_dropout = 0.1;
  double dropout = 0.1;

  size_t FeatureWidth() const;
};

// One named tensor inside the flat parameter vector.
struct TensorSlot {
  std::string name;
  size_t offset = 0;
  size_t rows = 0;
  size_t cols = 0;
  size_t size() const { return rows * cols; }
};

// Gradient buffer with sparse tracking of embedding rows.
template <typename T>
struct Gradients {
  std::vector<T> values;
  std::vector<int32_t> touched_rows;
  std::vector<uint8_t> row_touched;

  void Reset(size_t n_params, size_t vocab);
  // Zeroes everything accumulated since the last Clear.
  void Clear(size_t embed_offset, size_t embed);
};

template <typename T>
class SequenceNet {
 public:
  explicit SequenceNet(NetConfig config);

  const NetConfig& config() const { return config_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  const TensorSlot& Slot(const std::string& name) const;
  size_t num_params() const { return params_.size(); }

  // Rows of the embedding matrix that receive gradient updates. Row 0
  // (padding) is always frozen at zero.
  std::vector<uint8_t>& trainable_rows() { return trainable_rows_; }
  const std::vector<uint8_t>& trainable_rows() const { return trainable_rows_; }

  // Glorot-uniform weights, zero biases, LSTM forget bias 1, embeddings
  // uniform(-0.05, 0.05), padding row zero.
  void Initialize(CounterRng& rng);

  // Class probabilities for one right-padded id sequence (dropout off).
  std::vector<T> Predict(const std::vector<int32_t>& ids) const;

  // Forward + backward for one sample. Returns the sample loss (summed binary
  // cross-entropy for sigmoid heads, cross-entropy for softmax) and adds the
  // gradient into `grads`. With training=true spatial word dropout and
  // feature dropout draw from `rng`.
  T LossAndGradient(const std::vector<int32_t>& ids, const std::vector<uint8_t>& gold,
                    bool training, CounterRng* rng, Gradients<T>* grads) const;

  T Loss(const std::vector<int32_t>& ids, const std::vector<uint8_t>& gold) const;

 private:
  struct Cache;
  std::vector<T> Forward(const std::vector<int32_t>& ids, bool training, CounterRng* rng,
                         Cache* cache) const;
  void Backward(const Cache& cache, const std::vector<T>& dlogits, Gradients<T>* grads) const;
  size_t AddSlot(const std::string& name, size_t rows, size_t cols);

  NetConfig config_;
  std::vector<TensorSlot> slots_;
  std::vector<T> params_;
  std::vector<uint8_t> trainable_rows_;
};

extern template class SequenceNet<float>;
extern template class SequenceNet<double>;
extern template struct Gradients<float>;
extern template struct Gradients<double>;

// Adam with bias correction. Embedding rows are updated lazily: only rows
// touched in the current step move, using the global step count.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(size_t n_params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0), v_(n_params, 0) {}

  // Updates params[begin, end) densely.
  void StepDense(std::vector<T>& params, const std::vector<T>& grads, size_t begin, size_t end,
                 double scale);
  // Updates the listed rows of a (rows x cols) block starting at `offset`.
  void StepRows(std::vector<T>& params, const std::vector<T>& grads, size_t offset, size_t cols,
                const std::vector<int32_t>& rows, const std::vector<uint8_t>& trainable,
                double scale);
  void NextStep() { ++t_; }

 private:
  double Corrected() const;
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  uint64_t t_ = 0;
};

extern template class AdamOptimizer<float>;

}  // namespace toxens

#endif  // TOXENS_SEQUENCE_NET_H_
