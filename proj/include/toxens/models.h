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

// The classifier roster behind one fit/predict contract.

#ifndef TOXENS_MODELS_H_
#define TOXENS_MODELS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toxens/corpus.h"
#include "toxens/features.h"
#include "toxens/linear.h"
#include "toxens/predictions.h"
#include "toxens/sequence_net.h"

namespace toxens {

enum class Family { kLrWord, kLrChar, kCnn, kLstm, kBiLstm, kBiGru, kBiGruAttention };
enum class EmbeddingSource { kTrainedSubword, kPretrainedFile, kLearnedFromScratch };
enum class Head { kSigmoidPerClass, kSoftmax };

const char* FamilyName(Family f);
Family ParseFamily(const std::string& name);
const char* EmbeddingSourceName(EmbeddingSource s);
EmbeddingSource ParseEmbeddingSource(const std::string& name);
bool IsLinear(Family f);

struct ClassifierSpec {
  // Identifier used for artifact names and stacked feature columns.
  std::string name;
  Family family = Family::kLrWord;
  Head head = Head::kSigmoidPerClass;

  // Linear families.
  TfidfConfig tfidf;
  double l2 = 1.0;
  double tolerance = 1e-6;

  // Neural families.
  EmbeddingSource embedding_source = EmbeddingSource::kLearnedFromScratch;
  std::string embedding_path;
  size_t embed_dim = 100;
  size_t units = 128;
  size_t attention_units = 0;
  std::vector<size_t> conv_widths{3, 4, 5};
  size_t conv_maps = 100;
  double spatial_dropout = 0.1;
  double dropout = 0.1;
  double learning_rate = 1e-3;
  size_t batch_size = 128;
  int epochs = 4;
  int patience = 1;
  size_t max_len = 200;
  size_t vocab_size = 100000;
  size_t min_frequency = 2;
  Tokenizer tokenizer;

  uint64_t seed = 1;
  // Worker threads for batch gradient evaluation; results do not depend on
  // the thread count.
  int threads = 1;

  // Family defaults: word 1-2 / char 2-5 tf-idf; 128 LSTM units, 64 units per
  // direction for the bidirectional families; sigmoid head for multi-label
  // schemas and softmax for multi-class.
  static ClassifierSpec Defaults(Family family, SchemaKind kind, std::string name = "");

  // Head must match the schema kind.
  void Validate(const LabelSchema& schema) const;
  uint64_t Hash() const;
};

std::string SpecToJson(const ClassifierSpec& spec);
ClassifierSpec SpecFromJson(const std::string& text);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double validation_auc = 0;
};

class TrainedModel {
 public:
  TrainedModel() = default;

  const ClassifierSpec& spec() const { return spec_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<EpochLog>& log() const { return log_; }

  // Rows in view order. Deterministic: dropout is off at inference.
  PredictionMatrix Predict(const CorpusView& view) const;
  std::vector<double> PredictText(const std::string& text) const;

  // Parameter access for tests.
  const LogisticModel* linear() const { return linear_ ? &*linear_ : nullptr; }
  const SequenceNet<float>* net() const { return net_.get(); }
  SequenceNet<float>* mutable_net() { return net_.get(); }
  const Vocabulary& vocabulary() const { return vocab_; }

  void Save(const std::string& path) const;
  // A file whose spec hash differs from `expected_spec_hash` (when non-zero)
  // is rejected.
  static TrainedModel Load(const std::string& path, uint64_t expected_spec_hash = 0);

 private:
  friend TrainedModel Fit(const ClassifierSpec&, const CorpusView&, const CorpusView&);

  ClassifierSpec spec_;
  std::vector<std::string> classes_;
  std::vector<EpochLog> log_;
  std::optional<TfidfModel> tfidf_;
  std::optional<LogisticModel> linear_;
  Vocabulary vocab_;
  std::shared_ptr<SequenceNet<float>> net_;
};

// Trains `spec` on `train`. Neural families monitor mean AUC on `validation`
// after each epoch and keep the best epoch (early stopping with the spec's
// patience). A NaN loss raises a training error naming epoch and batch; a
// missing embedding file raises a configuration error.
TrainedModel Fit(const ClassifierSpec& spec, const CorpusView& train,
                 const CorpusView& validation);

PredictionMatrix Predict(const TrainedModel& model, const CorpusView& view);

struct GradientCheckResult {
  double max_relative_error = 0;
  std::string worst_tensor;
  size_t parameters_checked = 0;
};

// Relative error between analytic and central-difference gradients:
// |a - n| / max(|a|, |n|, 1e-8).
double RelativeError(double analytic, double numeric);

// Builds `spec`'s architecture at miniature size (embedding 4, 3 units,
// sequences of up to 6 tokens, two 2- and 3-wide conv banks with 2 maps) in
// double precision with dropout disabled, and compares the analytic gradient
// of the summed batch loss against central differences with step 1e-5 for
// every parameter. Linear families are checked on a 4-sample sparse batch.
GradientCheckResult GradientCheck(const ClassifierSpec& spec, uint64_t seed = 7);

}  // namespace toxens

#endif  // TOXENS_MODELS_H_
