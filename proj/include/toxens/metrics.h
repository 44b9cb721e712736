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

#ifndef TOXENS_METRICS_H_
#define TOXENS_METRICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "toxens/corpus.h"
#include "toxens/predictions.h"

namespace toxens {

// Per-class decision thresholds, each in (0,1).
struct ThresholdVector {
  std::vector<std::string> classes;
  std::vector<double> values;

  double at(const std::string& class_name) const;
  void Validate(const LabelSchema& schema) const;
  std::string ToJson() const;
  static ThresholdVector FromJson(const std::string& text);
  static ThresholdVector Constant(const std::vector<std::string>& classes, double value);
};

// Rows of 0/1 labels, one per sample.
using BinaryMatrix = std::vector<std::vector<uint8_t>>;

// score >= threshold => 1.
BinaryMatrix Binarize(const PredictionMatrix& scores, const ThresholdVector& thresholds);
// Exactly one 1 per row at the highest score; ties go to the lowest class index.
BinaryMatrix BinarizeArgmax(const PredictionMatrix& scores);

// Gold labels of `view` aligned with the rows of `scores` (by id).
BinaryMatrix GoldMatrix(const CorpusView& view);
BinaryMatrix GoldFor(const Corpus& corpus, const std::vector<std::string>& ids);
std::vector<uint8_t> ColumnOf(const BinaryMatrix& m, size_t c);

struct Prf1 {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  // Set when a denominator was zero and the value was defined as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

Prf1 ComputePrf1(const std::vector<uint8_t>& predicted, const std::vector<uint8_t>& gold);

// Mann-Whitney statistic P(s+ > s-) + P(s+ == s-)/2. Gold with a single
// class raises an undefined-metric error.
double RocAuc(const std::vector<double>& scores, const std::vector<uint8_t>& gold);

struct ThresholdChoice {
  double threshold = 0.5;
  double f1 = 0;
};

// Candidates: midpoints of consecutive distinct sorted scores, plus 0.5.
std::vector<double> ThresholdCandidates(const std::vector<double>& scores);
// Highest F1 over the candidates; ties go to the lowest threshold.
ThresholdChoice BestThreshold(const std::vector<double>& scores, const std::vector<uint8_t>& gold);
ThresholdVector SearchThresholds(const PredictionMatrix& scores, const BinaryMatrix& gold);

// Product-moment correlation. Zero variance raises an undefined-metric error.
double Pearson(const std::vector<double>& a, const std::vector<double>& b);

struct ClassMetrics {
  std::string name;
  Prf1 prf;
  double auc = 0;
  bool auc_defined = true;
};

struct MetricsReport {
  std::string model;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  // Mean over classes whose AUC is defined.
  double macro_auc = 0;
  // Empty for argmax decoding.
  ThresholdVector thresholds;
  std::vector<std::string> flags;

  std::string ToCsv() const;
  std::string ToJson() const;
};

// Multi-label schemas use `thresholds`; multi-class schemas decode by argmax
// and ignore them. AUC for multi-class is the mean one-vs-rest AUC.
MetricsReport Evaluate(const PredictionMatrix& scores, const BinaryMatrix& gold, SchemaKind kind,
                       const ThresholdVector* thresholds);

struct CorrelationReport {
  std::string model_a;
  std::string model_b;
  std::vector<std::string> classes;
  std::vector<double> pearson;  // NaN where undefined
  std::vector<uint8_t> pearson_defined;
  double mean_pearson = 0;      // over defined classes
  std::vector<double> f1_a;
  std::vector<double> f1_b;
  double mean_f1_a = 0;
  double mean_f1_b = 0;

  std::string ToCsv() const;
  std::string ToJson() const;
};

// Matrices must share ids and classes in the same order. A null threshold
// vector means argmax decoding (multi-class) or 0.5 (multi-label).
CorrelationReport Correlate(const PredictionMatrix& a, const PredictionMatrix& b,
                            const BinaryMatrix& gold, SchemaKind kind,
                            const ThresholdVector* thresholds_a,
                            const ThresholdVector* thresholds_b);

// One model row with up to two dataset column groups (P, R, F1, AUC).
struct Table3Row {
  std::string label;
  const MetricsReport* first = nullptr;
  const MetricsReport* second = nullptr;
};
std::string FormatTable3(const std::string& first_title, const std::string& second_title,
                         const std::vector<Table3Row>& rows);

// One classifier pair: averaged row plus one focus class.
struct Table4Block {
  std::string dataset;
  std::string focus_class;
  const CorrelationReport* report = nullptr;
};
std::string FormatTable4(const std::vector<Table4Block>& blocks);

}  // namespace toxens

#endif  // TOXENS_METRICS_H_
