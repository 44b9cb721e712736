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

// Out-of-fold stacking: base predictions from held-out fold models become
// features for per-class boosted-tree stackers, one stacker per fold, whose
// test outputs are averaged.

#ifndef TOXENS_ENSEMBLE_H_
#define TOXENS_ENSEMBLE_H_

#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "toxens/corpus.h"
#include "toxens/features.h"
#include "toxens/gbdt.h"
#include "toxens/metrics.h"
#include "toxens/models.h"
#include "toxens/predictions.h"

namespace toxens {

// Lowercased word list; blank lines and '#' comments are ignored.
class SwearLexicon {
 public:
  SwearLexicon() = default;
  explicit SwearLexicon(const std::vector<std::string>& words);
  static SwearLexicon Load(const std::string& path);
  static SwearLexicon Parse(std::string_view content);

  bool Contains(const std::string& token) const { return words_.count(token) > 0; }
  size_t Count(const std::vector<std::string>& tokens) const;
  size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

struct MetaFeatureOptions {
  bool enabled = true;
  SwearLexicon lexicon;
  Tokenizer tokenizer;
};

inline constexpr const char* kMetaLengthColumn = "meta:length_tokens";
inline constexpr const char* kMetaSwearColumn = "meta:swear_hits";

struct StackedFeatures {
  std::vector<std::string> ids;
  // "<model>:<class>" per base score, then meta-feature columns.
  std::vector<std::string> columns;
  std::vector<double> values;  // row-major
  // Per row: the fold held out by the model that produced the row's scores.
  std::vector<int> provenance;

  size_t rows() const { return ids.size(); }
  size_t cols() const { return columns.size(); }
  double at(size_t r, size_t c) const { return values[r * columns.size() + c]; }

  std::string ToCsv() const;
  std::string ProvenanceJson() const;
  // Writes `csv_path` and `csv_path + ".provenance.json"`.
  void Save(const std::string& csv_path) const;
  static StackedFeatures Load(const std::string& csv_path);

  bool operator==(const StackedFeatures&) const = default;
};

// Builds a feature block from aligned prediction matrices (same ids, one per
// base model) plus optional meta-features computed from the corpus text.
StackedFeatures AssembleFeatures(const std::vector<PredictionMatrix>& base, const Corpus& corpus,
                                 const MetaFeatureOptions& meta, const std::vector<int>& provenance);

// Throws an internal error unless every row's provenance equals the fold of
// that row's id.
void AuditLeakFreedom(const StackedFeatures& train, const FoldAssignment& folds);

struct OofOptions {
  int threads = 1;
  MetaFeatureOptions meta;
  // Called after each (spec, fold) fit with a short description.
  std::function<void(const std::string&)> progress;
};

struct OofResult {
  StackedFeatures train;
  // Test-split features from each fold's models; index = held-out fold.
  std::vector<StackedFeatures> test;
  // Per spec: out-of-fold predictions over the train split, and the mean of
  // the fold models' test predictions.
  std::vector<PredictionMatrix> oof;
  std::vector<PredictionMatrix> test_mean;
};

// Fits every (spec, fold) pair on the train-split rows outside the fold and
// predicts the held-out rows and the test split. Linear models train on the
// whole complement; neural models hold out a seeded 10% of the complement
// for early stopping. A failed fit rethrows naming the spec and fold.
OofResult OofPredictions(const std::vector<ClassifierSpec>& specs, const Corpus& corpus,
                         const FoldAssignment& folds, const OofOptions& options);

// Stacker f trains on the rows whose provenance differs from f.
std::vector<GbdtModel> TrainStackers(const StackedFeatures& train, const BinaryMatrix& gold,
                                     const std::vector<std::string>& classes, int k,
                                     const GbdtConfig& config, int threads = 1);

// Stacker f scores test[f]; the result is the per-cell mean over stackers.
PredictionMatrix EnsemblePredict(const std::vector<GbdtModel>& stackers,
                                 const std::vector<StackedFeatures>& test,
                                 const std::vector<std::string>& classes);

// Applies one stacker to a feature block.
PredictionMatrix StackerPredict(const GbdtModel& stacker, const StackedFeatures& features,
                                const std::vector<std::string>& classes);

// Drops the meta-feature columns.
StackedFeatures WithoutMeta(const StackedFeatures& features);

}  // namespace toxens

#endif  // TOXENS_ENSEMBLE_H_
