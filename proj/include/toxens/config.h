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

// Pipeline configuration: a sectioned key-value file with strict keys.
//
//   [dataset] [features] [embeddings] [model.NAME]... [ensemble] [metrics]
//   [triage]
//
// '#' and ';' start comments. Unknown sections or keys are errors.

#ifndef TOXENS_CONFIG_H_
#define TOXENS_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toxens/corpus.h"
#include "toxens/embeddings.h"
#include "toxens/features.h"
#include "toxens/gbdt.h"
#include "toxens/models.h"
#include "toxens/triage.h"

namespace toxens {

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::vector<IniEntry> entries;
};

struct IniDocument {
  std::vector<IniSection> sections;
  static IniDocument Parse(std::string_view text, const std::string& source);
};

struct DatasetConfig {
  // wikipedia, twitter, or custom (schema_path required).
  std::string name = "wikipedia";
  // jigsaw_csv or davidson_csv; twitter defaults to davidson_csv.
  std::string format = "jigsaw_csv";
  std::string path;
  std::string test_path;
  std::string test_labels_path;
  std::string schema_path;
  // Stratified holdout used when no test files are given.
  double test_fraction = 0.2;
  int folds = 5;
  uint64_t seed = 1;
};

struct EmbeddingsConfig {
  SkipgramConfig skipgram;
  // Relative to the output directory.
  std::string output = "embeddings/subword.txem";
  bool write_text = false;
};

struct EnsembleConfig {
  // Base models, in column order. Empty = every configured model.
  std::vector<std::string> models;
  GbdtConfig gbdt;
  bool meta_features = true;
  std::string swear_lexicon;
};

struct MetricsConfig {
  // "search": per-class F1-optimal thresholds from train-split scores;
  // "fixed": fixed_threshold for every class.
  std::string thresholds = "search";
  double fixed_threshold = 0.5;
  // Classifier pairs for correlation reports.
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string focus_class;
};

struct TriageConfig {
  std::string focal_class = "toxic";
  TriageKind kind = TriageKind::kFalseNegative;
  size_t sample_size = 200;
  uint64_t seed = 1;
  // Producer of the predictions to triage.
  std::string model = "ensemble";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::string ui_dir;
};

struct PipelineConfig {
  DatasetConfig dataset;
  Tokenizer tokenizer;
  TfidfConfig word_tfidf = TfidfConfig::WordDefaults();
  TfidfConfig char_tfidf = TfidfConfig::CharDefaults();
  EmbeddingsConfig embeddings;
  std::vector<ClassifierSpec> models;
  EnsembleConfig ensemble;
  MetricsConfig metrics;
  TriageConfig triage;
  uint64_t hash = 0;

  LabelSchema Schema() const;
  const ClassifierSpec& Model(const std::string& name) const;
  // Models feeding the ensemble, in column order.
  std::vector<ClassifierSpec> EnsembleModels() const;
  // Overrides every seed in the configuration.
  void ApplySeed(uint64_t seed);
};

// Unknown keys, unknown sections and malformed values raise configuration
// errors naming the key and line.
PipelineConfig ParseConfig(std::string_view text, const std::string& source = "<config>");
PipelineConfig LoadConfig(const std::string& path);

// `path` if it exists (or is absolute), else $TOXENS_DATA_DIR/path when that
// exists, else `path` unchanged.
std::string ResolveDataPath(const std::string& path);

}  // namespace toxens

#endif  // TOXENS_CONFIG_H_
