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

#ifndef TOXENS_CORPUS_H_
#define TOXENS_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace toxens {

enum class SchemaKind { kMultiLabel, kMultiClass };

const char* SchemaKindName(SchemaKind kind);
SchemaKind ParseSchemaKind(const std::string& name);

struct LabelSchema {
  std::string name;
  SchemaKind kind = SchemaKind::kMultiLabel;
  std::vector<std::string> classes;

  // Throws a validation error when classes are empty or repeated.
  void Validate() const;
  // Index of a class name, or a validation error.
  size_t ClassIndex(const std::string& class_name) const;
  size_t num_classes() const { return classes.size(); }
  bool multi_label() const { return kind == SchemaKind::kMultiLabel; }

  // The six-label Wikipedia talk page schema.
  static LabelSchema Wikipedia();
  // The three-class Twitter schema; class order follows the davidson codes.
  static LabelSchema Twitter();

  bool operator==(const LabelSchema&) const = default;
};

struct Comment {
  std::string id;
  std::string text;
  std::vector<uint8_t> labels;

  bool operator==(const Comment&) const = default;
};

enum class Split : uint8_t { kTrain = 0, kTest = 1 };

// An immutable labeled collection. Construction enforces every invariant:
// unique ids, label vectors sized to the schema, exactly one class under a
// multi-class schema.
class Corpus {
 public:
  Corpus(LabelSchema schema, std::vector<Comment> samples,
         std::optional<std::vector<Split>> split = std::nullopt);

  const LabelSchema& schema() const { return schema_; }
  const std::vector<Comment>& samples() const { return samples_; }
  const Comment& operator[](size_t i) const { return samples_[i]; }
  size_t size() const { return samples_.size(); }
  bool has_split() const { return split_.has_value(); }
  const std::optional<std::vector<Split>>& split() const { return split_; }

  // Indices of the train split; every index when no split is present.
  std::vector<size_t> TrainIndices() const;
  std::vector<size_t> TestIndices() const;
  std::optional<size_t> IndexOf(const std::string& id) const;

  // The same samples with a different partition.
  Corpus WithSplit(std::vector<Split> split) const;

  bool operator==(const Corpus& other) const {
    return schema_ == other.schema_ && samples_ == other.samples_ &&
           split_ == other.split_;
  }

 private:
  LabelSchema schema_;
  std::vector<Comment> samples_;
  std::optional<std::vector<Split>> split_;
  std::unordered_map<std::string, size_t> index_;
};

// A subset of a corpus, in a fixed order.
struct CorpusView {
  const Corpus* corpus = nullptr;
  std::vector<size_t> indices;

  size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  const Comment& operator[](size_t i) const { return (*corpus)[indices[i]]; }
  const LabelSchema& schema() const { return corpus->schema(); }

  static CorpusView All(const Corpus& corpus);
  static CorpusView Train(const Corpus& corpus);
  static CorpusView Test(const Corpus& corpus);
};

enum class DatasetFormat { kJigsawCsv, kDavidsonCsv };

DatasetFormat ParseDatasetFormat(const std::string& name);

// Reads a labeled CSV. Jigsaw rows whose label fields are all -1 are dropped.
// Any malformed row raises an ingestion error naming its data row number.
Corpus LoadDataset(const std::string& path, const LabelSchema& schema,
                   DatasetFormat format);
Corpus ParseDataset(std::string_view content, const LabelSchema& schema,
                    DatasetFormat format);

// Reads a Kaggle-style split test set: `test_path` holds id,comment_text and
// `labels_path` holds id plus one column per class (with -1 sentinels).
Corpus LoadJigsawTestWithLabels(const std::string& test_path,
                                const std::string& labels_path,
                                const LabelSchema& schema);

// Concatenates a train and a test corpus into one corpus carrying the split.
Corpus MergeTrainTest(const Corpus& train, const Corpus& test);

// Seeded stratified holdout: per class (or per rarest-first stratum for
// multi-label) round(test_fraction * |stratum|) samples go to the test split.
Corpus StratifiedHoldout(const Corpus& corpus, double test_fraction,
                         uint64_t seed);

// Class name -> count. Multi-label schemas also get a "clean" entry counting
// samples with no label. Keys are in schema order, "clean" last.
std::vector<std::pair<std::string, size_t>> ClassDistribution(
    const Corpus& corpus);

struct FoldAssignment {
  int k = 0;
  uint64_t seed = 0;
  // Parallel arrays in train-split order.
  std::vector<std::string> ids;
  std::vector<int> folds;

  int FoldOf(const std::string& id) const;
  // Corpus indices belonging to the train split in `fold` / not in `fold`.
  std::vector<size_t> Members(const Corpus& corpus, int fold) const;
  std::vector<size_t> Complement(const Corpus& corpus, int fold) const;

  std::string ToCsv() const;
  static FoldAssignment FromCsv(std::string_view content, int k, uint64_t seed);

  bool operator==(const FoldAssignment& other) const {
    return k == other.k && seed == other.seed && ids == other.ids &&
           folds == other.folds;
  }

 private:
  mutable std::unordered_map<std::string, int> lookup_;
};

// Stratified k-fold assignment over the train split. Multi-class corpora are
// stratified by label. Multi-label corpora place each sample in the stratum of
// its rarest positive class (clean samples form their own stratum). Within a
// stratum the samples are shuffled and dealt round-robin, continuing the deal
// position across strata so total fold sizes also stay balanced.
FoldAssignment SplitFolds(const Corpus& corpus, int k, uint64_t seed);

// Stratum per corpus index as used by SplitFolds (index into a class, or
// num_classes for the clean stratum).
std::vector<size_t> StratumOf(const Corpus& corpus);

// Canonical newline-delimited JSON record file plus a schema sidecar.
void SaveCorpus(const Corpus& corpus, const std::string& records_path,
                const std::string& schema_path);
Corpus LoadCorpus(const std::string& records_path,
                  const std::string& schema_path);
std::string SerializeRecords(const Corpus& corpus);
std::string SerializeSchema(const LabelSchema& schema);
LabelSchema ParseSchema(std::string_view json_text);
Corpus ParseRecords(std::string_view ndjson, const LabelSchema& schema);

}  // namespace toxens

#endif  // TOXENS_CORPUS_H_
