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

// Word vectors: skip-gram training with hashed character n-gram buckets, and
// loading of plain-text pretrained vectors.

#ifndef TOXENS_EMBEDDINGS_H_
#define TOXENS_EMBEDDINGS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace toxens {

struct SkipgramConfig {
  int dimension = 100;
  int window = 5;
  int epochs = 5;
  int negatives = 5;
  // Linearly decayed to zero over the whole run.
  double learning_rate = 0.05;
  int min_n = 3;
  int max_n = 6;
  uint32_t buckets = 1u << 21;
  int min_count = 1;
  uint64_t seed = 1;
  // 1 = deterministic single-threaded training. More threads update shared
  // rows without locking.
  int threads = 1;

  void Validate() const;
  uint64_t Hash() const;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dimension, std::vector<std::string> words,
                 std::vector<float> word_rows);

  int dimension() const { return dimension_; }
  size_t num_words() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  bool has_subwords() const { return buckets_ > 0; }
  uint32_t buckets() const { return buckets_; }
  int min_n() const { return min_n_; }
  int max_n() const { return max_n_; }
  bool Contains(const std::string& word) const { return index_.count(word) > 0; }

  // Known word: its word row plus the rows of its n-gram buckets (word rows
  // alone for tables without buckets). Unknown word: mean of its n-gram bucket
  // rows when buckets exist, else the zero vector.
  std::vector<float> Lookup(std::string_view word) const;

  // Bucket ids of the n-grams of "<word>".
  std::vector<uint32_t> SubwordBuckets(std::string_view word) const;

  const std::vector<float>& word_rows() const { return word_rows_; }
  const std::vector<float>& bucket_rows() const { return bucket_rows_; }

  // Metadata recorded with the table.
  std::string source;
  int window = 0;
  int epochs = 0;

  void Save(const std::string& path) const;
  static EmbeddingTable Load(const std::string& path);

  bool operator==(const EmbeddingTable& o) const {
    return dimension_ == o.dimension_ && words_ == o.words_ &&
           word_rows_ == o.word_rows_ && bucket_rows_ == o.bucket_rows_ &&
           buckets_ == o.buckets_ && min_n_ == o.min_n_ && max_n_ == o.max_n_;
  }

 private:
  friend class SkipgramTrainer;
  void BuildIndex();

  int dimension_ = 0;
  std::vector<std::string> words_;
  std::vector<float> word_rows_;
  uint32_t buckets_ = 0;
  int min_n_ = 0;
  int max_n_ = 0;
  std::vector<float> bucket_rows_;
  std::unordered_map<std::string, size_t> index_;
};

// Character n-grams (lengths min_n..max_n, in code points) of the word framed
// as "<word>".
std::vector<std::string> FramedNgrams(std::string_view word, int min_n, int max_n);

// (center position, context position) pairs within `window` positions of each
// other, in center-major order.
std::vector<std::pair<size_t, size_t>> ContextPairs(size_t sentence_length, int window);

struct SkipgramResult {
  EmbeddingTable table;
  // Mean negative-sampling loss per epoch.
  std::vector<double> epoch_loss;
};

SkipgramResult TrainSkipgram(const std::vector<std::vector<std::string>>& sentences,
                             const SkipgramConfig& config);

struct PretrainedLoadReport {
  size_t rows = 0;
  size_t duplicates = 0;
  bool had_header = false;
};

// Text vectors: one "word v1 ... vd" per line, optionally preceded by a
// "count dim" header. The dimension comes from the first row.
EmbeddingTable LoadPretrained(const std::string& path,
                              PretrainedLoadReport* report = nullptr);
EmbeddingTable ParsePretrained(std::string_view content,
                               PretrainedLoadReport* report = nullptr);

// Writes the composed vector of every word in text format.
void SaveText(const EmbeddingTable& table, const std::string& path);

}  // namespace toxens

#endif  // TOXENS_EMBEDDINGS_H_
