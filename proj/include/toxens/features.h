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

#ifndef TOXENS_FEATURES_H_
#define TOXENS_FEATURES_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toxens/corpus.h"

namespace toxens {

// Text normalization and splitting. Steps, in order: Unicode NFC,
// lowercasing, URL folding to "<url>", user-mention folding to "<user>",
// then splitting into runs of letters/digits (an apostrophe between two word
// characters stays inside the word) and single punctuation characters.
struct Tokenizer {
  bool lowercase = true;
  bool nfc = true;
  bool fold_urls = true;
  bool fold_mentions = true;
  // When false, runs of punctuation form a single token.
  bool split_punctuation = true;

  uint64_t Hash() const;
  std::vector<std::string> Tokenize(std::string_view text) const;
  // NFC + lowercase + whitespace runs collapsed to one space, trimmed.
  std::string Normalize(std::string_view text) const;
};

std::vector<std::string> Tokenize(std::string_view text,
                                  const Tokenizer& tokenizer = {});

using NgramCounts = std::unordered_map<std::string, uint32_t>;

// Every contiguous code-point window of length n_min..n_max, with
// multiplicity. Windows never split a UTF-8 sequence.
NgramCounts CharNgrams(std::string_view text, int n_min, int n_max);

// Space-joined token windows of length n_min..n_max.
NgramCounts WordNgrams(const std::vector<std::string>& tokens, int n_min,
                       int n_max);

// Selects which tokens feed a feature extractor.
enum class TokenFilter {
  kAll,
  // Tokens made only of letters.
  kAlphabetic,
  // Tokens containing at least one non-letter character.
  kNonAlphabetic,
};

TokenFilter ParseTokenFilter(const std::string& name);
const char* TokenFilterName(TokenFilter f);
std::vector<std::string> ApplyTokenFilter(std::vector<std::string> tokens,
                                          TokenFilter filter);

inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kUnknownId = 1;

class Vocabulary {
 public:
  Vocabulary() = default;

  // Keeps tokens with count >= min_frequency, the most frequent first (ties
  // in lexicographic order), capped so that size() <= max_size including the
  // two reserved ids.
  static Vocabulary Build(const std::vector<std::vector<std::string>>& docs,
                          size_t max_size, size_t min_frequency);
  static Vocabulary FromTokens(const std::vector<std::string>& tokens);

  // kUnknownId for tokens not in the vocabulary.
  int32_t Id(const std::string& token) const;
  const std::string& Token(int32_t id) const;
  // Includes the two reserved ids.
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  uint64_t ConfigHash() const { return config_hash_; }
  void Save(const std::string& path) const;
  static Vocabulary Load(const std::string& path, uint64_t expected_hash = 0);

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_{"<pad>", "<unk>"};
  std::unordered_map<std::string, int32_t> ids_;
  uint64_t config_hash_ = 0;
};

// Ids of the first max_len tokens, unknown tokens mapped to kUnknownId,
// right-padded with kPadId to exactly max_len.
std::vector<int32_t> EncodeSequence(const Vocabulary& vocab,
                                    const std::vector<std::string>& tokens,
                                    size_t max_len);

struct SparseEntry {
  uint32_t index;
  double weight;
  bool operator==(const SparseEntry&) const = default;
};

struct SparseVector {
  std::vector<SparseEntry> entries;  // strictly increasing index
  size_t dim = 0;

  double Norm() const;
};

enum class Analyzer { kWord, kChar };

struct TfidfConfig {
  Analyzer analyzer = Analyzer::kWord;
  int n_min = 1;
  int n_max = 2;
  size_t max_features = 100000;
  size_t min_df = 1;
  bool sublinear_tf = true;
  TokenFilter token_filter = TokenFilter::kAll;
  Tokenizer tokenizer;

  static TfidfConfig WordDefaults();
  static TfidfConfig CharDefaults();
  uint64_t Hash() const;
};

class TfidfModel {
 public:
  // Document frequencies are counted over `docs` (the train split).
  static TfidfModel Fit(const std::vector<std::string>& docs,
                        const TfidfConfig& config);

  // L2-normalized tf-idf vector; n-grams outside the inventory are ignored.
  SparseVector Transform(std::string_view text) const;
  NgramCounts Extract(std::string_view text) const;

  const TfidfConfig& config() const { return config_; }
  size_t dim() const { return features_.size(); }
  const std::vector<std::string>& features() const { return features_; }
  uint32_t DocumentFrequency(const std::string& feature) const;
  double Idf(const std::string& feature) const;
  const std::vector<double>& idf() const { return idf_; }
  uint64_t num_documents() const { return num_documents_; }

  void Save(const std::string& path) const;
  static TfidfModel Load(const std::string& path, const TfidfConfig& expected);
  std::string ToBytes() const;
  static TfidfModel FromBytes(std::string bytes, const TfidfConfig& expected);

 private:
  void BuildIndex();

  TfidfConfig config_;
  std::vector<std::string> features_;  // lexicographic order
  std::vector<uint32_t> df_;
  std::vector<double> idf_;
  uint64_t num_documents_ = 0;
  std::unordered_map<std::string, uint32_t> index_;
};

TfidfModel TfidfFit(const CorpusView& train, const TfidfConfig& config);

}  // namespace toxens

#endif  // TOXENS_FEATURES_H_
