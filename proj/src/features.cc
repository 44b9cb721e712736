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

#include "toxens/features.h"

#include <unicode/normalizer2.h>
#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "toxens/binary_io.h"
#include "toxens/common.h"

namespace toxens {

namespace {

icu::UnicodeString PrepareUnicode(std::string_view text, bool nfc, bool lower) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (nfc) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_SUCCESS(status)) {
      icu::UnicodeString out = norm->normalize(u, status);
      if (U_SUCCESS(status)) u = out;
    }
  }
  if (lower) u.toLower(icu::Locale::getRoot());
  return u;
}

std::string ToUtf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool IsWordChar(UChar32 c) { return u_isalnum(c) || c == '_' || u_hasBinaryProperty(c, UCHAR_ALPHABETIC); }

bool IsSpace(UChar32 c) { return u_isUWhiteSpace(c) || u_iscntrl(c); }

bool StartsWithAt(const icu::UnicodeString& u, int32_t pos, const char* prefix) {
  const icu::UnicodeString p(prefix, -1, icu::UnicodeString::kInvariant);
  return u.compare(pos, p.length(), p) == 0;
}

// Byte offsets of each code point start, plus the end offset.
std::vector<size_t> CodePointOffsets(std::string_view text) {
  std::vector<size_t> offsets;
  offsets.reserve(text.size() + 1);
  for (size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(text.size());
  return offsets;
}

}  // namespace

uint64_t Tokenizer::Hash() const {
  std::string key = "tokenizer:v1:";
  key += lowercase ? '1' : '0';
  key += nfc ? '1' : '0';
  key += fold_urls ? '1' : '0';
  key += fold_mentions ? '1' : '0';
  key += split_punctuation ? '1' : '0';
  return Fnv1a64(key);
}

std::string Tokenizer::Normalize(std::string_view text) const {
  const icu::UnicodeString u = PrepareUnicode(text, nfc, lowercase);
  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
    const UChar32 c = u.char32At(i);
    if (IsSpace(c)) {
      pending_space = out.length() > 0;
      continue;
    }
    if (pending_space) out.append(static_cast<UChar>(' '));
    pending_space = false;
    out.append(c);
  }
  return ToUtf8(out);
}

std::vector<std::string> Tokenizer::Tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  const icu::UnicodeString u = PrepareUnicode(text, nfc, lowercase);
  const int32_t n = u.length();
  int32_t i = 0;
  auto end_of_nonspace = [&](int32_t from) {
    int32_t j = from;
    while (j < n && !IsSpace(u.char32At(j))) j = u.moveIndex32(j, 1);
    return j;
  };
  while (i < n) {
    const UChar32 c = u.char32At(i);
    if (IsSpace(c)) {
      i = u.moveIndex32(i, 1);
      continue;
    }
    if (fold_urls && (StartsWithAt(u, i, "http://") || StartsWithAt(u, i, "https://") ||
                      StartsWithAt(u, i, "www."))) {
      tokens.emplace_back("<url>");
      i = end_of_nonspace(i);
      continue;
    }
    if (fold_mentions && c == '@' && i + 1 < n) {
      const UChar32 next = u.char32At(i + 1);
      if (u_isalnum(next) || next == '_') {
        int32_t j = i + 1;
        while (j < n && (u_isalnum(u.char32At(j)) || u.char32At(j) == '_')) {
          j = u.moveIndex32(j, 1);
        }
        tokens.emplace_back("<user>");
        i = j;
        continue;
      }
    }
    if (IsWordChar(c)) {
      int32_t j = i;
      while (j < n) {
        const UChar32 d = u.char32At(j);
        if (IsWordChar(d)) {
          j = u.moveIndex32(j, 1);
          continue;
        }
        // Keep an apostrophe that joins two word characters.
        if ((d == '\'' || d == 0x2019) && j + 1 < n && IsWordChar(u.char32At(j + 1))) {
          j = u.moveIndex32(j, 1);
          continue;
        }
        break;
      }
      tokens.push_back(ToUtf8(u.tempSubStringBetween(i, j)));
      i = j;
      continue;
    }
    // Punctuation / symbols.
    int32_t j = u.moveIndex32(i, 1);
    if (!split_punctuation) {
      while (j < n && !IsSpace(u.char32At(j)) && !IsWordChar(u.char32At(j))) {
        j = u.moveIndex32(j, 1);
      }
    }
    tokens.push_back(ToUtf8(u.tempSubStringBetween(i, j)));
    i = j;
  }
  return tokens;
}

std::vector<std::string> Tokenize(std::string_view text, const Tokenizer& tokenizer) {
  return tokenizer.Tokenize(text);
}

NgramCounts CharNgrams(std::string_view text, int n_min, int n_max) {
  if (n_min < 1 || n_max < n_min) {
    Fail(ErrorKind::kArgument, "character n-gram range must satisfy 1 <= n_min <= n_max");
  }
  NgramCounts out;
  const auto offsets = CodePointOffsets(text);
  const size_t len = offsets.size() - 1;
  for (int n = n_min; n <= n_max; ++n) {
    const auto w = static_cast<size_t>(n);
    if (w > len) break;
    for (size_t s = 0; s + w <= len; ++s) {
      ++out[std::string(text.substr(offsets[s], offsets[s + w] - offsets[s]))];
    }
  }
  return out;
}

NgramCounts WordNgrams(const std::vector<std::string>& tokens, int n_min, int n_max) {
  if (n_min < 1 || n_max < n_min) {
    Fail(ErrorKind::kArgument, "word n-gram range must satisfy 1 <= n_min <= n_max");
  }
  NgramCounts out;
  for (int n = n_min; n <= n_max; ++n) {
    const auto w = static_cast<size_t>(n);
    for (size_t s = 0; s + w <= tokens.size(); ++s) {
      std::string g = tokens[s];
      for (size_t k = 1; k < w; ++k) {
        g += ' ';
        g += tokens[s + k];
      }
      ++out[g];
    }
  }
  return out;
}

TokenFilter ParseTokenFilter(const std::string& name) {
  if (name == "all") return TokenFilter::kAll;
  if (name == "alphabetic") return TokenFilter::kAlphabetic;
  if (name == "non_alphabetic") return TokenFilter::kNonAlphabetic;
  Fail(ErrorKind::kConfiguration, "unknown token filter '" + name + "'");
}

const char* TokenFilterName(TokenFilter f) {
  switch (f) {
    case TokenFilter::kAll:
      return "all";
    case TokenFilter::kAlphabetic:
      return "alphabetic";
    case TokenFilter::kNonAlphabetic:
      return "non_alphabetic";
  }
  return "all";
}

std::vector<std::string> ApplyTokenFilter(std::vector<std::string> tokens,
                                          TokenFilter filter) {
  if (filter == TokenFilter::kAll) return tokens;
  auto alphabetic = [](const std::string& t) {
    const icu::UnicodeString u = icu::UnicodeString::fromUTF8(t);
    for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
      if (!u_hasBinaryProperty(u.char32At(i), UCHAR_ALPHABETIC)) return false;
    }
    return !t.empty();
  };
  std::vector<std::string> out;
  for (auto& t : tokens) {
    if (alphabetic(t) == (filter == TokenFilter::kAlphabetic)) out.push_back(std::move(t));
  }
  return out;
}

Vocabulary Vocabulary::Build(const std::vector<std::vector<std::string>>& docs,
                             size_t max_size, size_t min_frequency) {
  std::unordered_map<std::string, size_t> counts;
  for (const auto& d : docs) {
    for (const auto& t : d) ++counts[t];
  }
  std::vector<std::pair<std::string, size_t>> items;
  for (auto& [t, c] : counts) {
    if (c >= min_frequency && t != "<pad>" && t != "<unk>") items.emplace_back(t, c);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  const size_t limit = max_size > 2 ? max_size - 2 : 0;
  for (size_t i = 0; i < items.size() && i < limit; ++i) {
    v.tokens_.push_back(items[i].first);
  }
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    v.ids_.emplace(v.tokens_[i], static_cast<int32_t>(i));
  }
  v.config_hash_ = Fnv1a64("vocab:" + std::to_string(max_size) + ":" +
                           std::to_string(min_frequency));
  return v;
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.tokens_.push_back(t);
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], static_cast<int32_t>(i)).second) {
      Fail(ErrorKind::kValidation, "duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

int32_t Vocabulary::Id(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end() || it->second < 2) return kUnknownId;
  return it->second;
}

const std::string& Vocabulary::Token(int32_t id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size()) {
    Fail(ErrorKind::kArgument, "vocabulary id out of range");
  }
  return tokens_[static_cast<size_t>(id)];
}

void Vocabulary::Save(const std::string& path) const {
  BinaryWriter w("TXVB", 1, config_hash_ == 0 ? 1 : config_hash_);
  w.Put<uint64_t>(tokens_.size());
  for (const auto& t : tokens_) w.PutString(t);
  w.WriteFile(path);
}

Vocabulary Vocabulary::Load(const std::string& path, uint64_t expected_hash) {
  auto r = BinaryReader::FromFile(path, "TXVB", 1, expected_hash);
  const auto n = r.Get<uint64_t>();
  std::vector<std::string> tokens;
  for (uint64_t i = 0; i < n; ++i) tokens.push_back(r.GetString());
  if (n < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    Fail(ErrorKind::kParse, "vocabulary file lacks reserved ids");
  }
  Vocabulary v = FromTokens(std::vector<std::string>(tokens.begin() + 2, tokens.end()));
  v.config_hash_ = r.config_hash();
  return v;
}

std::vector<int32_t> EncodeSequence(const Vocabulary& vocab,
                                    const std::vector<std::string>& tokens,
                                    size_t max_len) {
  std::vector<int32_t> ids(max_len, kPadId);
  for (size_t i = 0; i < tokens.size() && i < max_len; ++i) ids[i] = vocab.Id(tokens[i]);
  return ids;
}

double SparseVector::Norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.weight * e.weight;
  return std::sqrt(s);
}

TfidfConfig TfidfConfig::WordDefaults() {
  TfidfConfig c;
  c.analyzer = Analyzer::kWord;
  c.n_min = 1;
  c.n_max = 2;
  c.max_features = 100000;
  return c;
}

TfidfConfig TfidfConfig::CharDefaults() {
  TfidfConfig c;
  c.analyzer = Analyzer::kChar;
  c.n_min = 2;
  c.n_max = 5;
  c.max_features = 300000;
  return c;
}

uint64_t TfidfConfig::Hash() const {
  const std::string key = std::string("tfidf:v1:") +
                          (analyzer == Analyzer::kWord ? "word" : "char") + ":" +
                          std::to_string(n_min) + ":" + std::to_string(n_max) + ":" +
                          std::to_string(max_features) + ":" + std::to_string(min_df) +
                          ":" + (sublinear_tf ? "1" : "0") + ":" +
                          TokenFilterName(token_filter) + ":" +
                          HexDigest(tokenizer.Hash());
  return Fnv1a64(key);
}

NgramCounts TfidfModel::Extract(std::string_view text) const {
  if (config_.analyzer == Analyzer::kWord) {
    auto tokens = ApplyTokenFilter(config_.tokenizer.Tokenize(text), config_.token_filter);
    return WordNgrams(tokens, config_.n_min, config_.n_max);
  }
  if (config_.token_filter == TokenFilter::kAll) {
    return CharNgrams(config_.tokenizer.Normalize(text), config_.n_min, config_.n_max);
  }
  const auto tokens =
      ApplyTokenFilter(config_.tokenizer.Tokenize(text), config_.token_filter);
  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  return CharNgrams(joined, config_.n_min, config_.n_max);
}

TfidfModel TfidfModel::Fit(const std::vector<std::string>& docs,
                           const TfidfConfig& config) {
  if (docs.empty()) Fail(ErrorKind::kConfiguration, "tf-idf fit on an empty train split");
  TfidfModel m;
  m.config_ = config;
  std::unordered_map<std::string, uint32_t> df;
  for (const auto& d : docs) {
    for (const auto& [g, c] : m.Extract(d)) ++df[g];
  }
  std::vector<std::pair<std::string, uint32_t>> kept;
  for (auto& [g, c] : df) {
    if (c >= config.min_df) kept.emplace_back(g, c);
  }
  if (kept.empty()) {
    Fail(ErrorKind::kConfiguration, "vocabulary is empty after min_df=" +
                                        std::to_string(config.min_df));
  }
  if (kept.size() > config.max_features) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    kept.resize(config.max_features);
  }
  std::sort(kept.begin(), kept.end());
  m.num_documents_ = docs.size();
  for (auto& [g, c] : kept) {
    m.features_.push_back(g);
    m.df_.push_back(c);
  }
  m.BuildIndex();
  return m;
}

void TfidfModel::BuildIndex() {
  index_.clear();
  idf_.resize(features_.size());
  const double n = static_cast<double>(num_documents_);
  for (size_t i = 0; i < features_.size(); ++i) {
    index_.emplace(features_[i], static_cast<uint32_t>(i));
    idf_[i] = std::log((1.0 + n) / (1.0 + df_[i])) + 1.0;
  }
}

SparseVector TfidfModel::Transform(std::string_view text) const {
  SparseVector v;
  v.dim = features_.size();
  for (const auto& [g, count] : Extract(text)) {
    auto it = index_.find(g);
    if (it == index_.end()) continue;
    const double tf = config_.sublinear_tf ? 1.0 + std::log(static_cast<double>(count))
                                           : static_cast<double>(count);
    v.entries.push_back({it->second, tf * idf_[it->second]});
  }
  std::sort(v.entries.begin(), v.entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  const double norm = v.Norm();
  if (norm > 0) {
    for (auto& e : v.entries) e.weight /= norm;
  }
  return v;
}

uint32_t TfidfModel::DocumentFrequency(const std::string& feature) const {
  auto it = index_.find(feature);
  return it == index_.end() ? 0 : df_[it->second];
}

double TfidfModel::Idf(const std::string& feature) const {
  auto it = index_.find(feature);
  if (it == index_.end()) Fail(ErrorKind::kArgument, "feature '" + feature + "' not in model");
  return idf_[it->second];
}

std::string TfidfModel::ToBytes() const {
  BinaryWriter w("TXTF", 1, config_.Hash());
  w.Put<uint64_t>(num_documents_);
  w.Put<uint64_t>(features_.size());
  for (const auto& f : features_) w.PutString(f);
  w.PutVector(df_);
  return w.bytes();
}

TfidfModel TfidfModel::FromBytes(std::string bytes, const TfidfConfig& expected) {
  BinaryReader r(std::move(bytes), "TXTF", 1, expected.Hash());
  TfidfModel m;
  m.config_ = expected;
  m.num_documents_ = r.Get<uint64_t>();
  const auto n = r.Get<uint64_t>();
  for (uint64_t i = 0; i < n; ++i) m.features_.push_back(r.GetString());
  m.df_ = r.GetVector<uint32_t>();
  if (m.df_.size() != m.features_.size()) Fail(ErrorKind::kParse, "tf-idf file is inconsistent");
  m.BuildIndex();
  return m;
}

void TfidfModel::Save(const std::string& path) const { WriteStringToFile(path, ToBytes()); }

TfidfModel TfidfModel::Load(const std::string& path, const TfidfConfig& expected) {
  return FromBytes(ReadFileToString(path), expected);
}

TfidfModel TfidfFit(const CorpusView& train, const TfidfConfig& config) {
  std::vector<std::string> docs;
  docs.reserve(train.size());
  for (size_t i = 0; i < train.size(); ++i) docs.push_back(train[i].text);
  return TfidfModel::Fit(docs, config);
}

}  // namespace toxens
