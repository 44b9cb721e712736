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

#include "toxens/embeddings.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

#include "toxens/binary_io.h"
#include "toxens/common.h"

namespace toxens {

void SkipgramConfig::Validate() const {
  if (dimension < 1) Fail(ErrorKind::kConfiguration, "embedding dimension must be >= 1");
  if (window < 1) Fail(ErrorKind::kConfiguration, "window must be >= 1");
  if (epochs < 1) Fail(ErrorKind::kConfiguration, "epochs must be >= 1");
  if (negatives < 1) Fail(ErrorKind::kConfiguration, "negatives must be >= 1");
  if (!(learning_rate > 0)) Fail(ErrorKind::kConfiguration, "learning rate must be positive");
  if (min_n < 1 || max_n < min_n) Fail(ErrorKind::kConfiguration, "bad subword n-range");
  if (buckets == 0 || (buckets & (buckets - 1)) != 0) {
    Fail(ErrorKind::kConfiguration, "bucket count must be a power of two");
  }
  if (threads < 1) Fail(ErrorKind::kConfiguration, "threads must be >= 1");
}

uint64_t SkipgramConfig::Hash() const {
  std::ostringstream ss;
  ss << "skipgram:v1:" << dimension << ':' << window << ':' << epochs << ':'
     << negatives << ':' << learning_rate << ':' << min_n << ':' << max_n << ':'
     << buckets << ':' << min_count << ':' << seed;
  return Fnv1a64(ss.str());
}

EmbeddingTable::EmbeddingTable(int dimension, std::vector<std::string> words,
                               std::vector<float> word_rows)
    : dimension_(dimension), words_(std::move(words)), word_rows_(std::move(word_rows)) {
  if (word_rows_.size() != words_.size() * static_cast<size_t>(dimension_)) {
    Fail(ErrorKind::kInternal, "embedding rows do not match word count");
  }
  BuildIndex();
}

void EmbeddingTable::BuildIndex() {
  index_.clear();
  for (size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = i;
}

std::vector<std::string> FramedNgrams(std::string_view word, int min_n, int max_n) {
  const std::string framed = "<" + std::string(word) + ">";
  std::vector<size_t> offsets;
  for (size_t i = 0; i < framed.size(); ++i) {
    if ((static_cast<unsigned char>(framed[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(framed.size());
  const size_t len = offsets.size() - 1;
  std::vector<std::string> out;
  for (size_t s = 0; s < len; ++s) {
    for (int n = min_n; n <= max_n; ++n) {
      const size_t e = s + static_cast<size_t>(n);
      if (e > len) break;
      out.push_back(framed.substr(offsets[s], offsets[e] - offsets[s]));
    }
  }
  return out;
}

std::vector<uint32_t> EmbeddingTable::SubwordBuckets(std::string_view word) const {
  std::vector<uint32_t> out;
  if (buckets_ == 0) return out;
  for (const auto& g : FramedNgrams(word, min_n_, max_n_)) {
    out.push_back(Fnv1a32(g) & (buckets_ - 1));
  }
  return out;
}

std::vector<float> EmbeddingTable::Lookup(std::string_view word) const {
  const auto d = static_cast<size_t>(dimension_);
  std::vector<float> v(d, 0.0f);
  auto it = index_.find(std::string(word));
  if (it != index_.end()) {
    const float* row = &word_rows_[it->second * d];
    std::copy(row, row + d, v.begin());
    for (uint32_t b : SubwordBuckets(word)) {
      const float* br = &bucket_rows_[static_cast<size_t>(b) * d];
      for (size_t k = 0; k < d; ++k) v[k] += br[k];
    }
    return v;
  }
  const auto ids = SubwordBuckets(word);
  if (ids.empty()) return v;
  for (uint32_t b : ids) {
    const float* br = &bucket_rows_[static_cast<size_t>(b) * d];
    for (size_t k = 0; k < d; ++k) v[k] += br[k];
  }
  const float inv = 1.0f / static_cast<float>(ids.size());
  for (auto& x : v) x *= inv;
  return v;
}

void EmbeddingTable::Save(const std::string& path) const {
  BinaryWriter w("TXEM", 1, 1);
  w.Put<int32_t>(dimension_);
  w.Put<uint32_t>(buckets_);
  w.Put<int32_t>(min_n_);
  w.Put<int32_t>(max_n_);
  w.PutString(source);
  w.Put<int32_t>(window);
  w.Put<int32_t>(epochs);
  w.Put<uint64_t>(words_.size());
  for (const auto& s : words_) w.PutString(s);
  w.PutVector(word_rows_);
  w.PutVector(bucket_rows_);
  w.WriteFile(path);
}

EmbeddingTable EmbeddingTable::Load(const std::string& path) {
  auto r = BinaryReader::FromFile(path, "TXEM", 1, 0);
  EmbeddingTable t;
  t.dimension_ = r.Get<int32_t>();
  t.buckets_ = r.Get<uint32_t>();
  t.min_n_ = r.Get<int32_t>();
  t.max_n_ = r.Get<int32_t>();
  t.source = r.GetString();
  t.window = r.Get<int32_t>();
  t.epochs = r.Get<int32_t>();
  const auto n = r.Get<uint64_t>();
  for (uint64_t i = 0; i < n; ++i) t.words_.push_back(r.GetString());
  t.word_rows_ = r.GetVector<float>();
  t.bucket_rows_ = r.GetVector<float>();
  const auto d = static_cast<size_t>(t.dimension_);
  if (t.word_rows_.size() != n * d || t.bucket_rows_.size() != size_t{t.buckets_} * d) {
    Fail(ErrorKind::kParse, "embedding file '" + path + "' is inconsistent");
  }
  t.BuildIndex();
  return t;
}

std::vector<std::pair<size_t, size_t>> ContextPairs(size_t sentence_length, int window) {
  std::vector<std::pair<size_t, size_t>> out;
  const auto w = static_cast<size_t>(window);
  for (size_t c = 0; c < sentence_length; ++c) {
    const size_t lo = c >= w ? c - w : 0;
    const size_t hi = std::min(sentence_length - 1, c + w);
    for (size_t j = lo; j <= hi; ++j) {
      if (j != c) out.emplace_back(c, j);
    }
  }
  return out;
}

class SkipgramTrainer {
 public:
  SkipgramTrainer(const std::vector<std::vector<std::string>>& sentences,
                  const SkipgramConfig& config)
      : config_(config), d_(static_cast<size_t>(config.dimension)) {
    std::unordered_map<std::string, uint64_t> counts;
    for (const auto& s : sentences) {
      for (const auto& w : s) ++counts[w];
    }
    std::vector<std::pair<std::string, uint64_t>> kept;
    for (auto& [w, c] : counts) {
      if (c >= static_cast<uint64_t>(config.min_count)) kept.emplace_back(w, c);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (kept.empty()) Fail(ErrorKind::kConfiguration, "skip-gram corpus has no words");

    table_.dimension_ = config.dimension;
    table_.buckets_ = config.buckets;
    table_.min_n_ = config.min_n;
    table_.max_n_ = config.max_n;
    for (auto& [w, c] : kept) {
      table_.words_.push_back(w);
      counts_.push_back(c);
    }
    table_.BuildIndex();

    for (const auto& s : sentences) {
      std::vector<int32_t> ids;
      for (const auto& w : s) {
        auto it = table_.index_.find(w);
        if (it != table_.index_.end()) ids.push_back(static_cast<int32_t>(it->second));
      }
      if (!ids.empty()) {
        total_tokens_ += ids.size();
        sentences_.push_back(std::move(ids));
      }
    }
    subwords_.resize(table_.words_.size());
    for (size_t i = 0; i < table_.words_.size(); ++i) {
      subwords_[i] = table_.SubwordBuckets(table_.words_[i]);
    }

    CounterRng init(config.seed, /*stream=*/1);
    const float bound = 1.0f / static_cast<float>(config.dimension);
    table_.word_rows_.resize(table_.words_.size() * d_);
    for (auto& x : table_.word_rows_) x = static_cast<float>(init.Uniform(-bound, bound));
    table_.bucket_rows_.resize(size_t{config.buckets} * d_);
    for (auto& x : table_.bucket_rows_) x = static_cast<float>(init.Uniform(-bound, bound));
    output_.assign(table_.words_.size() * d_, 0.0f);
    BuildNoiseTable();
  }

  SkipgramResult Run() {
    SkipgramResult result;
    const int threads = config_.threads;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      std::vector<double> loss(threads, 0.0);
      std::vector<uint64_t> count(threads, 0);
      auto work = [&](int t) {
        CounterRng rng(config_.seed, 1000 + static_cast<uint64_t>(epoch) * 997 +
                                         static_cast<uint64_t>(t));
        std::vector<float> hidden(d_), grad(d_);
        const size_t n = sentences_.size();
        const size_t begin = n * static_cast<size_t>(t) / static_cast<size_t>(threads);
        const size_t end = n * static_cast<size_t>(t + 1) / static_cast<size_t>(threads);
        uint64_t shard_tokens = 0;
        for (size_t s = begin; s < end; ++s) shard_tokens += sentences_[s].size();
        // Each shard advances the schedule as if it were the whole epoch.
        uint64_t seen = 0;
        for (size_t s = begin; s < end; ++s) {
          const auto& ids = sentences_[s];
          const double progress =
              (static_cast<double>(epoch) +
               static_cast<double>(seen) / static_cast<double>(std::max<uint64_t>(shard_tokens, 1))) /
              static_cast<double>(config_.epochs);
          const auto lr = static_cast<float>(config_.learning_rate * std::max(0.0, 1.0 - progress));
          for (const auto& [c, j] : ContextPairs(ids.size(), config_.window)) {
            loss[t] += TrainPair(ids[c], ids[j], lr, rng, hidden, grad);
            ++count[t];
          }
          seen += ids.size();
        }
      };
      if (threads == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
      }
      double total = 0;
      uint64_t pairs = 0;
      for (int t = 0; t < threads; ++t) {
        total += loss[t];
        pairs += count[t];
      }
      result.epoch_loss.push_back(pairs ? total / static_cast<double>(pairs) : 0.0);
    }
    table_.source = "skipgram";
    table_.window = config_.window;
    table_.epochs = config_.epochs;
    result.table = std::move(table_);
    return result;
  }

 private:
  void BuildNoiseTable() {
    // Unigram^(3/4) table.
    const size_t size = std::clamp<size_t>(table_.words_.size() * 100, 1000, 10000000);
    double z = 0;
    for (auto c : counts_) z += std::pow(static_cast<double>(c), 0.75);
    noise_.reserve(size);
    for (size_t w = 0; w < counts_.size(); ++w) {
      const double share = std::pow(static_cast<double>(counts_[w]), 0.75) / z;
      const auto n = static_cast<size_t>(std::ceil(share * static_cast<double>(size)));
      for (size_t k = 0; k < n; ++k) noise_.push_back(static_cast<int32_t>(w));
    }
  }

  // One positive pair plus config_.negatives noise targets. Returns the loss.
  double TrainPair(int32_t center, int32_t context, float lr, CounterRng& rng,
                   std::vector<float>& hidden, std::vector<float>& grad) {
    float* wrow = &table_.word_rows_[static_cast<size_t>(center) * d_];
    const auto& buckets = subwords_[static_cast<size_t>(center)];
    std::copy(wrow, wrow + d_, hidden.begin());
    for (uint32_t b : buckets) {
      const float* br = &table_.bucket_rows_[size_t{b} * d_];
      for (size_t k = 0; k < d_; ++k) hidden[k] += br[k];
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    double loss = 0;
    for (int n = 0; n <= config_.negatives; ++n) {
      int32_t target;
      float label;
      if (n == 0) {
        target = context;
        label = 1.0f;
      } else {
        target = noise_[rng.NextBelow(noise_.size())];
        if (target == context) continue;
        label = 0.0f;
      }
      float* out = &output_[static_cast<size_t>(target) * d_];
      float score = 0;
      for (size_t k = 0; k < d_; ++k) score += hidden[k] * out[k];
      const float p = Sigmoid(score);
      loss += label > 0 ? -std::log(std::max(p, 1e-7f)) : -std::log(std::max(1.0f - p, 1e-7f));
      const float g = lr * (label - p);
      for (size_t k = 0; k < d_; ++k) {
        grad[k] += g * out[k];
        out[k] += g * hidden[k];
      }
    }
    // The hidden vector is a sum, so every summand receives the full gradient.
    for (size_t k = 0; k < d_; ++k) wrow[k] += grad[k];
    for (uint32_t b : buckets) {
      float* br = &table_.bucket_rows_[size_t{b} * d_];
      for (size_t k = 0; k < d_; ++k) br[k] += grad[k];
    }
    return loss;
  }

  SkipgramConfig config_;
  size_t d_;
  EmbeddingTable table_;
  std::vector<uint64_t> counts_;
  std::vector<std::vector<int32_t>> sentences_;
  std::vector<std::vector<uint32_t>> subwords_;
  std::vector<float> output_;
  std::vector<int32_t> noise_;
  uint64_t total_tokens_ = 0;
};

SkipgramResult TrainSkipgram(const std::vector<std::vector<std::string>>& sentences,
                             const SkipgramConfig& config) {
  config.Validate();
  bool any = false;
  for (const auto& s : sentences) any = any || !s.empty();
  if (!any) Fail(ErrorKind::kConfiguration, "skip-gram training stream is empty");
  SkipgramTrainer trainer(sentences, config);
  return trainer.Run();
}

namespace {

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool ParseFloat(std::string_view s, float* out) {
  // from_chars for float is available in libstdc++ 11.
  const auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(*out);
}

bool IsUnsigned(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

EmbeddingTable ParsePretrained(std::string_view content, PretrainedLoadReport* report) {
  PretrainedLoadReport rep;
  std::vector<std::string> words;
  std::vector<float> rows;
  std::unordered_map<std::string, size_t> seen;
  int dim = -1;
  size_t line_no = 0;
  size_t start = 0;
  bool first = true;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto parts = SplitWhitespace(line);
    if (parts.empty()) continue;
    if (first) {
      first = false;
      if (parts.size() == 2 && IsUnsigned(parts[0]) && IsUnsigned(parts[1])) {
        rep.had_header = true;
        continue;
      }
    }
    if (parts.size() < 2) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": row has no vector");
    }
    const int d = static_cast<int>(parts.size()) - 1;
    if (dim < 0) dim = d;
    if (d != dim) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": ragged row with " +
                                  std::to_string(d) + " values, expected " +
                                  std::to_string(dim));
    }
    std::vector<float> v(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
      if (!ParseFloat(parts[static_cast<size_t>(k) + 1], &v[static_cast<size_t>(k)])) {
        Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": bad number '" +
                                    std::string(parts[static_cast<size_t>(k) + 1]) + "'");
      }
    }
    const std::string word(parts[0]);
    auto it = seen.find(word);
    if (it != seen.end()) {
      ++rep.duplicates;
      std::copy(v.begin(), v.end(), rows.begin() + static_cast<long>(it->second * static_cast<size_t>(d)));
    } else {
      seen.emplace(word, words.size());
      words.push_back(word);
      rows.insert(rows.end(), v.begin(), v.end());
    }
    ++rep.rows;
  }
  if (words.empty()) Fail(ErrorKind::kParse, "pretrained vector file has no rows");
  EmbeddingTable t(dim, std::move(words), std::move(rows));
  t.source = "pretrained";
  if (report) *report = rep;
  return t;
}

EmbeddingTable LoadPretrained(const std::string& path, PretrainedLoadReport* report) {
  auto t = ParsePretrained(ReadFileToString(path), report);
  t.source = path;
  return t;
}

void SaveText(const EmbeddingTable& table, const std::string& path) {
  std::ostringstream ss;
  ss.precision(9);
  ss << table.num_words() << ' ' << table.dimension() << '\n';
  for (const auto& w : table.words()) {
    ss << w;
    for (float x : table.Lookup(w)) ss << ' ' << x;
    ss << '\n';
  }
  WriteStringToFile(path, ss.str());
}

}  // namespace toxens
