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

#include "toxens/synthetic.h"

#include <string>
#include <vector>

#include "toxens/common.h"
#include "toxens/csv.h"

namespace toxens {

namespace {

std::string Join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace

Corpus MakeComplementarityCorpus(size_t n, uint64_t seed) {
  LabelSchema schema{"complementarity", SchemaKind::kMultiLabel, {"toxic", "insult"}};
  static const std::vector<std::string> kNeutral{
      "the",     "article", "edit",    "page",   "source", "talk", "please", "thanks",
      "review",  "section", "history", "change", "link",   "book", "city",   "river"};
  static const std::vector<std::vector<std::string>> kPlain{{"idiot", "stupid"}, {"loser", "jerk"}};
  static const std::vector<std::vector<std::string>> kObfuscated{{"1d10t", "stup1d"},
                                                                {"l0s3r", "j3rk"}};
  CounterRng rng(seed);
  std::vector<Comment> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> words;
    const size_t len = 6 + rng.NextBelow(5);
    for (size_t k = 0; k < len; ++k) words.push_back(kNeutral[rng.NextBelow(kNeutral.size())]);
    std::vector<uint8_t> y(2, 0);
    for (size_t c = 0; c < 2; ++c) {
      if (!rng.Bernoulli(0.3)) continue;
      y[c] = 1;
      const auto& pool = rng.Bernoulli(0.5) ? kPlain[c] : kObfuscated[c];
      words.push_back(pool[rng.NextBelow(2)]);
    }
    Shuffle(words, rng);
    out.push_back({"c" + std::to_string(i), Join(words), y});
  }
  return Corpus(schema, std::move(out));
}

Corpus MakeXorCorpus(size_t n, uint64_t seed) {
  LabelSchema schema{"xor", SchemaKind::kMultiLabel, {"xor"}};
  CounterRng rng(seed);
  std::vector<Comment> out;
  out.reserve(n);
  std::vector<int> pattern(n);
  for (size_t i = 0; i < n; ++i) pattern[i] = static_cast<int>(i % 4);
  Shuffle(pattern, rng);
  for (size_t i = 0; i < n; ++i) {
    const bool a = pattern[i] & 1;
    const bool b = pattern[i] & 2;
    std::vector<std::string> words{a ? "alpha" : "gamma", b ? "beta" : "delta"};
    Shuffle(words, rng);
    out.push_back({"x" + std::to_string(i), Join(words), {static_cast<uint8_t>(a != b)}});
  }
  return Corpus(schema, std::move(out));
}

std::string ToJigsawCsv(const Corpus& corpus) {
  std::vector<std::string> header{"id", "comment_text"};
  for (const auto& c : corpus.schema().classes) header.push_back(c);
  std::string out = CsvJoin(header) + "\n";
  for (const auto& s : corpus.samples()) {
    std::vector<std::string> row{s.id, s.text};
    for (uint8_t y : s.labels) row.push_back(y ? "1" : "0");
    out += CsvJoin(row) + "\n";
  }
  return out;
}

}  // namespace toxens
