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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "toxens/common.h"
#include "toxens/features.h"
#include "toxens/synthetic.h"

namespace toxens {
namespace {

using Tokens = std::vector<std::string>;

TfidfConfig Unigrams() {
  TfidfConfig c = TfidfConfig::WordDefaults();
  c.n_min = c.n_max = 1;
  c.min_df = 1;
  return c;
}

TEST_CASE("tokenize examples") {
  CHECK(Tokenize("").empty());
  CHECK(Tokenize("You ARE an idiot!!") == Tokens{"you", "are", "an", "idiot", "!", "!"});
  CHECK(Tokenize("fucc nicca yu pose to be pullin up").size() == 8);
  CHECK(Tokenize("see http://x.y/z now @bob") == Tokens{"see", "<url>", "now", "<user>"});
  CHECK(Tokenize("don't") == Tokens{"don't"});
  Tokenizer keep;
  keep.lowercase = false;
  keep.split_punctuation = false;
  CHECK(keep.Tokenize("Hey!!!") == Tokens{"Hey", "!!!"});
}

TEST_CASE("tokenize never emits empty tokens and is deterministic") {
  const Corpus c = MakeComplementarityCorpus(200, 1);
  for (const auto& s : c.samples()) {
    const auto a = Tokenize(s.text + "  ..  \t" + s.text);
    CHECK(a == Tokenize(s.text + "  ..  \t" + s.text));
    for (const auto& t : a) CHECK(!t.empty());
  }
  CHECK(Tokenize("Café") == Tokenize("Café"));
}

TEST_CASE("char n-gram examples") {
  CHECK(CharNgrams("ab", 2, 2) == NgramCounts{{"ab", 1}});
  CHECK(CharNgrams("aaa", 2, 2) == NgramCounts{{"aa", 2}});
  CHECK(CharNgrams("abcd", 2, 3) ==
        NgramCounts{{"ab", 1}, {"bc", 1}, {"cd", 1}, {"abc", 1}, {"bcd", 1}});
  CHECK(CharNgrams("a", 2, 4).empty());
  CHECK(CharNgrams("été", 2, 2) == NgramCounts{{"ét", 1}, {"té", 1}});
}

TEST_CASE("char n-gram count identity") {
  const std::vector<std::string> texts = {"", "x", "hello world", "aaaaaaa", "you are an idiot"};
  for (const auto& t : texts) {
    for (int n = 1; n <= 6; ++n) {
      size_t total = 0;
      for (const auto& [g, m] : CharNgrams(t, n, n)) total += m;
      const long expected = std::max<long>(0, static_cast<long>(t.size()) - n + 1);
      CHECK(total == static_cast<size_t>(expected));
    }
  }
}

TEST_CASE("word n-grams and token filters") {
  CHECK(WordNgrams({"a", "b", "c"}, 1, 2) ==
        NgramCounts{{"a", 1}, {"b", 1}, {"c", 1}, {"a b", 1}, {"b c", 1}});
  const Tokens t{"you", "1d10t", "!", "stupid"};
  CHECK(ApplyTokenFilter(t, TokenFilter::kAlphabetic) == Tokens{"you", "stupid"});
  CHECK(ApplyTokenFilter(t, TokenFilter::kNonAlphabetic) == Tokens{"1d10t", "!"});
  CHECK(ApplyTokenFilter(t, TokenFilter::kAll) == t);
  CHECK_THROWS_AS(ParseTokenFilter("vowels"), Error);
}

TEST_CASE("tfidf document frequencies and idf") {
  const TfidfModel m = TfidfModel::Fit({"a b", "a c"}, Unigrams());
  CHECK(m.dim() == 3);
  CHECK(m.DocumentFrequency("a") == 2);
  CHECK(m.DocumentFrequency("b") == 1);
  CHECK(m.DocumentFrequency("c") == 1);
  CHECK(m.Idf("a") == doctest::Approx(std::log(3.0 / 3.0) + 1).epsilon(1e-12));
  CHECK(m.Idf("b") == doctest::Approx(std::log(3.0 / 2.0) + 1).epsilon(1e-12));
  for (double v : m.idf()) CHECK(v > 0);

  const TfidfModel single = TfidfModel::Fit({"x y z"}, Unigrams());
  for (double v : single.idf()) CHECK(v == single.idf()[0]);

  TfidfConfig strict = Unigrams();
  strict.min_df = 3;
  try {
    TfidfModel::Fit({"a b", "a c"}, strict);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfiguration);
  }
}

TEST_CASE("tfidf transform by hand") {
  const TfidfModel m = TfidfModel::Fit({"a b", "a c"}, Unigrams());
  const double wa = 1.0, wb = std::log(1.5) + 1;
  const double norm = std::sqrt(wa * wa + wb * wb);
  const SparseVector v = m.Transform("a b");
  REQUIRE(v.entries.size() == 2);
  CHECK(v.dim == 3);
  CHECK(m.features()[v.entries[0].index] == "a");
  CHECK(m.features()[v.entries[1].index] == "b");
  CHECK(v.entries[0].weight == doctest::Approx(wa / norm).epsilon(1e-12));
  CHECK(v.entries[1].weight == doctest::Approx(wb / norm).epsilon(1e-12));

  const SparseVector rep = m.Transform("b b b");
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].weight == doctest::Approx(1.0));

  CHECK(m.Transform("zzz qqq").entries.empty());
}

TEST_CASE("tfidf output is sorted, bounded and unit norm") {
  const Corpus c = MakeComplementarityCorpus(150, 4);
  std::vector<std::string> docs;
  for (const auto& s : c.samples()) docs.push_back(s.text);
  for (const TfidfConfig& cfg : {TfidfConfig::WordDefaults(), TfidfConfig::CharDefaults()}) {
    TfidfConfig k = cfg;
    k.min_df = 1;
    const TfidfModel m = TfidfModel::Fit({docs.begin(), docs.begin() + 100}, k);
    for (size_t i = 100; i < docs.size(); ++i) {
      const SparseVector v = m.Transform(docs[i]);
      for (size_t j = 0; j < v.entries.size(); ++j) {
        CHECK(v.entries[j].index < m.dim());
        CHECK(std::isfinite(v.entries[j].weight));
        if (j > 0) CHECK(v.entries[j - 1].index < v.entries[j].index);
      }
      if (!v.entries.empty()) CHECK(std::abs(v.Norm() - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("tfidf binary round trip checks the config") {
  const TfidfModel m = TfidfModel::Fit({"a b", "a c"}, Unigrams());
  const TfidfModel back = TfidfModel::FromBytes(m.ToBytes(), Unigrams());
  CHECK(back.features() == m.features());
  CHECK(back.idf() == m.idf());
  TfidfConfig other = Unigrams();
  other.n_max = 2;
  CHECK_THROWS_AS(TfidfModel::FromBytes(m.ToBytes(), other), Error);
}

TEST_CASE("encode sequence") {
  const Vocabulary v = Vocabulary::FromTokens({"you"});
  REQUIRE(v.Id("you") == 2);
  CHECK(EncodeSequence(v, {"you", "zzzunseen"}, 4) == std::vector<int32_t>{2, 1, 0, 0});
  CHECK(EncodeSequence(v, {}, 3) == std::vector<int32_t>{0, 0, 0});
  CHECK(EncodeSequence(v, {"you", "you", "you", "x", "you"}, 3) == std::vector<int32_t>{2, 2, 2});
  for (size_t len = 1; len < 8; ++len) {
    CHECK(EncodeSequence(v, Tokens(5, "you"), len).size() == len);
  }
}

TEST_CASE("vocabulary build and round trip") {
  const Vocabulary v =
      Vocabulary::Build({{"a", "b", "a"}, {"c", "a", "b"}, {"d"}}, 10, 2);
  CHECK(v.tokens() == Tokens{"<pad>", "<unk>", "a", "b"});
  const Vocabulary capped = Vocabulary::Build({{"a", "b", "a"}, {"c", "a", "b"}}, 3, 1);
  CHECK(capped.size() == 3);
  for (size_t id = 2; id < v.size(); ++id) {
    CHECK(v.Id(v.Token(static_cast<int32_t>(id))) == static_cast<int32_t>(id));
  }
  const auto path = (std::filesystem::temp_directory_path() / "toxens_vocab_test.txvb").string();
  v.Save(path);
  CHECK(Vocabulary::Load(path) == v);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace toxens
