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

#include <chrono>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.h"
#include "toxens/metrics.h"
#include "toxens/models.h"
#include "toxens/synthetic.h"

namespace toxens {
namespace {

const Family kAllFamilies[] = {Family::kLrWord, Family::kLrChar,  Family::kCnn,
                               Family::kLstm,   Family::kBiLstm,  Family::kBiGru,
                               Family::kBiGruAttention};

double BoundFor(Family f) {
  switch (f) {
    case Family::kLrWord:
    case Family::kLrChar:
      return 1e-7;
    case Family::kCnn:
      return 1e-5;
    default:
      return 1e-4;
  }
}

Corpus Separable() {
  LabelSchema s{"sep", SchemaKind::kMultiLabel, {"bad"}};
  std::vector<Comment> c;
  for (int i = 0; i < 20; ++i) {
    const bool bad = i % 2;
    c.push_back({"s" + std::to_string(i),
                 std::string(bad ? "you awful " : "you lovely ") + "word" + std::to_string(i % 5),
                 {static_cast<uint8_t>(bad)}});
  }
  return Corpus(s, c);
}

Corpus TinyMultiClass() {
  LabelSchema s{"mc", SchemaKind::kMultiClass, {"hate", "offensive", "clean"}};
  const char* texts[] = {"you people are vermin", "shut up idiot", "nice day today",
                         "go away trash", "what a lovely photo", "vermin everywhere"};
  std::vector<Comment> c;
  for (int i = 0; i < 30; ++i) {
    const int k = i % 3;
    std::vector<uint8_t> y(3, 0);
    y[k] = 1;
    c.push_back({"m" + std::to_string(i), texts[(i + k) % 6], y});
  }
  return Corpus(s, c);
}

ClassifierSpec SmallNeural(Family f, SchemaKind kind) {
  ClassifierSpec s = ClassifierSpec::Defaults(f, kind, FamilyName(f));
  s.embed_dim = 8;
  s.units = 6;
  s.conv_widths = {2, 3};
  s.conv_maps = 4;
  s.epochs = 2;
  s.batch_size = 8;
  s.max_len = 8;
  s.min_frequency = 1;
  return s;
}

double Accuracy(const PredictionMatrix& p, const CorpusView& v) {
  const auto pred = Binarize(p, ThresholdVector::Constant(p.classes, 0.5));
  size_t ok = 0;
  for (size_t i = 0; i < v.size(); ++i) ok += pred[i] == v[i].labels;
  return static_cast<double>(ok) / static_cast<double>(v.size());
}

TEST_CASE("gradient check bounds hold for every family and head") {
  for (Family f : kAllFamilies) {
    for (SchemaKind k : {SchemaKind::kMultiLabel, SchemaKind::kMultiClass}) {
      for (uint64_t seed = 1; seed <= 3; ++seed) {
        const auto r = GradientCheck(ClassifierSpec::Defaults(f, k), seed);
        INFO(FamilyName(f), " seed ", seed, " worst ", r.worst_tensor);
        CHECK(r.parameters_checked > 0);
        CHECK(r.max_relative_error < BoundFor(f));
      }
    }
  }
}

TEST_CASE("spec defaults and validation") {
  const auto lstm = ClassifierSpec::Defaults(Family::kLstm, SchemaKind::kMultiLabel);
  CHECK(lstm.units == 128);
  CHECK(lstm.head == Head::kSigmoidPerClass);
  CHECK(ClassifierSpec::Defaults(Family::kBiGru, SchemaKind::kMultiClass).units == 64);
  CHECK(ClassifierSpec::Defaults(Family::kBiGruAttention, SchemaKind::kMultiClass).head ==
        Head::kSoftmax);
  auto wrong = lstm;
  wrong.head = Head::kSoftmax;
  CHECK_THROWS_AS(wrong.Validate(LabelSchema::Wikipedia()), Error);
  CHECK_NOTHROW(lstm.Validate(LabelSchema::Wikipedia()));
  CHECK_THROWS_AS(ParseFamily("transformer"), Error);
  const auto back = SpecFromJson(SpecToJson(lstm));
  CHECK(back.Hash() == lstm.Hash());
}

TEST_CASE("lr_word separates a separable toy set, deterministically") {
  const Corpus c = Separable();
  const auto v = CorpusView::All(c);
  const auto spec = ClassifierSpec::Defaults(Family::kLrWord, SchemaKind::kMultiLabel, "lr");
  const TrainedModel a = Fit(spec, v, v);
  CHECK(Accuracy(a.Predict(v), v) == 1.0);
  const TrainedModel b = Fit(spec, v, v);
  CHECK(a.linear()->params == b.linear()->params);
  CHECK(a.Predict(v) == b.Predict(v));
}

TEST_CASE("neural refits with the same seed are identical") {
  const Corpus c = Separable();
  const auto v = CorpusView::All(c);
  for (Family f : {Family::kCnn, Family::kBiGruAttention}) {
    const auto spec = SmallNeural(f, SchemaKind::kMultiLabel);
    const TrainedModel a = Fit(spec, v, v);
    const TrainedModel b = Fit(spec, v, v);
    CHECK(a.net()->params() == b.net()->params());
    for (float p : a.net()->params()) CHECK(std::isfinite(p));
    CHECK(!a.log().empty());
  }
}

TEST_CASE("xor: lstm fits it, unigram lr cannot beat the linear bound") {
  const Corpus c = MakeXorCorpus(400, 3);
  const auto v = CorpusView::All(c);
  size_t n[2][2] = {{0, 0}, {0, 0}};
  for (const auto& s : c.samples()) {
    const bool a = s.text.find("alpha") != std::string::npos;
    const bool b = s.text.find("beta") != std::string::npos;
    ++n[a][b];
  }
  const double bound = oracle::BestLinearXorAccuracy(n);
  CHECK(bound == doctest::Approx(0.75).epsilon(1e-12));

  auto lr = ClassifierSpec::Defaults(Family::kLrWord, SchemaKind::kMultiLabel, "lr");
  lr.tfidf.n_min = lr.tfidf.n_max = 1;
  CHECK(Accuracy(Fit(lr, v, v).Predict(v), v) <= bound + 1e-12);

  auto lstm = SmallNeural(Family::kLstm, SchemaKind::kMultiLabel);
  lstm.units = 8;
  lstm.epochs = 40;
  lstm.patience = 40;
  lstm.batch_size = 16;
  lstm.learning_rate = 1e-2;
  lstm.spatial_dropout = 0;
  lstm.dropout = 0;
  lstm.max_len = 4;
  CHECK(Accuracy(Fit(lstm, v, v).Predict(v), v) > 0.95);
}

TEST_CASE("prediction shape contracts") {
  const Corpus mc = TinyMultiClass();
  const auto v = CorpusView::All(mc);
  for (Family f : {Family::kLrChar, Family::kCnn, Family::kBiGru}) {
    const TrainedModel m = Fit(SmallNeural(f, SchemaKind::kMultiClass), v, v);
    const PredictionMatrix p = m.Predict(v);
    CHECK(p.rows() == v.size());
    CHECK(p.ids[0] == v[0].id);
    for (size_t r = 0; r < p.rows(); ++r) {
      double sum = 0;
      for (size_t k = 0; k < p.cols(); ++k) {
        CHECK(p.at(r, k) >= 0.0);
        CHECK(p.at(r, k) <= 1.0);
        sum += p.at(r, k);
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    CorpusView empty{&mc, {}};
    CHECK(m.Predict(empty).rows() == 0);
  }
}

TEST_CASE("zero output weights give one half under a sigmoid head") {
  const Corpus c = Separable();
  const auto v = CorpusView::All(c);
  TrainedModel m = Fit(SmallNeural(Family::kLstm, SchemaKind::kMultiLabel), v, v);
  auto* net = m.mutable_net();
  for (const char* name : {"head.w", "head.b"}) {
    const auto& slot = net->Slot(name);
    std::fill(net->params().begin() + slot.offset, net->params().begin() + slot.offset + slot.size(),
              0.0f);
  }
  const auto p = m.Predict(v);
  for (double s : p.scores) CHECK(s == 0.5);
}

TEST_CASE("appending padding never changes a prediction") {
  const Encoder encoders[] = {Encoder::kCnn, Encoder::kLstm, Encoder::kBiLstm, Encoder::kBiGru,
                              Encoder::kBiGruAttention};
  for (Encoder e : encoders) {
    for (bool softmax : {false, true}) {
      NetConfig cfg;
      cfg.encoder = e;
      cfg.vocab = 20;
      cfg.embed = 5;
      cfg.hidden = 4;
      cfg.conv_widths = {2, 3};
      cfg.conv_maps = 3;
      cfg.classes = 3;
      cfg.softmax = softmax;
      SequenceNet<double> net(cfg);
      CounterRng rng(17, static_cast<uint64_t>(e));
      net.Initialize(rng);
      for (int t = 0; t < 20; ++t) {
        std::vector<int32_t> ids;
        const size_t len = 3 + rng.NextBelow(5);
        for (size_t i = 0; i < len; ++i) ids.push_back(1 + static_cast<int32_t>(rng.NextBelow(19)));
        const auto base = net.Predict(ids);
        for (size_t pad = 1; pad <= 6; pad += 5) {
          auto padded = ids;
          padded.resize(ids.size() + pad, kPadId);
          const auto p = net.Predict(padded);
          for (size_t k = 0; k < base.size(); ++k) CHECK(std::abs(p[k] - base[k]) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("model round trip and spec hash check") {
  const Corpus c = Separable();
  const auto v = CorpusView::All(c);
  const auto dir = std::filesystem::temp_directory_path() / "toxens_models_test";
  std::filesystem::create_directories(dir);
  for (Family f : {Family::kLrWord, Family::kBiGruAttention}) {
    const auto spec = SmallNeural(f, SchemaKind::kMultiLabel);
    const TrainedModel m = Fit(spec, v, v);
    const std::string path = (dir / "m.txmd").string();
    m.Save(path);
    const TrainedModel back = TrainedModel::Load(path, spec.Hash());
    CHECK(back.Predict(v) == m.Predict(v));
    auto other = spec;
    other.seed = 99;
    CHECK_THROWS_AS(TrainedModel::Load(path, other.Hash()), Error);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("missing embedding file is a configuration error") {
  const Corpus c = Separable();
  const auto v = CorpusView::All(c);
  auto spec = SmallNeural(Family::kCnn, SchemaKind::kMultiLabel);
  spec.embedding_source = EmbeddingSource::kPretrainedFile;
  spec.embedding_path = "/nonexistent/vectors.txt";
  try {
    Fit(spec, v, v);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfiguration);
  }
}

TEST_CASE("divergence is a training error naming epoch and batch") {
  const Corpus c = Separable();
  const auto v = CorpusView::All(c);
  auto spec = SmallNeural(Family::kLstm, SchemaKind::kMultiLabel);
  spec.learning_rate = 1e38;
  try {
    Fit(spec, v, v);
    FAIL("expected a training error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTraining);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

}  // namespace
}  // namespace toxens
