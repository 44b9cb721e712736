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

// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is 1
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "toxens/binary_io.h"
#include "toxens/cli.h"
#include "toxens/config.h"
#include "toxens/ensemble.h"
#include "toxens/metrics.h"
#include "toxens/models.h"
#include "toxens/nn.h"
#include "toxens/synthetic.h"
#include "toxens/triage.h"

namespace toxens {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

// Tolerances and budgets.
constexpr double kGradLinear = 1e-7;
constexpr double kGradCnn = 1e-5;
constexpr double kGradOther = 1e-4;
constexpr double kGradBudgetSeconds = 60;
constexpr double kOracleTol = 1e-12;
constexpr int kOracleInstances = 100;
constexpr int kAucInstances = 200;
constexpr int kThresholdInstances = 100;
constexpr double kComplementarityBudgetSeconds = 300;
constexpr double kDeskLrCharF1 = 0.776, kDeskLrCharF1Tol = 0.03;
constexpr double kDeskLrCharAuc = 0.975, kDeskLrCharAucTol = 0.01;
constexpr double kDeskLrPearson = 0.83, kDeskCnnPearson = 0.91, kDeskPearsonTol = 0.05;
constexpr double kDeskNeuralFloor = 0.65;
constexpr double kDeskBudgetSeconds = 1800;

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> RandomVec(CounterRng& rng, size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(-scale, scale);
  return v;
}

double MaxDiff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Outcome GradientCertification(double* elapsed_hint) {
  const auto start = std::chrono::steady_clock::now();
  const Family families[] = {Family::kLrWord, Family::kLrChar, Family::kCnn, Family::kLstm,
                             Family::kBiLstm, Family::kBiGru, Family::kBiGruAttention};
  Outcome o;
  std::ostringstream d;
  for (Family f : families) {
    const double bound = IsLinear(f) ? kGradLinear : f == Family::kCnn ? kGradCnn : kGradOther;
    double worst = 0;
    for (SchemaKind k : {SchemaKind::kMultiLabel, SchemaKind::kMultiClass}) {
      for (uint64_t seed = 1; seed <= 3; ++seed) {
        worst = std::max(worst, GradientCheck(ClassifierSpec::Defaults(f, k), seed).max_relative_error);
      }
    }
    d << FamilyName(f) << " " << Fmt("%.1e", worst) << " ";
    if (!(worst < bound)) o.status = Status::kFail;
  }
  *elapsed_hint = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (*elapsed_hint >= kGradBudgetSeconds) {
    o.status = Status::kFail;
    d << "over budget";
  }
  o.detail = d.str();
  return o;
}

Outcome ScalarOracles() {
  using namespace nn;
  double lstm = 0, gru = 0, att = 0, conv = 0;
  for (int seed = 0; seed < kOracleInstances; ++seed) {
    CounterRng rng(static_cast<uint64_t>(seed), 101);
    {
      const size_t D = 2 + rng.NextBelow(4), H = 3;
      auto w = RandomVec(rng, 4 * H * D), u = RandomVec(rng, 4 * H * H), b = RandomVec(rng, 4 * H);
      auto x = RandomVec(rng, D, 2.0), h = RandomVec(rng, H), c = RandomVec(rng, H, 2.0);
      CellParams<double> p{D, H, w.data(), u.data(), b.data()};
      auto [h1, c1] = LstmCell<double>(x, h, c, p);
      auto [h2, c2] = oracle::Lstm(x, h, c, w, u, b);
      lstm = std::max({lstm, MaxDiff(h1, h2), MaxDiff(c1, c2)});
    }
    {
      const size_t D = 2 + rng.NextBelow(4), H = 3;
      auto w = RandomVec(rng, 3 * H * D), u = RandomVec(rng, 3 * H * H), b = RandomVec(rng, 3 * H);
      auto x = RandomVec(rng, D, 2.0), h = RandomVec(rng, H);
      CellParams<double> p{D, H, w.data(), u.data(), b.data()};
      gru = std::max(gru, MaxDiff(GruCell<double>(x, h, p), oracle::Gru(x, h, w, u, b)));
    }
    {
      const size_t T = 1 + rng.NextBelow(6), D = 2 + rng.NextBelow(3), A = 1 + rng.NextBelow(4);
      std::vector<std::vector<double>> h(T);
      for (auto& v : h) v = RandomVec(rng, D, 2.0);
      auto w = RandomVec(rng, A * D), b = RandomVec(rng, A), ctx = RandomVec(rng, A, 2.0);
      AttentionParams<double> p{D, A, w.data(), b.data(), ctx.data()};
      const auto got = AttentionPool(h, p);
      const auto want = oracle::AttentionPool(h, w, b, ctx);
      att = std::max({att, MaxDiff(got.pooled, want.pooled), MaxDiff(got.weights, want.weights)});
    }
    {
      const size_t E = 1 + rng.NextBelow(4), L = 3 + rng.NextBelow(6);
      std::vector<double> x = RandomVec(rng, L * E, 2.0);
      std::vector<std::vector<double>> rows(L);
      for (size_t t = 0; t < L; ++t) rows[t].assign(x.begin() + t * E, x.begin() + (t + 1) * E);
      std::vector<std::vector<double>> weights, biases;
      std::vector<oracle::Filter> filters;
      for (size_t width : {size_t{2}, size_t{3}}) {
        const size_t maps = 1 + rng.NextBelow(3);
        weights.push_back(RandomVec(rng, maps * width * E));
        biases.push_back(RandomVec(rng, maps, 0.5));
        for (size_t f = 0; f < maps; ++f) {
          oracle::Filter of;
          of.width = static_cast<int>(width);
          of.w.assign(weights.back().begin() + f * width * E, weights.back().begin() + (f + 1) * width * E);
          of.b = biases.back()[f];
          filters.push_back(of);
        }
      }
      std::vector<ConvBank<double>> banks;
      for (size_t i = 0; i < weights.size(); ++i) {
        banks.push_back({i + 2, biases[i].size(), weights[i].data(), biases[i].data()});
      }
      conv = std::max(conv, MaxDiff(ConvMaxPool<double>(x, L, E, banks).features,
                                    oracle::ConvMaxPool(rows, filters)));
    }
  }
  Outcome o;
  o.detail = "lstm " + Fmt("%.1e", lstm) + " gru " + Fmt("%.1e", gru) + " attention " +
             Fmt("%.1e", att) + " conv " + Fmt("%.1e", conv) + " over " +
             std::to_string(kOracleInstances) + " instances each";
  if (!(std::max({lstm, gru, att, conv}) < kOracleTol)) o.status = Status::kFail;
  return o;
}

Outcome MetricOracles() {
  CounterRng rng(2718, 0);
  const auto instance = [&](size_t n, std::vector<double>* s, std::vector<uint8_t>* g) {
    do {
      s->clear();
      g->clear();
      size_t pos = 0;
      for (size_t i = 0; i < n; ++i) {
        s->push_back(static_cast<double>(rng.NextBelow(21)) / 20.0);
        g->push_back(rng.Bernoulli(0.4));
        pos += g->back();
      }
      if (pos > 0 && pos < n) return;
    } while (true);
  };
  double auc_err = 0;
  for (int t = 0; t < kAucInstances; ++t) {
    std::vector<double> s;
    std::vector<uint8_t> g;
    instance(50, &s, &g);
    auc_err = std::max(auc_err, std::abs(RocAuc(s, g) - oracle::AucByPairs(s, g)));
  }
  int suboptimal = 0;
  for (int t = 0; t < kThresholdInstances; ++t) {
    std::vector<double> s;
    std::vector<uint8_t> g;
    instance(40, &s, &g);
    const auto got = BestThreshold(s, g);
    std::set<double> distinct(s.begin(), s.end());
    std::vector<double> cands{0.5};
    for (auto it = std::next(distinct.begin()); it != distinct.end(); ++it) {
      cands.push_back((*std::prev(it) + *it) / 2);
    }
    bool ok = std::abs(oracle::F1At(s, g, got.threshold) - got.f1) < kOracleTol;
    for (double c : cands) ok = ok && oracle::F1At(s, g, c) <= got.f1 + kOracleTol;
    suboptimal += ok ? 0 : 1;
  }
  double affine_err = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a, b, b2;
    for (int i = 0; i < 60; ++i) {
      a.push_back(rng.NextDouble());
      b.push_back(0.3 * a.back() + rng.NextDouble());
      b2.push_back(2 * b.back() + 3);
    }
    affine_err = std::max(affine_err, std::abs(Pearson(a, b2) - Pearson(a, b)));
  }
  Outcome o;
  o.detail = "auc " + Fmt("%.1e", auc_err) + " over " + std::to_string(kAucInstances) +
             ", threshold suboptimal " + std::to_string(suboptimal) + "/" +
             std::to_string(kThresholdInstances) + ", affine " + Fmt("%.1e", affine_err);
  if (!(auc_err < kOracleTol) || suboptimal > 0 || !(affine_err < kOracleTol)) o.status = Status::kFail;
  return o;
}

Outcome LeakFreedom() {
  const Corpus toy = StratifiedHoldout(MakeComplementarityCorpus(), 0.3, 5);
  const FoldAssignment folds = SplitFolds(toy, 5, 3);
  auto cnn = ClassifierSpec::Defaults(Family::kCnn, SchemaKind::kMultiLabel, "cnn");
  cnn.embed_dim = 8;
  cnn.conv_widths = {2, 3};
  cnn.conv_maps = 4;
  cnn.epochs = 1;
  cnn.min_frequency = 1;
  cnn.max_len = 16;
  const std::vector<ClassifierSpec> specs{
      ClassifierSpec::Defaults(Family::kLrWord, SchemaKind::kMultiLabel, "lr_word"),
      ClassifierSpec::Defaults(Family::kLrChar, SchemaKind::kMultiLabel, "lr_char"), cnn};
  OofOptions opt;
  opt.meta.enabled = false;
  const OofResult r = OofPredictions(specs, toy, folds, opt);
  size_t violations = 0;
  for (size_t row = 0; row < r.train.rows(); ++row) {
    violations += r.train.provenance[row] != folds.FoldOf(r.train.ids[row]);
  }
  bool audit_ok = true;
  try {
    AuditLeakFreedom(r.train, folds);
  } catch (const Error&) {
    audit_ok = false;
  }

  LabelSchema s{"four", SchemaKind::kMultiLabel, {"toxic"}};
  const Corpus four(s, {{"a", "you idiot fool", {1}},
                        {"b", "lovely sunny day", {0}},
                        {"c", "stupid fool you", {1}},
                        {"d", "a sunny garden", {0}}});
  const FoldAssignment f2 = SplitFolds(four, 2, 1);
  const auto lr = ClassifierSpec::Defaults(Family::kLrWord, SchemaKind::kMultiLabel, "lr");
  const OofResult small = OofPredictions({lr}, four, f2, opt);
  size_t mismatches = 0;
  for (int f = 0; f < 2; ++f) {
    std::vector<size_t> others;
    for (size_t i = 0; i < four.size(); ++i) {
      if (f2.FoldOf(four[i].id) != f) others.push_back(i);
    }
    const CorpusView train{&four, others};
    const TrainedModel m = Fit(lr, train, train);
    for (size_t row = 0; row < small.train.rows(); ++row) {
      if (small.train.provenance[row] != f) continue;
      const auto want = m.PredictText(four[*four.IndexOf(small.train.ids[row])].text);
      mismatches += small.train.at(row, 0) != want[0];
    }
  }
  Outcome o;
  o.detail = "k=5, 3 specs, " + std::to_string(r.train.rows()) + " rows, violations " +
             std::to_string(violations) + (audit_ok ? ", audit ok" : ", audit raised") +
             "; refit mismatches " + std::to_string(mismatches) + "/4";
  if (violations > 0 || !audit_ok || mismatches > 0 || small.train.rows() != 4) o.status = Status::kFail;
  return o;
}

Outcome Complementarity(double* elapsed) {
  const auto start = std::chrono::steady_clock::now();
  const Corpus c = StratifiedHoldout(MakeComplementarityCorpus(), 0.3, 5);
  const FoldAssignment folds = SplitFolds(c, 5, 7);
  auto a = ClassifierSpec::Defaults(Family::kLrWord, SchemaKind::kMultiLabel, "word_alpha");
  a.tfidf.token_filter = TokenFilter::kAlphabetic;
  auto b = ClassifierSpec::Defaults(Family::kLrChar, SchemaKind::kMultiLabel, "char_nonalpha");
  b.tfidf.token_filter = TokenFilter::kNonAlphabetic;
  OofOptions opt;
  opt.meta.enabled = false;
  const OofResult r = OofPredictions({a, b}, c, folds, opt);
  AuditLeakFreedom(r.train, folds);
  const auto classes = c.schema().classes;
  const BinaryMatrix gold_train = GoldFor(c, r.train.ids);
  const auto stackers = TrainStackers(r.train, gold_train, classes, 5, GbdtConfig{});
  const auto ens = EnsemblePredict(stackers, r.test, classes);
  const BinaryMatrix gold_test = GoldFor(c, ens.ids);

  PredictionMatrix ens_train;
  ens_train.ids = r.train.ids;
  ens_train.classes = classes;
  ens_train.scores.assign(r.train.rows() * classes.size(), 0);
  for (int f = 0; f < 5; ++f) {
    const auto p = StackerPredict(stackers[f], r.train, classes);
    for (size_t row = 0; row < p.rows(); ++row) {
      if (r.train.provenance[row] != f) continue;
      for (size_t k = 0; k < classes.size(); ++k) ens_train.at(row, k) = p.at(row, k);
    }
  }
  const auto ens_thr = SearchThresholds(ens_train, gold_train);
  const double ens_f1 = Evaluate(ens, gold_test, SchemaKind::kMultiLabel, &ens_thr).macro_f1;
  Outcome o;
  std::ostringstream d;
  d << "ensemble " << Fmt("%.3f", ens_f1);
  for (size_t s = 0; s < 2; ++s) {
    const auto thr = SearchThresholds(r.oof[s], gold_train);
    const double f1 = Evaluate(r.test_mean[s], gold_test, SchemaKind::kMultiLabel, &thr).macro_f1;
    d << ", " << r.oof[s].producer << " " << Fmt("%.3f", f1);
    if (!(ens_f1 > f1)) o.status = Status::kFail;
  }
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (*elapsed >= kComplementarityBudgetSeconds) {
    o.status = Status::kFail;
    d << ", over budget";
  }
  o.detail = d.str();
  return o;
}

Outcome TriageAccounting() {
  LabelSchema s{"wiki", SchemaKind::kMultiLabel, {"toxic"}};
  std::vector<Comment> comments;
  PredictionMatrix scores;
  scores.classes = s.classes;
  BinaryMatrix predicted, gold;
  for (int i = 0; i < 1794; ++i) {
    const std::string id = "fn" + std::to_string(i);
    comments.push_back({id, "comment " + id, {1}});
    scores.ids.push_back(id);
    scores.scores.push_back(0.1);
    predicted.push_back({0});
    gold.push_back({1});
  }
  const Corpus corpus(s, comments);
  TriageSession session =
      SampleErrors(scores, predicted, gold, corpus, "toxic", TriageKind::kFalseNegative, 200, 1);
  for (size_t i = 0; i < session.items.size(); ++i) {
    std::vector<std::string> tags;
    if (i < 46) tags.push_back(kDoubtfulLabel);
    else if (i % 2 == 0) tags.push_back("no_swear_words");
    session.RecordAnnotation(session.items[i].id, tags);
  }
  const FrequencyReport r = ComputeFrequencyReport(session);
  double nsw = -1;
  for (const auto& f : r.undoubtful) {
    if (f.tag == "no_swear_words") nsw = f.percent;
  }
  Outcome o;
  o.detail = "sampled " + std::to_string(r.sampled) + " of " + std::to_string(session.population) +
             ", doubtful " + Fmt("%.1f%%", r.doubtful.percent) + ", no_swear_words " +
             Fmt("%.1f%%", nsw);
  if (r.sampled != 200 || r.doubtful.percent != 23.0 || nsw != 50.0) o.status = Status::kFail;
  return o;
}

int Cli(const std::vector<std::string>& args, std::string* err) {
  std::ostringstream out, e;
  const int code = RunCli(args, out, e);
  *err = e.str();
  return code;
}

Outcome DeskScale(double* elapsed) {
  const auto start = std::chrono::steady_clock::now();
  const std::string config = std::string(TOXENS_SOURCE_DIR) + "/configs/wikipedia.ini";
  const PipelineConfig cfg = LoadConfig(config);
  std::vector<std::string> needed{cfg.dataset.path, cfg.dataset.test_path, cfg.dataset.test_labels_path,
                                  cfg.Model("cnn_glove").embedding_path};
  for (const auto& p : needed) {
    if (!fs::exists(ResolveDataPath(p))) {
      return {Status::kSkip, "missing " + p + " (set TOXENS_DATA_DIR to the dataset root)"};
    }
  }
  const char* env_out = std::getenv("TOXENS_ACCEPTANCE_OUT");
  const std::string out = env_out ? env_out : (fs::temp_directory_path() / "toxens_acceptance").string();
  const std::vector<std::string> models{"lr_word", "lr_char", "cnn_glove", "cnn_ft"};
  std::vector<std::vector<std::string>> steps{{"ingest"}, {"embed-train"}};
  std::vector<std::string> fit{"fit"}, eval{"evaluate"};
  for (const auto& m : models) {
    fit.insert(fit.end(), {"--model", m});
    eval.insert(eval.end(), {"--model", m});
  }
  steps.push_back(fit);
  for (const std::string split : {"train", "test"}) {
    std::vector<std::string> p{"predict", "--split", split};
    for (const auto& m : models) p.insert(p.end(), {"--model", m});
    steps.push_back(p);
  }
  steps.push_back(eval);
  steps.push_back({"correlate", "--pair", "lr_word:lr_char", "--pair", "cnn_glove:cnn_ft"});
  for (auto step : steps) {
    step.insert(step.begin(), {"--config", config, "--out-dir", out});
    std::string err;
    if (Cli(step, &err) != 0) return {Status::kFail, step[4] + " failed: " + err};
  }
  const auto metrics = [&](const std::string& m) {
    return json::parse(ReadFileToString(out + "/reports/" + m + ".metrics.json"))["macro"];
  };
  const auto pearson = [&](const std::string& a, const std::string& b) {
    return json::parse(ReadFileToString(out + "/reports/correlation." + a + "__" + b + ".json"))
        ["average"]["pearson"].get<double>();
  };
  const auto lr_char = metrics("lr_char");
  const double f1 = lr_char["f1"], auc = lr_char["auc"];
  const double r_lr = pearson("lr_word", "lr_char"), r_cnn = pearson("cnn_glove", "cnn_ft");
  Outcome o;
  std::ostringstream d;
  d << "lr_char F1 " << Fmt("%.3f", f1) << " AUC " << Fmt("%.3f", auc) << ", r(lr_word,lr_char) "
    << Fmt("%.3f", r_lr) << ", r(cnn_glove,cnn_ft) " << Fmt("%.3f", r_cnn);
  bool ok = std::abs(f1 - kDeskLrCharF1) <= kDeskLrCharF1Tol &&
            std::abs(auc - kDeskLrCharAuc) <= kDeskLrCharAucTol &&
            std::abs(r_lr - kDeskLrPearson) <= kDeskPearsonTol &&
            std::abs(r_cnn - kDeskCnnPearson) <= kDeskPearsonTol && r_lr < r_cnn;
  for (const std::string m : {"cnn_glove", "cnn_ft"}) {
    const double nf1 = metrics(m)["f1"];
    d << ", " << m << " F1 " << Fmt("%.3f", nf1);
    ok = ok && nf1 >= kDeskNeuralFloor;
  }
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (*elapsed > kDeskBudgetSeconds) {
    ok = false;
    d << ", over budget";
  }
  o.status = ok ? Status::kPass : Status::kFail;
  o.detail = d.str();
  return o;
}

}  // namespace
}  // namespace toxens

int main() {
  using namespace toxens;
  struct Criterion {
    const char* name;
    std::function<Outcome(double*)> run;
  };
  const std::vector<Criterion> criteria{
      {"gradient-certification", [](double* t) { return GradientCertification(t); }},
      {"scalar-oracle-equivalence", [](double*) { return ScalarOracles(); }},
      {"metric-oracles", [](double*) { return MetricOracles(); }},
      {"oof-leak-freedom", [](double*) { return LeakFreedom(); }},
      {"ensemble-complementarity", [](double* t) { return Complementarity(t); }},
      {"desk-scale-reproduction", [](double* t) { return DeskScale(t); }},
      {"triage-accounting", [](double*) { return TriageAccounting(); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    double ignored = 0;
    try {
      o = c.run(&ignored);
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failures += o.status == Status::kFail;
    std::printf("%s %-26s %7.1fs  %s\n", tag, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
