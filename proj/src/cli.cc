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

#include "toxens/cli.h"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/common.h"
#include "toxens/config.h"
#include "toxens/ensemble.h"
#include "toxens/manifest.h"
#include "toxens/metrics.h"
#include "toxens/models.h"
#include "toxens/triage.h"
#include "toxens/triage_server.h"

namespace toxens {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<uint64_t> seed;
  int jobs = 1;
  bool deterministic = false;
  std::string out_dir = "out";
};

struct Context {
  Context(const Flags& f, const std::string& command, const std::vector<std::string>& args,
          std::ostream& o, std::ostream& e)
      : flags(f), out(o), err(e), manifest(command, args, f.out_dir), command(command) {}

  Flags flags;
  PipelineConfig cfg;
  bool has_config = false;
  std::ostream& out;
  std::ostream& err;
  RunManifest manifest;
  std::string command;
  bool finished = false;

  std::string P(const std::string& rel) const { return (fs::path(flags.out_dir) / rel).string(); }
  int threads() const { return flags.deterministic ? 1 : std::max(1, flags.jobs); }
  void Wrote(const std::string& path) { manifest.AddArtifact(path); }

  void RequireConfig() const {
    if (!has_config) Fail(ErrorKind::kConfiguration, "'" + command + "' needs --config");
  }
};

void RequireFile(const std::string& path, const std::string& hint) {
  if (!fs::exists(path)) Fail(ErrorKind::kConfiguration, "missing " + path + " (" + hint + ")");
}

// Ingested corpus and folds.

struct Data {
  Corpus corpus;
  FoldAssignment folds;
};

Data LoadData(Context& ctx) {
  const std::string records = ctx.P("corpus/records.ndjson");
  const std::string schema = ctx.P("corpus/schema.json");
  const std::string folds_csv = ctx.P("corpus/folds.csv");
  const std::string folds_meta = ctx.P("corpus/folds.json");
  for (const auto& p : {records, schema, folds_csv, folds_meta}) RequireFile(p, "run 'ingest' first");
  Corpus corpus = LoadCorpus(records, schema);
  const auto meta = nlohmann::json::parse(ReadFileToString(folds_meta));
  FoldAssignment folds = FoldAssignment::FromCsv(ReadFileToString(folds_csv), meta.at("k").get<int>(),
                                                 meta.at("seed").get<uint64_t>());
  ctx.manifest.AddInput(records);
  ctx.manifest.AddInput(folds_csv);
  return {std::move(corpus), std::move(folds)};
}

ClassifierSpec Prepare(const Context& ctx, ClassifierSpec spec, int threads) {
  spec.threads = threads;
  if (spec.embedding_source == EmbeddingSource::kTrainedSubword && spec.embedding_path.empty()) {
    spec.embedding_path = ctx.P(ctx.cfg.embeddings.output);
  } else if (!spec.embedding_path.empty()) {
    spec.embedding_path = ResolveDataPath(spec.embedding_path);
  }
  return spec;
}

std::vector<std::string> SelectedModels(const Context& ctx, const std::vector<std::string>& names) {
  if (!names.empty()) {
    for (const auto& n : names) ctx.cfg.Model(n);
    return names;
  }
  std::vector<std::string> out;
  for (const auto& m : ctx.cfg.models) out.push_back(m.name);
  if (out.empty()) Fail(ErrorKind::kConfiguration, "no [model.NAME] sections configured");
  return out;
}

// Predictions: cross-validated outputs live in oof/, full-fit outputs in
// predictions/.
std::string PredictionPath(const Context& ctx, const std::string& name, const std::string& split) {
  const std::string oof = ctx.P("oof/" + name + "." + split + ".csv");
  if (fs::exists(oof)) return oof;
  return ctx.P("predictions/" + name + "." + split + ".csv");
}

PredictionMatrix LoadPredictions(Context& ctx, const std::string& path) {
  RequireFile(path, "produce predictions with 'oof', 'stack' or 'predict'");
  ctx.manifest.AddInput(path);
  std::string producer = fs::path(path).filename().string();
  producer = producer.substr(0, producer.find('.'));
  return PredictionMatrix::FromCsv(ReadFileToString(path), producer);
}

void CheckClasses(const PredictionMatrix& m, const LabelSchema& schema) {
  if (m.classes != schema.classes) {
    Fail(ErrorKind::kValidation, "predictions from '" + m.producer + "' do not match the schema classes");
  }
}

// Stored thresholds, else a search over train-split scores, else the fixed
// threshold.
ThresholdVector ThresholdsFor(Context& ctx, const std::string& name, const Corpus& corpus) {
  const auto& classes = corpus.schema().classes;
  const std::string stored = ctx.P("thresholds/" + name + ".json");
  if (fs::exists(stored)) {
    ctx.manifest.AddInput(stored);
    auto t = ThresholdVector::FromJson(ReadFileToString(stored));
    t.Validate(corpus.schema());
    return t;
  }
  const std::string train = PredictionPath(ctx, name, "train");
  if (ctx.cfg.metrics.thresholds == "search" && fs::exists(train)) {
    const auto scores = LoadPredictions(ctx, train);
    CheckClasses(scores, corpus.schema());
    return SearchThresholds(scores, GoldFor(corpus, scores.ids));
  }
  return ThresholdVector::Constant(classes, ctx.cfg.metrics.fixed_threshold);
}

void RecordSettings(Context& ctx) {
  const auto& c = ctx.cfg;
  ctx.manifest.AddSeed("dataset", c.dataset.seed);
  ctx.manifest.AddSeed("embeddings", c.embeddings.skipgram.seed);
  for (const auto& m : c.models) ctx.manifest.AddSeed("model." + m.name, m.seed);
  ctx.manifest.AddSeed("ensemble", c.ensemble.gbdt.seed);
  ctx.manifest.AddSeed("triage", c.triage.seed);
  const auto& k = c.embeddings.skipgram;
  ctx.manifest.AddNote("linear_features", "tf-idf, sublinear tf, l2-normalized rows");
  ctx.manifest.AddNote("embedding_settings",
                       "skip-gram dimension=" + std::to_string(k.dimension) +
                           " window=" + std::to_string(k.window) +
                           " negatives=" + std::to_string(k.negatives) +
                           " epochs=" + std::to_string(k.epochs) + " ngrams=" +
                           std::to_string(k.min_n) + "-" + std::to_string(k.max_n) +
                           " buckets=" + std::to_string(k.buckets));
  ctx.manifest.AddNote("threads", std::to_string(ctx.threads()));
  ctx.manifest.AddNote("deterministic", ctx.flags.deterministic ? "true" : "false");
}

// ingest

void Ingest(Context& ctx) {
  ctx.RequireConfig();
  const auto& d = ctx.cfg.dataset;
  if (d.path.empty()) Fail(ErrorKind::kConfiguration, "[dataset] path is not set");
  const LabelSchema schema = ctx.cfg.Schema();
  const DatasetFormat format = ParseDatasetFormat(d.format);
  const std::string path = ResolveDataPath(d.path);
  RequireFile(path, "dataset file; set TOXENS_DATA_DIR or [dataset] path");
  ctx.manifest.AddInput(path);
  Corpus train = LoadDataset(path, schema, format);
  std::optional<Corpus> corpus;
  if (!d.test_path.empty()) {
    const std::string test_path = ResolveDataPath(d.test_path);
    RequireFile(test_path, "[dataset] test_path");
    ctx.manifest.AddInput(test_path);
    if (!d.test_labels_path.empty()) {
      const std::string labels = ResolveDataPath(d.test_labels_path);
      RequireFile(labels, "[dataset] test_labels_path");
      ctx.manifest.AddInput(labels);
      corpus = MergeTrainTest(train, LoadJigsawTestWithLabels(test_path, labels, schema));
    } else {
      corpus = MergeTrainTest(train, LoadDataset(test_path, schema, format));
    }
    ctx.manifest.AddNote("test_split", "provided test partition");
  } else {
    corpus = StratifiedHoldout(train, d.test_fraction, d.seed);
    ctx.manifest.AddNote("test_split", "stratified holdout fraction=" + std::to_string(d.test_fraction) +
                                           " seed=" + std::to_string(d.seed));
  }
  const FoldAssignment folds = SplitFolds(*corpus, d.folds, d.seed);

  const std::string records = ctx.P("corpus/records.ndjson");
  const std::string schema_path = ctx.P("corpus/schema.json");
  SaveCorpus(*corpus, records, schema_path);
  WriteStringToFile(ctx.P("corpus/folds.csv"), folds.ToCsv());
  WriteStringToFile(ctx.P("corpus/folds.json"),
                    nlohmann::json{{"k", folds.k}, {"seed", folds.seed}}.dump() + "\n");
  nlohmann::ordered_json dist;
  dist["samples"] = corpus->size();
  dist["train"] = corpus->TrainIndices().size();
  dist["test"] = corpus->TestIndices().size();
  for (const auto& [name, count] : ClassDistribution(*corpus)) dist["classes"][name] = count;
  WriteStringToFile(ctx.P("corpus/distribution.json"), dist.dump(2) + "\n");
  for (const auto* p : {"corpus/records.ndjson", "corpus/schema.json", "corpus/folds.csv",
                        "corpus/folds.json", "corpus/distribution.json"}) {
    ctx.Wrote(ctx.P(p));
  }
  ctx.out << "ingested " << corpus->size() << " comments (" << dist["train"] << " train, "
          << dist["test"] << " test), " << folds.k << " folds\n";
}

// embed-train

void EmbedTrain(Context& ctx) {
  ctx.RequireConfig();
  Data data = LoadData(ctx);
  SkipgramConfig k = ctx.cfg.embeddings.skipgram;
  if (ctx.flags.deterministic) k.threads = 1;
  std::vector<std::vector<std::string>> sentences;
  for (size_t i : data.corpus.TrainIndices()) {
    sentences.push_back(ctx.cfg.tokenizer.Tokenize(data.corpus[i].text));
  }
  const SkipgramResult result = TrainSkipgram(sentences, k);
  for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
    ctx.out << "epoch " << e + 1 << " loss " << result.epoch_loss[e] << "\n";
  }
  const std::string path = ctx.P(ctx.cfg.embeddings.output);
  result.table.Save(path);
  ctx.Wrote(path);
  if (ctx.cfg.embeddings.write_text) {
    SaveText(result.table, path + ".vec");
    ctx.Wrote(path + ".vec");
  }
  ctx.out << "wrote " << path << " (" << result.table.num_words() << " words)\n";
}

// fit / predict

void FitModels(Context& ctx, const std::vector<std::string>& names) {
  ctx.RequireConfig();
  Data data = LoadData(ctx);
  for (const auto& name : SelectedModels(ctx, names)) {
    const ClassifierSpec spec = Prepare(ctx, ctx.cfg.Model(name), ctx.threads());
    auto train = data.corpus.TrainIndices();
    CorpusView fit_view{&data.corpus, train};
    CorpusView val_view = fit_view;
    if (!IsLinear(spec.family) && train.size() >= 10) {
      CounterRng rng(spec.seed, 0xF17);
      Shuffle(train, rng);
      const size_t n_val = std::max<size_t>(1, train.size() / 10);
      val_view.indices.assign(train.begin(), train.begin() + static_cast<long>(n_val));
      fit_view.indices.assign(train.begin() + static_cast<long>(n_val), train.end());
      std::sort(fit_view.indices.begin(), fit_view.indices.end());
    }
    const TrainedModel model = Fit(spec, fit_view, val_view);
    for (const auto& e : model.log()) {
      ctx.out << name << " epoch " << e.epoch << " loss " << e.train_loss;
      if (!IsLinear(spec.family)) ctx.out << " validation auc " << e.validation_auc;
      ctx.out << "\n";
    }
    const std::string path = ctx.P("models/" + name + ".txmd");
    model.Save(path);
    ctx.Wrote(path);
    ctx.out << "wrote " << path << "\n";
  }
}

void PredictModels(Context& ctx, const std::vector<std::string>& names, const std::string& split) {
  ctx.RequireConfig();
  Data data = LoadData(ctx);
  CorpusView view = split == "train" ? CorpusView::Train(data.corpus)
                    : split == "all" ? CorpusView::All(data.corpus)
                                     : CorpusView::Test(data.corpus);
  for (const auto& name : SelectedModels(ctx, names)) {
    const std::string model_path = ctx.P("models/" + name + ".txmd");
    RequireFile(model_path, "run 'fit' first");
    ctx.manifest.AddInput(model_path);
    const ClassifierSpec spec = Prepare(ctx, ctx.cfg.Model(name), ctx.threads());
    const TrainedModel model = TrainedModel::Load(model_path, spec.Hash());
    PredictionMatrix m = model.Predict(view);
    m.producer = name;
    const std::string path = ctx.P("predictions/" + name + "." + split + ".csv");
    m.SaveCsv(path);
    ctx.Wrote(path);
    ctx.out << "wrote " << path << " (" << m.rows() << " rows)\n";
  }
}

// oof / stack

MetaFeatureOptions MetaOptions(Context& ctx) {
  MetaFeatureOptions meta;
  meta.enabled = ctx.cfg.ensemble.meta_features;
  meta.tokenizer = ctx.cfg.tokenizer;
  if (!ctx.cfg.ensemble.swear_lexicon.empty()) {
    const std::string path = ResolveDataPath(ctx.cfg.ensemble.swear_lexicon);
    RequireFile(path, "[ensemble] swear_lexicon");
    ctx.manifest.AddInput(path);
    meta.lexicon = SwearLexicon::Load(path);
  }
  return meta;
}

void Oof(Context& ctx) {
  ctx.RequireConfig();
  Data data = LoadData(ctx);
  std::vector<ClassifierSpec> specs;
  for (const auto& s : ctx.cfg.EnsembleModels()) specs.push_back(Prepare(ctx, s, 1));
  OofOptions options;
  options.threads = ctx.threads();
  options.meta = MetaOptions(ctx);
  options.progress = [&](const std::string& msg) { ctx.err << msg << "\n"; };
  const OofResult r = OofPredictions(specs, data.corpus, data.folds, options);

  const std::string train = ctx.P("oof/train.features.csv");
  r.train.Save(train);
  ctx.Wrote(train);
  ctx.Wrote(train + ".provenance.json");
  for (size_t f = 0; f < r.test.size(); ++f) {
    const std::string p = ctx.P("oof/test.fold" + std::to_string(f) + ".features.csv");
    r.test[f].Save(p);
    ctx.Wrote(p);
    ctx.Wrote(p + ".provenance.json");
  }
  for (size_t s = 0; s < specs.size(); ++s) {
    const std::string tr = ctx.P("oof/" + specs[s].name + ".train.csv");
    const std::string te = ctx.P("oof/" + specs[s].name + ".test.csv");
    r.oof[s].SaveCsv(tr);
    r.test_mean[s].SaveCsv(te);
    ctx.Wrote(tr);
    ctx.Wrote(te);
  }
  ctx.out << "out-of-fold predictions for " << specs.size() << " models over "
          << data.folds.k << " folds; provenance audit passed\n";
}

void Stack(Context& ctx) {
  ctx.RequireConfig();
  Data data = LoadData(ctx);
  const auto& schema = data.corpus.schema();
  const std::string train_path = ctx.P("oof/train.features.csv");
  RequireFile(train_path, "run 'oof' first");
  ctx.manifest.AddInput(train_path);
  const StackedFeatures train = StackedFeatures::Load(train_path);
  AuditLeakFreedom(train, data.folds);
  const int k = data.folds.k;
  std::vector<StackedFeatures> test;
  for (int f = 0; f < k; ++f) {
    const std::string p = ctx.P("oof/test.fold" + std::to_string(f) + ".features.csv");
    RequireFile(p, "run 'oof' first");
    ctx.manifest.AddInput(p);
    test.push_back(StackedFeatures::Load(p));
  }
  const auto stackers = TrainStackers(train, GoldFor(data.corpus, train.ids), schema.classes, k,
                                      ctx.cfg.ensemble.gbdt, ctx.threads());
  for (int f = 0; f < k; ++f) {
    const std::string p = ctx.P("ensemble/stacker.fold" + std::to_string(f) + ".txgb");
    stackers[static_cast<size_t>(f)].Save(p);
    ctx.Wrote(p);
  }
  PredictionMatrix test_scores = EnsemblePredict(stackers, test, schema.classes);
  test_scores.producer = "ensemble";

  // Train-split scores: each row is scored by the one stacker that never saw it.
  PredictionMatrix train_scores;
  train_scores.producer = "ensemble";
  train_scores.classes = schema.classes;
  train_scores.ids = train.ids;
  train_scores.scores.assign(train.rows() * schema.classes.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    StackedFeatures part;
    part.columns = train.columns;
    std::vector<size_t> rows;
    for (size_t r = 0; r < train.rows(); ++r) {
      if (train.provenance[r] != f) continue;
      rows.push_back(r);
      part.ids.push_back(train.ids[r]);
      part.provenance.push_back(f);
      part.values.insert(part.values.end(), train.values.begin() + static_cast<long>(r * train.cols()),
                         train.values.begin() + static_cast<long>((r + 1) * train.cols()));
    }
    if (rows.empty()) continue;
    const auto scored = StackerPredict(stackers[static_cast<size_t>(f)], part, schema.classes);
    for (size_t i = 0; i < rows.size(); ++i) {
      for (size_t c = 0; c < scored.cols(); ++c) train_scores.at(rows[i], c) = scored.at(i, c);
    }
  }
  const std::string tr = ctx.P("oof/ensemble.train.csv");
  const std::string te = ctx.P("oof/ensemble.test.csv");
  train_scores.SaveCsv(tr);
  test_scores.SaveCsv(te);
  ctx.Wrote(tr);
  ctx.Wrote(te);
  ctx.out << "trained " << k << " stackers over " << train.cols() << " features\n";
}

// thresholds / evaluate / correlate

std::vector<std::string> DefaultTargets(const Context& ctx) {
  std::vector<std::string> out;
  for (const auto& s : ctx.cfg.EnsembleModels()) out.push_back(s.name);
  if (fs::exists(ctx.P("oof/ensemble.test.csv"))) out.push_back("ensemble");
  return out;
}

void Thresholds(Context& ctx, std::vector<std::string> names) {
  Data data = LoadData(ctx);
  if (names.empty()) names = DefaultTargets(ctx);
  if (names.empty()) Fail(ErrorKind::kConfiguration, "no models to search thresholds for");
  for (const auto& name : names) {
    ThresholdVector t;
    if (ctx.cfg.metrics.thresholds == "fixed") {
      t = ThresholdVector::Constant(data.corpus.schema().classes, ctx.cfg.metrics.fixed_threshold);
    } else {
      const auto scores = LoadPredictions(ctx, PredictionPath(ctx, name, "train"));
      CheckClasses(scores, data.corpus.schema());
      t = SearchThresholds(scores, GoldFor(data.corpus, scores.ids));
    }
    const std::string path = ctx.P("thresholds/" + name + ".json");
    WriteStringToFile(path, t.ToJson());
    ctx.Wrote(path);
    ctx.out << name << ":";
    for (size_t c = 0; c < t.classes.size(); ++c) ctx.out << " " << t.classes[c] << "=" << t.values[c];
    ctx.out << "\n";
  }
}

void EvaluateCmd(Context& ctx, std::vector<std::string> names,
                 const std::vector<std::string>& prediction_files, const std::string& thresholds_file) {
  Data data = LoadData(ctx);
  const auto& schema = data.corpus.schema();
  struct Target {
    std::string name;
    std::string path;
  };
  std::vector<Target> targets;
  for (const auto& f : prediction_files) {
    std::string stem = fs::path(f).filename().string();
    targets.push_back({stem.substr(0, stem.find('.')), f});
  }
  if (targets.empty() && names.empty()) names = DefaultTargets(ctx);
  for (const auto& n : names) targets.push_back({n, PredictionPath(ctx, n, "test")});
  if (targets.empty()) Fail(ErrorKind::kConfiguration, "nothing to evaluate");
  if (!thresholds_file.empty() && targets.size() != 1) {
    Fail(ErrorKind::kArgument, "--thresholds applies to a single predictions file");
  }

  std::vector<MetricsReport> reports;
  reports.reserve(targets.size());
  for (const auto& t : targets) {
    const auto scores = LoadPredictions(ctx, t.path);
    CheckClasses(scores, schema);
    const BinaryMatrix gold = GoldFor(data.corpus, scores.ids);
    ThresholdVector thr;
    if (!thresholds_file.empty()) {
      RequireFile(thresholds_file, "--thresholds");
      thr = ThresholdVector::FromJson(ReadFileToString(thresholds_file));
      thr.Validate(schema);
    } else {
      thr = ThresholdsFor(ctx, t.name, data.corpus);
    }
    MetricsReport report = Evaluate(scores, gold, schema.kind, &thr);
    report.model = t.name;
    for (const auto& [ext, body] : {std::pair{".metrics.csv", report.ToCsv()},
                                    std::pair{".metrics.json", report.ToJson()}}) {
      const std::string path = ctx.P("reports/" + t.name + ext);
      WriteStringToFile(path, body);
      ctx.Wrote(path);
    }
    reports.push_back(std::move(report));
  }
  std::vector<Table3Row> rows;
  for (const auto& r : reports) rows.push_back({r.model, &r, nullptr});
  const std::string table = FormatTable3(schema.name, "", rows);
  const std::string path = ctx.P("reports/table3.txt");
  WriteStringToFile(path, table);
  ctx.Wrote(path);
  ctx.out << table;
}

void CorrelateCmd(Context& ctx, const std::vector<std::string>& pair_args) {
  Data data = LoadData(ctx);
  const auto& schema = data.corpus.schema();
  std::vector<std::pair<std::string, std::string>> pairs = ctx.cfg.metrics.pairs;
  if (!pair_args.empty()) {
    pairs.clear();
    for (const auto& p : pair_args) {
      const size_t colon = p.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == p.size()) {
        Fail(ErrorKind::kArgument, "--pair expects model_a:model_b, got '" + p + "'");
      }
      pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
    }
  }
  if (pairs.empty()) Fail(ErrorKind::kConfiguration, "no classifier pairs ([metrics] pairs or --pair)");
  const std::string focus = ctx.cfg.metrics.focus_class.empty() ? schema.classes[0]
                                                                : ctx.cfg.metrics.focus_class;
  schema.ClassIndex(focus);
  std::vector<CorrelationReport> reports;
  reports.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const auto sa = LoadPredictions(ctx, PredictionPath(ctx, a, "test"));
    const auto sb = LoadPredictions(ctx, PredictionPath(ctx, b, "test"));
    CheckClasses(sa, schema);
    CheckClasses(sb, schema);
    const auto ta = ThresholdsFor(ctx, a, data.corpus);
    const auto tb = ThresholdsFor(ctx, b, data.corpus);
    CorrelationReport r = Correlate(sa, sb, GoldFor(data.corpus, sa.ids), schema.kind, &ta, &tb);
    r.model_a = a;
    r.model_b = b;
    for (const auto& [ext, body] : {std::pair{".csv", r.ToCsv()}, std::pair{".json", r.ToJson()}}) {
      const std::string path = ctx.P("reports/correlation." + a + "__" + b + ext);
      WriteStringToFile(path, body);
      ctx.Wrote(path);
    }
    reports.push_back(std::move(r));
  }
  std::vector<Table4Block> blocks;
  for (const auto& r : reports) blocks.push_back({schema.name, focus, &r});
  const std::string table = FormatTable4(blocks);
  const std::string path = ctx.P("reports/table4.txt");
  WriteStringToFile(path, table);
  ctx.Wrote(path);
  ctx.out << table;
}

// triage

std::string SessionPath(const Context& ctx, const std::string& given) {
  return given.empty() ? ctx.P("triage/session.json") : given;
}

void TriageSample(Context& ctx, const std::string& session_arg) {
  Data data = LoadData(ctx);
  const auto& t = ctx.cfg.triage;
  const auto& schema = data.corpus.schema();
  const auto scores = LoadPredictions(ctx, PredictionPath(ctx, t.model, "test"));
  CheckClasses(scores, schema);
  const BinaryMatrix gold = GoldFor(data.corpus, scores.ids);
  BinaryMatrix predicted;
  if (schema.multi_label()) {
    predicted = Binarize(scores, ThresholdsFor(ctx, t.model, data.corpus));
  } else {
    predicted = BinarizeArgmax(scores);
  }
  const TriageSession session = SampleErrors(scores, predicted, gold, data.corpus, t.focal_class, t.kind,
                                             t.sample_size, t.seed);
  const std::string path = SessionPath(ctx, session_arg);
  session.Save(path);
  ctx.Wrote(path);
  ctx.out << "sampled " << session.items.size() << " of " << session.population << " "
          << TriageKindName(t.kind) << " errors for '" << t.focal_class << "' into " << path << "\n";
}

std::atomic<TriageServer*> g_server{nullptr};

void StopServer(int) {
  if (TriageServer* s = g_server.load()) s->Stop();
}

void TriageServe(Context& ctx, const std::string& session_arg, std::optional<int> port,
                 const std::string& host_arg) {
  const std::string path = SessionPath(ctx, session_arg);
  RequireFile(path, "run 'triage sample' first");
  ctx.manifest.AddInput(path);
  TriageApi api(TriageSession::Load(path), path, ctx.cfg.triage.token);
  TriageServer server(&api);
  if (!ctx.cfg.triage.ui_dir.empty()) server.MountStatic(ctx.cfg.triage.ui_dir);
  const std::string host = host_arg.empty() ? ctx.cfg.triage.host : host_arg;
  const int bound = server.Bind(host, port.value_or(ctx.cfg.triage.port));
  ctx.manifest.AddNote("listen", host + ":" + std::to_string(bound));
  // Annotations are persisted on every write.
  ctx.Wrote(path);
  ctx.manifest.Finish();
  ctx.finished = true;
  ctx.out << "serving " << path << " on http://" << host << ":" << bound << "\n" << std::flush;
  g_server = &server;
  std::signal(SIGINT, StopServer);
  std::signal(SIGTERM, StopServer);
  server.Serve();
  g_server = nullptr;
}

void TriageReport(Context& ctx, const std::string& session_arg) {
  const std::string path = SessionPath(ctx, session_arg);
  RequireFile(path, "run 'triage sample' first");
  ctx.manifest.AddInput(path);
  const FrequencyReport report = ComputeFrequencyReport(TriageSession::Load(path));
  const std::string dir = session_arg.empty() ? ctx.P("triage")
                                              : fs::path(path).parent_path().string();
  const std::string stem = fs::path(path).stem().string();
  const std::string txt = (fs::path(dir) / (stem + ".report.txt")).string();
  const std::string js = (fs::path(dir) / (stem + ".report.json")).string();
  WriteStringToFile(txt, report.ToText());
  WriteStringToFile(js, report.ToJson());
  ctx.Wrote(txt);
  ctx.Wrote(js);
  ctx.out << report.ToText();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"toxens: stacked toxic comment classification", "toxens"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  uint64_t seed = 0;
  app.add_option("--config", flags.config, "pipeline configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "override every seed in the configuration");
  app.add_option("--jobs", flags.jobs, "worker threads for (model, fold) fits")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", flags.deterministic, "single-threaded training paths");
  app.add_option("--out-dir", flags.out_dir, "artifact directory");

  std::vector<std::string> models, prediction_files, pairs;
  std::string split = "test", thresholds_file, session, host;
  std::optional<int> port;

  auto* ingest = app.add_subcommand("ingest", "load the dataset, fix the test split and folds");
  auto* embed = app.add_subcommand("embed-train", "train subword skip-gram embeddings");
  auto* fit = app.add_subcommand("fit", "train models on the whole train split");
  fit->add_option("--model", models, "model name (repeatable; default all)");
  auto* predict = app.add_subcommand("predict", "score a split with fitted models");
  predict->add_option("--model", models, "model name (repeatable; default all)");
  predict->add_option("--split", split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  auto* oof = app.add_subcommand("oof", "out-of-fold predictions and stacking features");
  auto* stack = app.add_subcommand("stack", "train the boosted-tree stackers");
  auto* thresholds = app.add_subcommand("thresholds", "per-class decision thresholds");
  thresholds->add_option("--model", models, "model name (repeatable)");
  auto* evaluate = app.add_subcommand("evaluate", "metrics reports on the test split");
  evaluate->add_option("--model", models, "model name (repeatable)");
  evaluate->add_option("--predictions", prediction_files, "predictions CSV (repeatable)");
  evaluate->add_option("--thresholds", thresholds_file, "threshold JSON for a single file");
  auto* correlate = app.add_subcommand("correlate", "prediction correlation between classifier pairs");
  correlate->add_option("--pair", pairs, "model_a:model_b (repeatable)");
  auto* triage = app.add_subcommand("triage", "error analysis sessions");
  triage->require_subcommand(1);
  auto* sample = triage->add_subcommand("sample", "sample misclassified comments");
  auto* serve = triage->add_subcommand("serve", "serve the annotation API");
  auto* report = triage->add_subcommand("report", "tag frequency report");
  for (auto* sub : {sample, serve, report}) sub->add_option("--session", session, "session file");
  serve->add_option("--port", port, "listen port (0 picks a free one)");
  serve->add_option("--host", host, "listen address");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (seed_opt->count() > 0) flags.seed = seed;

  std::string command;
  for (auto* sub : app.get_subcommands()) {
    command = sub->get_name();
    for (auto* inner : sub->get_subcommands()) command += " " + inner->get_name();
  }
  Context ctx(flags, command, args, out, err);
  try {
    if (!flags.config.empty()) {
      ctx.cfg = LoadConfig(flags.config);
      ctx.has_config = true;
      ctx.manifest.SetConfig(flags.config, ctx.cfg.hash);
    }
    if (flags.seed) ctx.cfg.ApplySeed(*flags.seed);
    RecordSettings(ctx);
    if (ingest->parsed()) Ingest(ctx);
    else if (embed->parsed()) EmbedTrain(ctx);
    else if (fit->parsed()) FitModels(ctx, models);
    else if (predict->parsed()) PredictModels(ctx, models, split);
    else if (oof->parsed()) Oof(ctx);
    else if (stack->parsed()) Stack(ctx);
    else if (thresholds->parsed()) Thresholds(ctx, models);
    else if (evaluate->parsed()) EvaluateCmd(ctx, models, prediction_files, thresholds_file);
    else if (correlate->parsed()) CorrelateCmd(ctx, pairs);
    else if (sample->parsed()) TriageSample(ctx, session);
    else if (serve->parsed()) TriageServe(ctx, session, port, host);
    else if (report->parsed()) TriageReport(ctx, session);
    if (!ctx.finished) ctx.manifest.Finish();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace toxens
