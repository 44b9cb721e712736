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

#include "toxens/ensemble.h"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <unordered_map>

#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/common.h"
#include "toxens/csv.h"

namespace toxens {

using nlohmann::json;

SwearLexicon::SwearLexicon(const std::vector<std::string>& words) {
  Tokenizer t;
  for (const auto& w : words) words_.insert(t.Normalize(w));
}

SwearLexicon SwearLexicon::Parse(std::string_view content) {
  std::vector<std::string> words;
  size_t start = 0;
  while (start <= content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string line(content.substr(start, end - start));
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    if (b < line.size()) words.push_back(line.substr(b));
    start = end + 1;
  }
  return SwearLexicon(words);
}

SwearLexicon SwearLexicon::Load(const std::string& path) { return Parse(ReadFileToString(path)); }

size_t SwearLexicon::Count(const std::vector<std::string>& tokens) const {
  size_t n = 0;
  for (const auto& t : tokens) n += words_.count(t);
  return n;
}

// ---------------------------------------------------------------------------

std::string StackedFeatures::ToCsv() const {
  std::vector<std::string> header{"id"};
  header.insert(header.end(), columns.begin(), columns.end());
  std::string out = CsvJoin(header) + "\n";
  char buf[40];
  for (size_t r = 0; r < rows(); ++r) {
    out += CsvEscape(ids[r]);
    for (size_t c = 0; c < cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", at(r, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string StackedFeatures::ProvenanceJson() const {
  json j;
  j["columns"] = columns;
  j["ids"] = ids;
  j["held_out_fold"] = provenance;
  return j.dump();
}

void StackedFeatures::Save(const std::string& csv_path) const {
  WriteStringToFile(csv_path, ToCsv());
  WriteStringToFile(csv_path + ".provenance.json", ProvenanceJson());
}

StackedFeatures StackedFeatures::Load(const std::string& csv_path) {
  StackedFeatures f;
  const auto records = ParseCsv(ReadFileToString(csv_path));
  if (records.empty() || records[0].fields.empty() || records[0].fields[0] != "id") {
    Fail(ErrorKind::kParse, csv_path + ": stacked features must start with an 'id' column");
  }
  f.columns.assign(records[0].fields.begin() + 1, records[0].fields.end());
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r].fields;
    if (row.size() != f.columns.size() + 1) {
      Fail(ErrorKind::kParse, csv_path + ": line " + std::to_string(records[r].line) +
                                  " has the wrong number of fields");
    }
    f.ids.push_back(row[0]);
    for (size_t c = 1; c < row.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(row[c].c_str(), &end);
      if (end == row[c].c_str() || *end != '\0') {
        Fail(ErrorKind::kParse, csv_path + ": bad value '" + row[c] + "' on line " +
                                    std::to_string(records[r].line));
      }
      f.values.push_back(v);
    }
  }
  try {
    const json j = json::parse(ReadFileToString(csv_path + ".provenance.json"));
    if (j.at("columns").get<std::vector<std::string>>() != f.columns ||
        j.at("ids").get<std::vector<std::string>>() != f.ids) {
      Fail(ErrorKind::kValidation, csv_path + ": provenance sidecar does not match the features");
    }
    f.provenance = j.at("held_out_fold").get<std::vector<int>>();
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, csv_path + ".provenance.json: " + e.what());
  }
  if (f.provenance.size() != f.ids.size()) {
    Fail(ErrorKind::kValidation, csv_path + ": provenance has the wrong length");
  }
  return f;
}

StackedFeatures AssembleFeatures(const std::vector<PredictionMatrix>& base, const Corpus& corpus,
                                 const MetaFeatureOptions& meta,
                                 const std::vector<int>& provenance) {
  StackedFeatures f;
  if (base.empty()) Fail(ErrorKind::kConfiguration, "stacking needs at least one base model");
  f.ids = base[0].ids;
  for (const auto& p : base) {
    if (p.ids != f.ids) Fail(ErrorKind::kInternal, "base predictions are not aligned");
    for (const auto& c : p.classes) f.columns.push_back(p.producer + ":" + c);
  }
  if (meta.enabled) {
    f.columns.push_back(kMetaLengthColumn);
    f.columns.push_back(kMetaSwearColumn);
  }
  f.values.reserve(f.ids.size() * f.columns.size());
  for (size_t r = 0; r < f.ids.size(); ++r) {
    for (const auto& p : base) {
      for (size_t c = 0; c < p.cols(); ++c) f.values.push_back(p.at(r, c));
    }
    if (meta.enabled) {
      const auto idx = corpus.IndexOf(f.ids[r]);
      if (!idx) Fail(ErrorKind::kInternal, "stacked id '" + f.ids[r] + "' not in corpus");
      const auto tokens = meta.tokenizer.Tokenize(corpus[*idx].text);
      f.values.push_back(static_cast<double>(tokens.size()));
      f.values.push_back(static_cast<double>(meta.lexicon.Count(tokens)));
    }
  }
  f.provenance = provenance;
  if (f.provenance.size() != f.ids.size()) Fail(ErrorKind::kInternal, "provenance length mismatch");
  return f;
}

void AuditLeakFreedom(const StackedFeatures& train, const FoldAssignment& folds) {
  size_t violations = 0;
  std::string first;
  for (size_t r = 0; r < train.rows(); ++r) {
    if (train.provenance[r] != folds.FoldOf(train.ids[r])) {
      if (violations++ == 0) first = train.ids[r];
    }
  }
  if (violations > 0) {
    Fail(ErrorKind::kInternal, "leak audit failed: " + std::to_string(violations) +
                                   " rows scored by a model that saw them (first: '" + first +
                                   "')");
  }
}

namespace {

// Rows of a prediction matrix, keyed by id, reordered to `ids`.
PredictionMatrix Reorder(const std::vector<PredictionMatrix>& parts,
                         const std::vector<std::string>& ids, const std::string& producer) {
  PredictionMatrix out;
  out.producer = producer;
  out.classes = parts.at(0).classes;
  std::unordered_map<std::string, std::pair<size_t, size_t>> where;
  for (size_t p = 0; p < parts.size(); ++p) {
    for (size_t r = 0; r < parts[p].rows(); ++r) where[parts[p].ids[r]] = {p, r};
  }
  for (const auto& id : ids) {
    const auto it = where.find(id);
    if (it == where.end()) Fail(ErrorKind::kInternal, "no out-of-fold score for '" + id + "'");
    out.ids.push_back(id);
    const auto& m = parts[it->second.first];
    for (size_t c = 0; c < m.cols(); ++c) out.scores.push_back(m.at(it->second.second, c));
  }
  return out;
}

}  // namespace

OofResult OofPredictions(const std::vector<ClassifierSpec>& specs, const Corpus& corpus,
                         const FoldAssignment& folds, const OofOptions& options) {
  if (specs.empty()) Fail(ErrorKind::kConfiguration, "no base classifiers configured");
  const int k = folds.k;
  const auto train_idx = corpus.TrainIndices();
  if (folds.ids.size() != train_idx.size()) {
    Fail(ErrorKind::kValidation, "fold assignment does not cover the train split");
  }
  const CorpusView test{&corpus, corpus.TestIndices()};
  struct Job {
    size_t spec;
    int fold;
    PredictionMatrix held_out;
    PredictionMatrix test;
    std::unordered_set<std::string> trained_on;
  };
  std::vector<Job> jobs;
  for (size_t s = 0; s < specs.size(); ++s) {
    for (int f = 0; f < k; ++f) jobs.push_back({s, f, {}, {}, {}});
  }
  std::vector<std::vector<size_t>> members(static_cast<size_t>(k)), complement(static_cast<size_t>(k));
  for (int f = 0; f < k; ++f) {
    members[static_cast<size_t>(f)] = folds.Members(corpus, f);
    complement[static_cast<size_t>(f)] = folds.Complement(corpus, f);
  }
  std::mutex progress_mu;
  ParallelFor(jobs.size(), options.threads, [&](size_t j) {
    Job& job = jobs[j];
    ClassifierSpec spec = specs[job.spec];
    spec.threads = 1;
    const auto fu = static_cast<size_t>(job.fold);
    CorpusView fit_view{&corpus, complement[fu]};
    CorpusView val_view = fit_view;
    if (!IsLinear(spec.family) && fit_view.size() >= 10) {
      auto shuffled = complement[fu];
      CounterRng rng(spec.seed, 0xE5 + fu);
      Shuffle(shuffled, rng);
      const size_t n_val = std::max<size_t>(1, shuffled.size() / 10);
      val_view.indices.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(n_val));
      fit_view.indices.assign(shuffled.begin() + static_cast<long>(n_val), shuffled.end());
      std::sort(fit_view.indices.begin(), fit_view.indices.end());
    }
    try {
      const TrainedModel model = Fit(spec, fit_view, val_view);
      for (size_t i : fit_view.indices) job.trained_on.insert(corpus[i].id);
      for (size_t i : val_view.indices) job.trained_on.insert(corpus[i].id);
      job.held_out = model.Predict(CorpusView{&corpus, members[fu]});
      job.test = model.Predict(test);
    } catch (const Error& e) {
      Fail(e.kind(), "base fit (" + spec.name + ", fold " + std::to_string(job.fold) +
                         ") failed: " + e.what());
    }
    if (options.progress) {
      std::lock_guard<std::mutex> lock(progress_mu);
      options.progress(spec.name + " fold " + std::to_string(job.fold) + " done");
    }
  });

  // Hard audit against the actual training sets.
  for (const auto& job : jobs) {
    for (const auto& id : job.held_out.ids) {
      if (job.trained_on.count(id)) {
        Fail(ErrorKind::kInternal, "leak audit failed: '" + id + "' scored by " +
                                       specs[job.spec].name + " fold " +
                                       std::to_string(job.fold) + " which trained on it");
      }
    }
  }

  OofResult out;
  std::vector<std::string> train_ids;
  for (size_t i : train_idx) train_ids.push_back(corpus[i].id);
  std::vector<int> provenance;
  for (const auto& id : train_ids) provenance.push_back(folds.FoldOf(id));
  for (size_t s = 0; s < specs.size(); ++s) {
    std::vector<PredictionMatrix> parts;
    PredictionMatrix mean;
    for (const auto& job : jobs) {
      if (job.spec != s) continue;
      parts.push_back(job.held_out);
      if (mean.ids.empty() && mean.scores.empty()) {
        mean = job.test;
      } else {
        for (size_t i = 0; i < mean.scores.size(); ++i) mean.scores[i] += job.test.scores[i];
      }
    }
    for (auto& v : mean.scores) v /= static_cast<double>(k);
    mean.producer = specs[s].name;
    out.oof.push_back(Reorder(parts, train_ids, specs[s].name));
    out.test_mean.push_back(std::move(mean));
  }
  out.train = AssembleFeatures(out.oof, corpus, options.meta, provenance);
  AuditLeakFreedom(out.train, folds);
  for (int f = 0; f < k; ++f) {
    std::vector<PredictionMatrix> base;
    for (size_t s = 0; s < specs.size(); ++s) {
      auto m = jobs[s * static_cast<size_t>(k) + static_cast<size_t>(f)].test;
      m.producer = specs[s].name;
      base.push_back(std::move(m));
    }
    out.test.push_back(test.empty() ? StackedFeatures{{}, out.train.columns, {}, {}}
                                    : AssembleFeatures(base, corpus, options.meta,
                                                       std::vector<int>(test.size(), f)));
  }
  return out;
}

std::vector<GbdtModel> TrainStackers(const StackedFeatures& train, const BinaryMatrix& gold,
                                     const std::vector<std::string>& classes, int k,
                                     const GbdtConfig& config, int threads) {
  if (gold.size() != train.rows()) Fail(ErrorKind::kInternal, "stacker gold row mismatch");
  std::vector<GbdtModel> out(static_cast<size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<double> x;
    BinaryMatrix y;
    for (size_t r = 0; r < train.rows(); ++r) {
      if (train.provenance[r] == f) continue;
      x.insert(x.end(), train.values.begin() + static_cast<long>(r * train.cols()),
               train.values.begin() + static_cast<long>((r + 1) * train.cols()));
      y.push_back(gold[r]);
    }
    if (y.empty()) Fail(ErrorKind::kConfiguration, "stacker " + std::to_string(f) + " has no rows");
    out[static_cast<size_t>(f)] = GbdtFit(x, train.columns, y, classes, config, threads);
  }
  return out;
}

PredictionMatrix StackerPredict(const GbdtModel& stacker, const StackedFeatures& features,
                                const std::vector<std::string>& classes) {
  if (stacker.feature_names != features.columns) {
    Fail(ErrorKind::kValidation, "stacker columns differ from the feature columns");
  }
  PredictionMatrix m;
  m.ids = features.ids;
  m.classes = classes;
  m.producer = "ensemble";
  for (size_t r = 0; r < features.rows(); ++r) {
    const auto p = stacker.Predict(features.values.data() + r * features.cols());
    m.scores.insert(m.scores.end(), p.begin(), p.end());
  }
  return m;
}

PredictionMatrix EnsemblePredict(const std::vector<GbdtModel>& stackers,
                                 const std::vector<StackedFeatures>& test,
                                 const std::vector<std::string>& classes) {
  if (stackers.empty() || stackers.size() != test.size()) {
    Fail(ErrorKind::kConfiguration, "need one test feature block per stacker");
  }
  PredictionMatrix out = StackerPredict(stackers[0], test[0], classes);
  for (size_t f = 1; f < stackers.size(); ++f) {
    if (test[f].ids != out.ids) Fail(ErrorKind::kInternal, "test feature blocks are not aligned");
    const auto p = StackerPredict(stackers[f], test[f], classes);
    for (size_t i = 0; i < out.scores.size(); ++i) out.scores[i] += p.scores[i];
  }
  for (auto& v : out.scores) v /= static_cast<double>(stackers.size());
  return out;
}

StackedFeatures WithoutMeta(const StackedFeatures& features) {
  std::vector<size_t> keep;
  for (size_t c = 0; c < features.cols(); ++c) {
    if (features.columns[c].rfind("meta:", 0) != 0) keep.push_back(c);
  }
  StackedFeatures out;
  out.ids = features.ids;
  out.provenance = features.provenance;
  for (size_t c : keep) out.columns.push_back(features.columns[c]);
  for (size_t r = 0; r < features.rows(); ++r) {
    for (size_t c : keep) out.values.push_back(features.at(r, c));
  }
  return out;
}

}  // namespace toxens
