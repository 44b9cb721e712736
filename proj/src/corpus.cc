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

#include "toxens/corpus.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/common.h"
#include "toxens/csv.h"

namespace toxens {

using json = nlohmann::json;

const char* SchemaKindName(SchemaKind kind) {
  return kind == SchemaKind::kMultiLabel ? "multi_label" : "multi_class";
}

SchemaKind ParseSchemaKind(const std::string& name) {
  if (name == "multi_label") return SchemaKind::kMultiLabel;
  if (name == "multi_class") return SchemaKind::kMultiClass;
  Fail(ErrorKind::kValidation, "unknown schema kind '" + name + "'");
}

void LabelSchema::Validate() const {
  if (classes.empty()) Fail(ErrorKind::kValidation, "schema has no classes");
  std::set<std::string> seen;
  for (const auto& c : classes) {
    if (c.empty()) Fail(ErrorKind::kValidation, "empty class name in schema");
    if (!seen.insert(c).second) {
      Fail(ErrorKind::kValidation, "duplicate class '" + c + "' in schema");
    }
  }
}

size_t LabelSchema::ClassIndex(const std::string& class_name) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == class_name) return i;
  }
  Fail(ErrorKind::kValidation,
       "class '" + class_name + "' not in schema '" + name + "'");
}

LabelSchema LabelSchema::Wikipedia() {
  return {"wikipedia",
          SchemaKind::kMultiLabel,
          {"toxic", "severe_toxic", "obscene", "threat", "insult",
           "identity_hate"}};
}

LabelSchema LabelSchema::Twitter() {
  return {"twitter", SchemaKind::kMultiClass, {"hate", "offensive", "clean"}};
}

Corpus::Corpus(LabelSchema schema, std::vector<Comment> samples,
               std::optional<std::vector<Split>> split)
    : schema_(std::move(schema)),
      samples_(std::move(samples)),
      split_(std::move(split)) {
  schema_.Validate();
  if (split_ && split_->size() != samples_.size()) {
    Fail(ErrorKind::kValidation, "split size does not match sample count");
  }
  index_.reserve(samples_.size());
  for (size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.labels.size() != schema_.num_classes()) {
      Fail(ErrorKind::kValidation, "sample '" + s.id + "' has " +
                                       std::to_string(s.labels.size()) +
                                       " labels, schema has " +
                                       std::to_string(schema_.num_classes()));
    }
    size_t ones = 0;
    for (uint8_t b : s.labels) {
      if (b > 1) Fail(ErrorKind::kValidation, "non-binary label on '" + s.id + "'");
      ones += b;
    }
    if (schema_.kind == SchemaKind::kMultiClass && ones != 1) {
      Fail(ErrorKind::kValidation,
           "multi-class sample '" + s.id + "' carries " + std::to_string(ones) +
               " classes");
    }
    if (!index_.emplace(s.id, i).second) {
      Fail(ErrorKind::kValidation, "duplicate sample id '" + s.id + "'");
    }
  }
}

std::vector<size_t> Corpus::TrainIndices() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < samples_.size(); ++i) {
    if (!split_ || (*split_)[i] == Split::kTrain) out.push_back(i);
  }
  return out;
}

std::vector<size_t> Corpus::TestIndices() const {
  std::vector<size_t> out;
  if (!split_) return out;
  for (size_t i = 0; i < samples_.size(); ++i) {
    if ((*split_)[i] == Split::kTest) out.push_back(i);
  }
  return out;
}

std::optional<size_t> Corpus::IndexOf(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Corpus Corpus::WithSplit(std::vector<Split> split) const {
  return Corpus(schema_, samples_, std::move(split));
}

CorpusView CorpusView::All(const Corpus& corpus) {
  CorpusView v{&corpus, {}};
  v.indices.resize(corpus.size());
  std::iota(v.indices.begin(), v.indices.end(), size_t{0});
  return v;
}

CorpusView CorpusView::Train(const Corpus& corpus) {
  return {&corpus, corpus.TrainIndices()};
}

CorpusView CorpusView::Test(const Corpus& corpus) {
  return {&corpus, corpus.TestIndices()};
}

DatasetFormat ParseDatasetFormat(const std::string& name) {
  if (name == "jigsaw_csv") return DatasetFormat::kJigsawCsv;
  if (name == "davidson_csv") return DatasetFormat::kDavidsonCsv;
  Fail(ErrorKind::kValidation, "unknown dataset format '" + name + "'");
}

namespace {

[[noreturn]] void RowError(size_t row, size_t line, const std::string& what) {
  Fail(ErrorKind::kIngestion, "row " + std::to_string(row) + " (line " +
                                  std::to_string(line) + "): " + what);
}

int ParseSmallInt(const std::string& field, bool* ok) {
  std::string s = field;
  // Tolerate surrounding whitespace and a trailing ".0" from spreadsheet
  // exports.
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s.size() > 2 && s.substr(s.size() - 2) == ".0") s.resize(s.size() - 2);
  if (s == "0") return *ok = true, 0;
  if (s == "1") return *ok = true, 1;
  if (s == "2") return *ok = true, 2;
  if (s == "-1") return *ok = true, -1;
  *ok = false;
  return 0;
}

std::map<std::string, size_t> HeaderIndex(const CsvRecord& header) {
  std::map<std::string, size_t> out;
  for (size_t i = 0; i < header.fields.size(); ++i) {
    out.emplace(header.fields[i], i);
  }
  return out;
}

size_t RequireColumn(const std::map<std::string, size_t>& header,
                     const std::string& name) {
  auto it = header.find(name);
  if (it == header.end()) {
    Fail(ErrorKind::kIngestion, "header lacks required column '" + name + "'");
  }
  return it->second;
}

// Parses the labels of one jigsaw row. Returns nullopt for an all -1 sentinel.
std::optional<std::vector<uint8_t>> JigsawLabels(
    const CsvRecord& rec, const std::vector<size_t>& cols, size_t row) {
  std::vector<uint8_t> labels(cols.size());
  size_t sentinels = 0;
  for (size_t c = 0; c < cols.size(); ++c) {
    bool ok;
    const int v = ParseSmallInt(rec.fields[cols[c]], &ok);
    if (!ok || v < -1 || v > 1) {
      RowError(row, rec.line,
               "label '" + rec.fields[cols[c]] + "' outside {-1,0,1}");
    }
    if (v == -1) {
      ++sentinels;
    } else {
      labels[c] = static_cast<uint8_t>(v);
    }
  }
  if (sentinels == cols.size()) return std::nullopt;
  if (sentinels != 0) RowError(row, rec.line, "partial -1 sentinel labels");
  return labels;
}

Corpus ParseJigsaw(std::string_view content, const LabelSchema& schema) {
  if (schema.kind != SchemaKind::kMultiLabel) {
    Fail(ErrorKind::kValidation, "jigsaw_csv requires a multi_label schema");
  }
  const auto records = ParseCsv(content);
  std::vector<Comment> samples;
  if (records.empty()) return Corpus(schema, {});
  const auto header = HeaderIndex(records[0]);
  const size_t id_col = RequireColumn(header, "id");
  const size_t text_col = RequireColumn(header, "comment_text");
  std::vector<size_t> label_cols;
  for (const auto& c : schema.classes) label_cols.push_back(RequireColumn(header, c));
  const size_t width = records[0].fields.size();

  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != width) {
      RowError(r, rec.line, "expected " + std::to_string(width) +
                                " columns, found " +
                                std::to_string(rec.fields.size()));
    }
    if (!IsValidUtf8(rec.fields[text_col]) || !IsValidUtf8(rec.fields[id_col])) {
      RowError(r, rec.line, "text is not valid UTF-8");
    }
    auto labels = JigsawLabels(rec, label_cols, r);
    if (!labels) continue;
    samples.push_back({rec.fields[id_col], rec.fields[text_col], std::move(*labels)});
  }
  return Corpus(schema, std::move(samples));
}

Corpus ParseDavidson(std::string_view content, const LabelSchema& schema) {
  if (schema.kind != SchemaKind::kMultiClass || schema.num_classes() != 3) {
    Fail(ErrorKind::kValidation,
         "davidson_csv requires a three-class multi_class schema");
  }
  const auto records = ParseCsv(content);
  if (records.empty()) return Corpus(schema, {});
  const auto header = HeaderIndex(records[0]);
  const size_t text_col = RequireColumn(header, "tweet");
  const size_t class_col = RequireColumn(header, "class");
  // The published file carries an unnamed leading index column.
  std::optional<size_t> id_col;
  if (auto it = header.find("id"); it != header.end()) {
    id_col = it->second;
  } else if (!records[0].fields.empty() && records[0].fields[0].empty()) {
    id_col = 0;
  }
  const size_t width = records[0].fields.size();

  std::vector<Comment> samples;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != width) {
      RowError(r, rec.line, "expected " + std::to_string(width) +
                                " columns, found " +
                                std::to_string(rec.fields.size()));
    }
    if (!IsValidUtf8(rec.fields[text_col])) {
      RowError(r, rec.line, "text is not valid UTF-8");
    }
    bool ok;
    const int cls = ParseSmallInt(rec.fields[class_col], &ok);
    if (!ok || cls < 0 || cls > 2) {
      RowError(r, rec.line, "class '" + rec.fields[class_col] + "' outside {0,1,2}");
    }
    std::vector<uint8_t> labels(3, 0);
    labels[static_cast<size_t>(cls)] = 1;
    std::string id = id_col ? rec.fields[*id_col] : std::to_string(r - 1);
    samples.push_back({std::move(id), rec.fields[text_col], std::move(labels)});
  }
  return Corpus(schema, std::move(samples));
}

}  // namespace

Corpus ParseDataset(std::string_view content, const LabelSchema& schema,
                    DatasetFormat format) {
  schema.Validate();
  return format == DatasetFormat::kJigsawCsv ? ParseJigsaw(content, schema)
                                             : ParseDavidson(content, schema);
}

Corpus LoadDataset(const std::string& path, const LabelSchema& schema,
                   DatasetFormat format) {
  return ParseDataset(ReadFileToString(path), schema, format);
}

Corpus LoadJigsawTestWithLabels(const std::string& test_path,
                                const std::string& labels_path,
                                const LabelSchema& schema) {
  const auto text_records = ParseCsv(ReadFileToString(test_path));
  const auto label_records = ParseCsv(ReadFileToString(labels_path));
  if (text_records.empty() || label_records.empty()) return Corpus(schema, {});

  const auto th = HeaderIndex(text_records[0]);
  const size_t tid = RequireColumn(th, "id");
  const size_t ttext = RequireColumn(th, "comment_text");
  std::unordered_map<std::string, size_t> text_of;
  for (size_t r = 1; r < text_records.size(); ++r) {
    const auto& rec = text_records[r];
    if (rec.fields.size() != text_records[0].fields.size()) {
      RowError(r, rec.line, "wrong column count in test text file");
    }
    text_of.emplace(rec.fields[tid], r);
  }

  const auto lh = HeaderIndex(label_records[0]);
  const size_t lid = RequireColumn(lh, "id");
  std::vector<size_t> label_cols;
  for (const auto& c : schema.classes) label_cols.push_back(RequireColumn(lh, c));

  std::vector<Comment> samples;
  for (size_t r = 1; r < label_records.size(); ++r) {
    const auto& rec = label_records[r];
    if (rec.fields.size() != label_records[0].fields.size()) {
      RowError(r, rec.line, "wrong column count in test label file");
    }
    auto labels = JigsawLabels(rec, label_cols, r);
    if (!labels) continue;
    auto it = text_of.find(rec.fields[lid]);
    if (it == text_of.end()) {
      RowError(r, rec.line, "id '" + rec.fields[lid] + "' has no text row");
    }
    const auto& text = text_records[it->second].fields[ttext];
    if (!IsValidUtf8(text)) RowError(r, rec.line, "text is not valid UTF-8");
    samples.push_back({rec.fields[lid], text, std::move(*labels)});
  }
  return Corpus(schema, std::move(samples));
}

Corpus MergeTrainTest(const Corpus& train, const Corpus& test) {
  if (!(train.schema() == test.schema())) {
    Fail(ErrorKind::kValidation, "train and test schemas differ");
  }
  std::vector<Comment> samples = train.samples();
  samples.insert(samples.end(), test.samples().begin(), test.samples().end());
  std::vector<Split> split(train.size(), Split::kTrain);
  split.resize(samples.size(), Split::kTest);
  return Corpus(train.schema(), std::move(samples), std::move(split));
}

std::vector<std::pair<std::string, size_t>> ClassDistribution(
    const Corpus& corpus) {
  const auto& schema = corpus.schema();
  std::vector<size_t> counts(schema.num_classes(), 0);
  size_t clean = 0;
  for (const auto& s : corpus.samples()) {
    bool any = false;
    for (size_t c = 0; c < counts.size(); ++c) {
      counts[c] += s.labels[c];
      any = any || s.labels[c];
    }
    clean += any ? 0 : 1;
  }
  std::vector<std::pair<std::string, size_t>> out;
  for (size_t c = 0; c < counts.size(); ++c) out.emplace_back(schema.classes[c], counts[c]);
  if (schema.multi_label()) out.emplace_back("clean", clean);
  return out;
}

std::vector<size_t> StratumOf(const Corpus& corpus) {
  const auto& schema = corpus.schema();
  const size_t nc = schema.num_classes();
  std::vector<size_t> counts(nc, 0);
  for (const auto& s : corpus.samples()) {
    for (size_t c = 0; c < nc; ++c) counts[c] += s.labels[c];
  }
  // Rarest first; ties broken by schema order.
  std::vector<size_t> order(nc);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return counts[a] < counts[b]; });

  std::vector<size_t> stratum(corpus.size(), nc);
  for (size_t i = 0; i < corpus.size(); ++i) {
    for (size_t c : order) {
      if (corpus[i].labels[c]) {
        stratum[i] = c;
        break;
      }
    }
  }
  return stratum;
}

namespace {

// Deals the given corpus indices into `buckets` groups, stratum by stratum.
std::vector<int> DealStratified(const Corpus& corpus,
                                const std::vector<size_t>& indices, int buckets,
                                CounterRng& rng) {
  const auto stratum = StratumOf(corpus);
  std::map<size_t, std::vector<size_t>> members;
  for (size_t pos = 0; pos < indices.size(); ++pos) {
    members[stratum[indices[pos]]].push_back(pos);
  }
  std::vector<int> out(indices.size(), 0);
  int next = 0;
  for (auto& [s, positions] : members) {
    Shuffle(positions, rng);
    for (size_t p : positions) {
      out[p] = next;
      next = (next + 1) % buckets;
    }
  }
  return out;
}

}  // namespace

Corpus StratifiedHoldout(const Corpus& corpus, double test_fraction,
                         uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    Fail(ErrorKind::kArgument, "test fraction must lie in (0,1)");
  }
  CounterRng rng(seed, /*stream=*/0x5E11);
  const auto stratum = StratumOf(corpus);
  std::map<size_t, std::vector<size_t>> members;
  for (size_t i = 0; i < corpus.size(); ++i) members[stratum[i]].push_back(i);
  std::vector<Split> split(corpus.size(), Split::kTrain);
  for (auto& [s, idx] : members) {
    Shuffle(idx, rng);
    const auto n_test = static_cast<size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    for (size_t j = 0; j < n_test; ++j) split[idx[j]] = Split::kTest;
  }
  return corpus.WithSplit(std::move(split));
}

FoldAssignment SplitFolds(const Corpus& corpus, int k, uint64_t seed) {
  if (k < 2) Fail(ErrorKind::kArgument, "k must be at least 2");
  const auto train = corpus.TrainIndices();
  if (train.size() < static_cast<size_t>(k)) {
    Fail(ErrorKind::kArgument, "k=" + std::to_string(k) + " exceeds the " +
                                   std::to_string(train.size()) +
                                   " train samples");
  }
  CounterRng rng(seed, /*stream=*/0xF01D);
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.folds = DealStratified(corpus, train, k, rng);
  for (size_t i : train) fa.ids.push_back(corpus[i].id);
  return fa;
}

int FoldAssignment::FoldOf(const std::string& id) const {
  if (lookup_.size() != ids.size()) {
    lookup_.clear();
    for (size_t i = 0; i < ids.size(); ++i) lookup_.emplace(ids[i], folds[i]);
  }
  auto it = lookup_.find(id);
  if (it == lookup_.end()) Fail(ErrorKind::kValidation, "id '" + id + "' has no fold");
  return it->second;
}

std::vector<size_t> FoldAssignment::Members(const Corpus& corpus, int fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (folds[i] != fold) continue;
    auto idx = corpus.IndexOf(ids[i]);
    if (!idx) Fail(ErrorKind::kValidation, "fold id '" + ids[i] + "' not in corpus");
    out.push_back(*idx);
  }
  return out;
}

std::vector<size_t> FoldAssignment::Complement(const Corpus& corpus, int fold) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (folds[i] == fold) continue;
    auto idx = corpus.IndexOf(ids[i]);
    if (!idx) Fail(ErrorKind::kValidation, "fold id '" + ids[i] + "' not in corpus");
    out.push_back(*idx);
  }
  return out;
}

std::string FoldAssignment::ToCsv() const {
  std::string out = "id,fold\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    out += CsvEscape(ids[i]) + "," + std::to_string(folds[i]) + "\n";
  }
  return out;
}

FoldAssignment FoldAssignment::FromCsv(std::string_view content, int k,
                                       uint64_t seed) {
  const auto records = ParseCsv(content);
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != 2) Fail(ErrorKind::kParse, "fold file row " + std::to_string(r));
    const int fold = std::stoi(f[1]);
    if (fold < 0 || fold >= k) {
      Fail(ErrorKind::kParse, "fold index out of range on row " + std::to_string(r));
    }
    fa.ids.push_back(f[0]);
    fa.folds.push_back(fold);
  }
  return fa;
}

std::string SerializeSchema(const LabelSchema& schema) {
  json j;
  j["name"] = schema.name;
  j["kind"] = SchemaKindName(schema.kind);
  j["classes"] = schema.classes;
  return j.dump(2) + "\n";
}

LabelSchema ParseSchema(std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    LabelSchema s;
    s.name = j.at("name").get<std::string>();
    s.kind = ParseSchemaKind(j.at("kind").get<std::string>());
    s.classes = j.at("classes").get<std::vector<std::string>>();
    s.Validate();
    return s;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("schema sidecar: ") + e.what());
  }
}

std::string SerializeRecords(const Corpus& corpus) {
  std::string out;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    json j;
    j["id"] = s.id;
    j["text"] = s.text;
    j["labels"] = std::vector<int>(s.labels.begin(), s.labels.end());
    if (corpus.has_split()) {
      j["split"] = (*corpus.split())[i] == Split::kTrain ? "train" : "test";
    }
    out += j.dump() + "\n";
  }
  return out;
}

Corpus ParseRecords(std::string_view ndjson, const LabelSchema& schema) {
  std::vector<Comment> samples;
  std::vector<Split> split;
  bool any_split = false;
  size_t line_no = 0;
  size_t start = 0;
  while (start < ndjson.size()) {
    size_t end = ndjson.find('\n', start);
    if (end == std::string_view::npos) end = ndjson.size();
    const auto line = ndjson.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      Comment c;
      c.id = j.at("id").get<std::string>();
      c.text = j.at("text").get<std::string>();
      for (int b : j.at("labels").get<std::vector<int>>()) {
        if (b != 0 && b != 1) Fail(ErrorKind::kParse, "label not in {0,1}");
        c.labels.push_back(static_cast<uint8_t>(b));
      }
      if (j.contains("split")) {
        any_split = true;
        const auto v = j["split"].get<std::string>();
        if (v != "train" && v != "test") Fail(ErrorKind::kParse, "bad split '" + v + "'");
        split.push_back(v == "train" ? Split::kTrain : Split::kTest);
      } else {
        split.push_back(Split::kTrain);
      }
      samples.push_back(std::move(c));
    } catch (const json::exception& e) {
      Fail(ErrorKind::kParse, "record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (any_split) return Corpus(schema, std::move(samples), std::move(split));
  return Corpus(schema, std::move(samples));
}

void SaveCorpus(const Corpus& corpus, const std::string& records_path,
                const std::string& schema_path) {
  WriteStringToFile(records_path, SerializeRecords(corpus));
  WriteStringToFile(schema_path, SerializeSchema(corpus.schema()));
}

Corpus LoadCorpus(const std::string& records_path,
                  const std::string& schema_path) {
  const auto schema = ParseSchema(ReadFileToString(schema_path));
  return ParseRecords(ReadFileToString(records_path), schema);
}

}  // namespace toxens
