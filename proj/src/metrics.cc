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

#include "toxens/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "toxens/common.h"
#include "toxens/csv.h"

namespace toxens {

using nlohmann::json;

double ThresholdVector::at(const std::string& class_name) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == class_name) return values[i];
  }
  Fail(ErrorKind::kValidation, "no threshold for class '" + class_name + "'");
}

void ThresholdVector::Validate(const LabelSchema& schema) const {
  if (classes != schema.classes || values.size() != classes.size()) {
    Fail(ErrorKind::kValidation, "threshold vector does not cover the schema classes");
  }
  for (double v : values) {
    if (!(v > 0.0 && v < 1.0)) {
      Fail(ErrorKind::kValidation, "threshold " + std::to_string(v) + " outside (0,1)");
    }
  }
}

std::string ThresholdVector::ToJson() const {
  json j = json::object();
  for (size_t i = 0; i < classes.size(); ++i) j[classes[i]] = values[i];
  json out;
  out["order"] = classes;
  out["thresholds"] = j;
  return out.dump(2);
}

ThresholdVector ThresholdVector::FromJson(const std::string& text) {
  ThresholdVector t;
  try {
    const json j = json::parse(text);
    for (const auto& name : j.at("order")) {
      t.classes.push_back(name.get<std::string>());
      t.values.push_back(j.at("thresholds").at(t.classes.back()).get<double>());
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("threshold file: ") + e.what());
  }
  return t;
}

ThresholdVector ThresholdVector::Constant(const std::vector<std::string>& classes, double value) {
  ThresholdVector t;
  t.classes = classes;
  t.values.assign(classes.size(), value);
  return t;
}

BinaryMatrix Binarize(const PredictionMatrix& scores, const ThresholdVector& thresholds) {
  if (thresholds.classes != scores.classes) {
    Fail(ErrorKind::kValidation, "thresholds do not cover the prediction classes");
  }
  BinaryMatrix out(scores.rows(), std::vector<uint8_t>(scores.cols()));
  for (size_t r = 0; r < scores.rows(); ++r) {
    for (size_t c = 0; c < scores.cols(); ++c) {
      out[r][c] = scores.at(r, c) >= thresholds.values[c] ? 1 : 0;
    }
  }
  return out;
}

BinaryMatrix BinarizeArgmax(const PredictionMatrix& scores) {
  BinaryMatrix out(scores.rows(), std::vector<uint8_t>(scores.cols()));
  for (size_t r = 0; r < scores.rows(); ++r) {
    size_t best = 0;
    for (size_t c = 1; c < scores.cols(); ++c) {
      if (scores.at(r, c) > scores.at(r, best)) best = c;
    }
    if (scores.cols() > 0) out[r][best] = 1;
  }
  return out;
}

BinaryMatrix GoldMatrix(const CorpusView& view) {
  BinaryMatrix out;
  out.reserve(view.size());
  for (size_t i = 0; i < view.size(); ++i) out.push_back(view[i].labels);
  return out;
}

BinaryMatrix GoldFor(const Corpus& corpus, const std::vector<std::string>& ids) {
  BinaryMatrix out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto idx = corpus.IndexOf(id);
    if (!idx) Fail(ErrorKind::kValidation, "prediction id '" + id + "' not in corpus");
    out.push_back(corpus[*idx].labels);
  }
  return out;
}

std::vector<uint8_t> ColumnOf(const BinaryMatrix& m, size_t c) {
  std::vector<uint8_t> out(m.size());
  for (size_t r = 0; r < m.size(); ++r) out[r] = m[r][c];
  return out;
}

Prf1 ComputePrf1(const std::vector<uint8_t>& predicted, const std::vector<uint8_t>& gold) {
  if (predicted.size() != gold.size()) Fail(ErrorKind::kInternal, "prf1 length mismatch");
  size_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] && gold[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (gold[i]) ++fn;
  }
  Prf1 r;
  if (tp + fp == 0) r.precision_undefined = true;
  else r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn == 0) r.recall_undefined = true;
  else r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double RocAuc(const std::vector<double>& scores, const std::vector<uint8_t>& gold) {
  if (scores.size() != gold.size()) Fail(ErrorKind::kInternal, "roc_auc length mismatch");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0;
  size_t pos = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (gold[order[k]]) {
        rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) {
    Fail(ErrorKind::kUndefinedMetric, "ROC AUC needs both classes in the gold labels");
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

std::vector<double> ThresholdCandidates(const std::vector<double>& scores) {
  std::vector<double> s(scores);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> out;
  for (size_t i = 1; i < s.size(); ++i) out.push_back(s[i - 1] + (s[i] - s[i - 1]) / 2);
  out.push_back(0.5);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ThresholdChoice BestThreshold(const std::vector<double>& scores, const std::vector<uint8_t>& gold) {
  const auto candidates = ThresholdCandidates(scores);
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // pos_below[i]: positives among the i lowest scores.
  std::vector<size_t> pos_below(order.size() + 1, 0);
  for (size_t i = 0; i < order.size(); ++i) pos_below[i + 1] = pos_below[i] + gold[order[i]];
  const size_t total_pos = pos_below.back();
  ThresholdChoice best{candidates.front(), -1.0};
  size_t cut = 0;
  for (double t : candidates) {
    while (cut < order.size() && scores[order[cut]] < t) ++cut;
    const size_t predicted = order.size() - cut;
    const size_t tp = total_pos - pos_below[cut];
    const double denom = static_cast<double>(predicted + total_pos);
    const double f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    if (f1 > best.f1) best = {t, f1};
  }
  return best;
}

ThresholdVector SearchThresholds(const PredictionMatrix& scores, const BinaryMatrix& gold) {
  if (gold.size() != scores.rows()) Fail(ErrorKind::kInternal, "threshold search row mismatch");
  ThresholdVector out;
  out.classes = scores.classes;
  for (size_t c = 0; c < scores.cols(); ++c) {
    out.values.push_back(BestThreshold(scores.Column(c), ColumnOf(gold, c)).threshold);
  }
  return out;
}

double Pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    Fail(ErrorKind::kUndefinedMetric, "pearson needs two equal-length series of length >= 2");
  }
  const long double n = static_cast<long double>(a.size());
  long double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  long double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const long double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) Fail(ErrorKind::kUndefinedMetric, "pearson on a zero-variance series");
  const long double r = sab / std::sqrt(saa * sbb);
  return static_cast<double>(std::clamp<long double>(r, -1, 1));
}

namespace {

BinaryMatrix Decode(const PredictionMatrix& scores, SchemaKind kind,
                    const ThresholdVector* thresholds) {
  if (kind == SchemaKind::kMultiClass) return BinarizeArgmax(scores);
  if (thresholds) return Binarize(scores, *thresholds);
  return Binarize(scores, ThresholdVector::Constant(scores.classes, 0.5));
}

std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json JsonNum(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

MetricsReport Evaluate(const PredictionMatrix& scores, const BinaryMatrix& gold, SchemaKind kind,
                       const ThresholdVector* thresholds) {
  if (gold.size() != scores.rows()) Fail(ErrorKind::kInternal, "evaluation row mismatch");
  MetricsReport rep;
  rep.model = scores.producer;
  if (kind == SchemaKind::kMultiLabel) {
    rep.thresholds = thresholds ? *thresholds : ThresholdVector::Constant(scores.classes, 0.5);
  }
  const BinaryMatrix pred = Decode(scores, kind, thresholds);
  size_t auc_count = 0;
  for (size_t c = 0; c < scores.cols(); ++c) {
    ClassMetrics m;
    m.name = scores.classes[c];
    const auto g = ColumnOf(gold, c);
    m.prf = ComputePrf1(ColumnOf(pred, c), g);
    if (m.prf.precision_undefined) rep.flags.push_back(m.name + ": precision 0/0 set to 0");
    if (m.prf.recall_undefined) rep.flags.push_back(m.name + ": recall 0/0 set to 0");
    try {
      m.auc = RocAuc(scores.Column(c), g);
      rep.macro_auc += m.auc;
      ++auc_count;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUndefinedMetric) throw;
      m.auc = std::numeric_limits<double>::quiet_NaN();
      m.auc_defined = false;
      rep.flags.push_back(m.name + ": AUC undefined (single-class gold)");
    }
    rep.macro_precision += m.prf.precision;
    rep.macro_recall += m.prf.recall;
    rep.macro_f1 += m.prf.f1;
    rep.per_class.push_back(m);
  }
  const double k = static_cast<double>(std::max<size_t>(scores.cols(), 1));
  rep.macro_precision /= k;
  rep.macro_recall /= k;
  rep.macro_f1 /= k;
  rep.macro_auc = auc_count ? rep.macro_auc / static_cast<double>(auc_count)
                            : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::string MetricsReport::ToCsv() const {
  std::string out = "model,class,precision,recall,f1,auc,threshold\n";
  for (size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    const std::string thr = thresholds.values.empty() ? "argmax" : Num(thresholds.values[c]);
    out += CsvJoin({model, m.name, Num(m.prf.precision), Num(m.prf.recall), Num(m.prf.f1),
                    Num(m.auc), thr}) +
           "\n";
  }
  out += CsvJoin({model, "macro", Num(macro_precision), Num(macro_recall), Num(macro_f1),
                  Num(macro_auc), ""}) +
         "\n";
  return out;
}

std::string MetricsReport::ToJson() const {
  json j;
  j["model"] = model;
  j["macro"] = {{"precision", macro_precision},
                {"recall", macro_recall},
                {"f1", macro_f1},
                {"auc", JsonNum(macro_auc)}};
  json classes = json::array();
  for (size_t c = 0; c < per_class.size(); ++c) {
    const auto& m = per_class[c];
    json e = {{"class", m.name},
              {"precision", m.prf.precision},
              {"recall", m.prf.recall},
              {"f1", m.prf.f1},
              {"auc", JsonNum(m.auc)}};
    if (!thresholds.values.empty()) e["threshold"] = thresholds.values[c];
    classes.push_back(e);
  }
  j["classes"] = classes;
  j["decoding"] = thresholds.values.empty() ? "argmax" : "thresholds";
  j["flags"] = flags;
  return j.dump(2);
}

CorrelationReport Correlate(const PredictionMatrix& a, const PredictionMatrix& b,
                            const BinaryMatrix& gold, SchemaKind kind,
                            const ThresholdVector* thresholds_a,
                            const ThresholdVector* thresholds_b) {
  if (a.ids != b.ids || a.classes != b.classes) {
    Fail(ErrorKind::kValidation, "prediction matrices are not aligned on ids and classes");
  }
  CorrelationReport rep;
  rep.model_a = a.producer;
  rep.model_b = b.producer;
  rep.classes = a.classes;
  const auto ma = Evaluate(a, gold, kind, thresholds_a);
  const auto mb = Evaluate(b, gold, kind, thresholds_b);
  size_t defined = 0;
  for (size_t c = 0; c < a.cols(); ++c) {
    double r = std::numeric_limits<double>::quiet_NaN();
    uint8_t ok = 0;
    try {
      r = Pearson(a.Column(c), b.Column(c));
      ok = 1;
      rep.mean_pearson += r;
      ++defined;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUndefinedMetric) throw;
    }
    rep.pearson.push_back(r);
    rep.pearson_defined.push_back(ok);
    rep.f1_a.push_back(ma.per_class[c].prf.f1);
    rep.f1_b.push_back(mb.per_class[c].prf.f1);
  }
  rep.mean_pearson = defined ? rep.mean_pearson / static_cast<double>(defined)
                             : std::numeric_limits<double>::quiet_NaN();
  rep.mean_f1_a = ma.macro_f1;
  rep.mean_f1_b = mb.macro_f1;
  return rep;
}

std::string CorrelationReport::ToCsv() const {
  std::string out = "class,f1_" + model_a + ",f1_" + model_b + ",pearson\n";
  for (size_t c = 0; c < classes.size(); ++c) {
    out += CsvJoin({classes[c], Num(f1_a[c]), Num(f1_b[c]), Num(pearson[c])}) + "\n";
  }
  out += CsvJoin({"avg", Num(mean_f1_a), Num(mean_f1_b), Num(mean_pearson)}) + "\n";
  return out;
}

std::string CorrelationReport::ToJson() const {
  json j;
  j["model_a"] = model_a;
  j["model_b"] = model_b;
  json rows = json::array();
  for (size_t c = 0; c < classes.size(); ++c) {
    rows.push_back({{"class", classes[c]},
                    {"f1_a", f1_a[c]},
                    {"f1_b", f1_b[c]},
                    {"pearson", JsonNum(pearson[c])},
                    {"pearson_defined", static_cast<bool>(pearson_defined[c])}});
  }
  j["classes"] = rows;
  j["average"] = {{"f1_a", mean_f1_a}, {"f1_b", mean_f1_b}, {"pearson", JsonNum(mean_pearson)}};
  return j.dump(2);
}

namespace {

// ".776" style: leading zero dropped.
std::string Short(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

std::string Pad(const std::string& s, size_t width, bool left) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

void Group(std::string* line, const MetricsReport* r) {
  if (!r) {
    for (int i = 0; i < 4; ++i) *line += Pad("-", 7, false);
    return;
  }
  *line += Pad(Short(r->macro_precision, 2), 7, false);
  *line += Pad(Short(r->macro_recall, 2), 7, false);
  *line += Pad(Short(r->macro_f1, 3), 7, false);
  *line += Pad(Short(r->macro_auc, 3), 7, false);
}

}  // namespace

std::string FormatTable3(const std::string& first_title, const std::string& second_title,
                         const std::vector<Table3Row>& rows) {
  const int groups = second_title.empty() ? 1 : 2;
  size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  w += 2;
  std::string out = Pad("Model", w, true) + Pad(first_title, 28, false);
  if (groups == 2) out += Pad(second_title, 28, false);
  out += "\n" + Pad("", w, true);
  for (int g = 0; g < groups; ++g) {
    out += Pad("P", 7, false) + Pad("R", 7, false) + Pad("F1", 7, false) + Pad("AUC", 7, false);
  }
  out += "\n";
  for (const auto& r : rows) {
    std::string line = Pad(r.label, w, true);
    Group(&line, r.first);
    if (groups == 2) Group(&line, r.second);
    out += line + "\n";
  }
  return out;
}

std::string FormatTable4(const std::vector<Table4Block>& blocks) {
  size_t w = 5;
  for (const auto& b : blocks) {
    w = std::max(w, b.dataset.size() + 5);
    w = std::max(w, b.dataset.size() + 1 + b.focus_class.size());
  }
  w += 2;
  std::string out;
  for (const auto& b : blocks) {
    const auto* r = b.report;
    if (!out.empty()) out += "\n";
    out += r->model_a + " vs " + r->model_b + "\n";
    out += Pad("Class", w, true) + Pad("F1 a", 8, false) + Pad("F1 b", 8, false) +
           Pad("Pearson", 9, false) + "\n";
    out += Pad(b.dataset + " avg.", w, true) + Pad(Short(r->mean_f1_a, 2), 8, false) +
           Pad(Short(r->mean_f1_b, 2), 8, false) + Pad(Short(r->mean_pearson, 2), 9, false) + "\n";
    for (size_t c = 0; c < r->classes.size(); ++c) {
      if (r->classes[c] != b.focus_class) continue;
      out += Pad(b.dataset + " " + b.focus_class, w, true) + Pad(Short(r->f1_a[c], 2), 8, false) +
             Pad(Short(r->f1_b[c], 2), 8, false) + Pad(Short(r->pearson[c], 2), 9, false) + "\n";
    }
  }
  return out;
}

}  // namespace toxens
