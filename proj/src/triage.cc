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

#include "toxens/triage.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <numeric>

#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/common.h"

namespace toxens {

using nlohmann::json;

const char* TriageKindName(TriageKind kind) {
  return kind == TriageKind::kFalseNegative ? "FN" : "FP";
}

TriageKind ParseTriageKind(const std::string& name) {
  if (name == "FN" || name == "fn" || name == "false_negative") return TriageKind::kFalseNegative;
  if (name == "FP" || name == "fp" || name == "false_positive") return TriageKind::kFalsePositive;
  Fail(ErrorKind::kArgument, "unknown triage kind '" + name + "' (expected FN or FP)");
}

ErrorTaxonomy ErrorTaxonomy::Default() {
  ErrorTaxonomy t;
  t.false_negative = {
      {kDoubtfulLabel, "Gold label is disputable under the class definition"},
      {"no_swear_words", "Toxicity without swear words"},
      {"rhetorical_question", "Rhetorical questions"},
      {"metaphor_comparison", "Metaphors and comparisons"},
      {"rare_words", "Idiosyncratic and rare words"},
      {"sarcasm_irony", "Sarcasm and irony"},
  };
  t.false_positive = {
      {kDoubtfulLabel, "Gold label is disputable under the class definition"},
      {"swear_word_usage", "Usage of swear words in a non-toxic comment"},
      {"quotation_reference", "Quotations or references"},
      {"rare_words", "Idiosyncratic and rare words"},
  };
  return t;
}

const std::vector<TaxonomyTag>& ErrorTaxonomy::For(TriageKind kind) const {
  return kind == TriageKind::kFalseNegative ? false_negative : false_positive;
}

void ErrorTaxonomy::Add(TriageKind kind, TaxonomyTag tag) {
  auto& list = kind == TriageKind::kFalseNegative ? false_negative : false_positive;
  for (const auto& t : list) {
    if (t.id == tag.id) Fail(ErrorKind::kValidation, "duplicate taxonomy tag '" + tag.id + "'");
  }
  if (tag.id.empty()) Fail(ErrorKind::kValidation, "taxonomy tag id must not be empty");
  list.push_back(std::move(tag));
}

namespace {

std::string NowUtc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<size_t> TriageSession::IndexOf(const std::string& item_id) const {
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == item_id) return i;
  }
  return std::nullopt;
}

bool TriageSession::HasTag(const std::string& tag) const {
  return std::any_of(tags.begin(), tags.end(), [&](const TaxonomyTag& t) { return t.id == tag; });
}

void TriageSession::RecordAnnotation(const std::string& item_id, std::vector<std::string> new_tags,
                                     const std::string& timestamp) {
  const auto idx = IndexOf(item_id);
  if (!idx) Fail(ErrorKind::kValidation, "unknown item '" + item_id + "'");
  for (const auto& t : new_tags) {
    if (!HasTag(t)) {
      Fail(ErrorKind::kValidation, "tag '" + t + "' is not defined for " +
                                       TriageKindName(kind) + " sessions");
    }
  }
  // Binary occurrence: a tag is either present or not.
  std::sort(new_tags.begin(), new_tags.end());
  new_tags.erase(std::unique(new_tags.begin(), new_tags.end()), new_tags.end());
  annotations[*idx] = new_tags;
  audit_log.push_back({audit_log.size() + 1, item_id, std::move(new_tags),
                       timestamp.empty() ? NowUtc() : timestamp});
}

size_t TriageSession::annotated() const {
  return static_cast<size_t>(std::count_if(annotations.begin(), annotations.end(),
                                           [](const auto& a) { return a.has_value(); }));
}

std::string TriageSession::ToJson() const {
  json j;
  j["session_id"] = session_id;
  j["focal_class"] = focal_class;
  j["kind"] = TriageKindName(kind);
  j["seed"] = seed;
  j["population"] = population;
  j["requested"] = requested;
  json jt = json::array();
  for (const auto& t : tags) jt.push_back({{"id", t.id}, {"description", t.description}});
  j["tags"] = jt;
  json items_json = json::array();
  for (size_t i = 0; i < items.size(); ++i) {
    json e = {{"id", items[i].id},
              {"text", items[i].text},
              {"gold", items[i].gold},
              {"score", items[i].score}};
    e["annotation"] = annotations[i] ? json(*annotations[i]) : json(nullptr);
    items_json.push_back(e);
  }
  j["items"] = items_json;
  json audit = json::array();
  for (const auto& a : audit_log) {
    audit.push_back(
        {{"sequence", a.sequence}, {"item_id", a.item_id}, {"tags", a.tags}, {"timestamp", a.timestamp}});
  }
  j["audit_log"] = audit;
  return j.dump(2);
}

TriageSession TriageSession::FromJson(const std::string& text) {
  TriageSession s;
  try {
    const json j = json::parse(text);
    s.session_id = j.at("session_id");
    s.focal_class = j.at("focal_class");
    s.kind = ParseTriageKind(j.at("kind"));
    s.seed = j.at("seed");
    s.population = j.at("population");
    s.requested = j.at("requested");
    for (const auto& t : j.at("tags")) s.tags.push_back({t.at("id"), t.at("description")});
    for (const auto& e : j.at("items")) {
      s.items.push_back({e.at("id"), e.at("text"), e.at("gold").get<uint8_t>(), e.at("score")});
      const auto& a = e.at("annotation");
      if (a.is_null()) {
        s.annotations.emplace_back(std::nullopt);
      } else {
        s.annotations.emplace_back(a.get<std::vector<std::string>>());
      }
    }
    for (const auto& a : j.at("audit_log")) {
      s.audit_log.push_back({a.at("sequence"), a.at("item_id"),
                             a.at("tags").get<std::vector<std::string>>(), a.at("timestamp")});
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("triage session: ") + e.what());
  }
  for (const auto& a : s.annotations) {
    if (!a) continue;
    for (const auto& t : *a) {
      if (!s.HasTag(t)) Fail(ErrorKind::kValidation, "session references undefined tag '" + t + "'");
    }
  }
  return s;
}

void TriageSession::Save(const std::string& path) const { WriteStringToFile(path, ToJson()); }

TriageSession TriageSession::Load(const std::string& path) {
  return FromJson(ReadFileToString(path));
}

std::vector<size_t> SampleWithoutReplacement(size_t population, size_t n, uint64_t seed) {
  std::vector<size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  const size_t take = std::min(n, population);
  CounterRng rng(seed, 0x7A1A);
  // Partial Fisher-Yates from the front.
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + static_cast<size_t>(rng.NextBelow(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

TriageSession SampleErrors(const PredictionMatrix& scores, const BinaryMatrix& predicted,
                           const BinaryMatrix& gold, const Corpus& corpus,
                           const std::string& focal_class, TriageKind kind, size_t n,
                           uint64_t seed, const ErrorTaxonomy& taxonomy) {
  if (predicted.size() != scores.rows() || gold.size() != scores.rows()) {
    Fail(ErrorKind::kValidation, "predictions and gold are not aligned");
  }
  const auto it = std::find(scores.classes.begin(), scores.classes.end(), focal_class);
  if (it == scores.classes.end()) {
    Fail(ErrorKind::kValidation, "unknown focal class '" + focal_class + "'");
  }
  const auto c = static_cast<size_t>(it - scores.classes.begin());
  std::vector<size_t> errors;
  for (size_t r = 0; r < scores.rows(); ++r) {
    const bool fn = gold[r][c] == 1 && predicted[r][c] == 0;
    const bool fp = gold[r][c] == 0 && predicted[r][c] == 1;
    if (kind == TriageKind::kFalseNegative ? fn : fp) errors.push_back(r);
  }
  TriageSession s;
  s.focal_class = focal_class;
  s.kind = kind;
  s.seed = seed;
  s.population = errors.size();
  s.requested = n;
  s.tags = taxonomy.For(kind);
  for (size_t pick : SampleWithoutReplacement(errors.size(), n, seed)) {
    const size_t r = errors[pick];
    const auto idx = corpus.IndexOf(scores.ids[r]);
    if (!idx) Fail(ErrorKind::kValidation, "prediction id '" + scores.ids[r] + "' not in corpus");
    s.items.push_back({scores.ids[r], corpus[*idx].text, gold[r][c], scores.at(r, c)});
  }
  s.annotations.assign(s.items.size(), std::nullopt);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s|%s|%llu|%zu|%zu", focal_class.c_str(), TriageKindName(kind),
                static_cast<unsigned long long>(seed), s.population, n);
  s.session_id = HexDigest(Fnv1a64(buf));
  return s;
}

FrequencyReport ComputeFrequencyReport(const TriageSession& session) {
  FrequencyReport rep;
  rep.focal_class = session.focal_class;
  rep.kind = session.kind;
  rep.sampled = session.items.size();
  rep.annotated = session.annotated();
  if (rep.annotated == 0) Fail(ErrorKind::kReport, "no annotated items in the session");
  auto has = [](const std::vector<std::string>& tags, const std::string& t) {
    return std::find(tags.begin(), tags.end(), t) != tags.end();
  };
  size_t doubtful = 0;
  for (const auto& a : session.annotations) {
    if (a && has(*a, kDoubtfulLabel)) ++doubtful;
  }
  rep.doubtful = {kDoubtfulLabel, doubtful, rep.annotated,
                  100.0 * static_cast<double>(doubtful) / static_cast<double>(rep.annotated)};
  const size_t undoubtful = rep.annotated - doubtful;
  for (const auto& tag : session.tags) {
    if (tag.id == kDoubtfulLabel) continue;
    TagFrequency f{tag.id, 0, undoubtful, 0.0};
    for (const auto& a : session.annotations) {
      if (a && !has(*a, kDoubtfulLabel) && has(*a, tag.id)) ++f.count;
    }
    if (undoubtful > 0) {
      f.percent = 100.0 * static_cast<double>(f.count) / static_cast<double>(undoubtful);
    }
    rep.undoubtful.push_back(f);
  }
  return rep;
}

std::string FrequencyReport::ToJson() const {
  auto row = [](const TagFrequency& f) {
    return json{{"tag", f.tag}, {"count", f.count}, {"denominator", f.denominator},
                {"percent", f.percent}};
  };
  json j;
  j["focal_class"] = focal_class;
  j["kind"] = TriageKindName(kind);
  j["sampled"] = sampled;
  j["annotated"] = annotated;
  j["doubtful"] = row(doubtful);
  json rows = json::array();
  for (const auto& f : undoubtful) rows.push_back(row(f));
  j["undoubtful"] = rows;
  return j.dump(2);
}

std::string FrequencyReport::ToText() const {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%s errors for class '%s': %zu annotated of %zu sampled\n",
                TriageKindName(kind), focal_class.c_str(), annotated, sampled);
  out += buf;
  auto line = [&](const TagFrequency& f) {
    std::snprintf(buf, sizeof(buf), "  %-22s %5zu / %-5zu %6.1f%%\n", f.tag.c_str(), f.count,
                  f.denominator, f.percent);
    out += buf;
  };
  out += "over all annotated items:\n";
  line(doubtful);
  out += "over items with undoubtful labels:\n";
  for (const auto& f : undoubtful) line(f);
  return out;
}

}  // namespace toxens
