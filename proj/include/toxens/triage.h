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

// Error triage: sample misclassified comments for one class, record binary
// error-class tags per comment, and report tag frequencies.

#ifndef TOXENS_TRIAGE_H_
#define TOXENS_TRIAGE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toxens/corpus.h"
#include "toxens/metrics.h"
#include "toxens/predictions.h"

namespace toxens {

enum class TriageKind { kFalseNegative, kFalsePositive };

const char* TriageKindName(TriageKind kind);  // "FN" / "FP"
TriageKind ParseTriageKind(const std::string& name);

inline constexpr const char* kDoubtfulLabel = "doubtful_label";

struct TaxonomyTag {
  std::string id;
  std::string description;
  bool operator==(const TaxonomyTag&) const = default;
};

struct ErrorTaxonomy {
  std::vector<TaxonomyTag> false_negative;
  std::vector<TaxonomyTag> false_positive;

  static ErrorTaxonomy Default();
  const std::vector<TaxonomyTag>& For(TriageKind kind) const;
  // Appends a tag; duplicate ids are a validation error.
  void Add(TriageKind kind, TaxonomyTag tag);
};

struct TriageItem {
  std::string id;
  std::string text;
  uint8_t gold = 0;
  double score = 0;
  bool operator==(const TriageItem&) const = default;
};

struct AuditEntry {
  uint64_t sequence = 0;
  std::string item_id;
  std::vector<std::string> tags;
  std::string timestamp;
  bool operator==(const AuditEntry&) const = default;
};

class TriageSession {
 public:
  std::string session_id;
  std::string focal_class;
  TriageKind kind = TriageKind::kFalseNegative;
  uint64_t seed = 0;
  size_t population = 0;
  size_t requested = 0;
  // Tags valid for this session's kind.
  std::vector<TaxonomyTag> tags;
  std::vector<TriageItem> items;
  // Parallel to items: nullopt = unannotated; an empty vector = reviewed, no
  // tag applies.
  std::vector<std::optional<std::vector<std::string>>> annotations;
  std::vector<AuditEntry> audit_log;

  // Overwrites any earlier annotation of the item and appends to the audit
  // log. Unknown items or tags raise a validation error.
  void RecordAnnotation(const std::string& item_id, std::vector<std::string> tags,
                        const std::string& timestamp = "");
  size_t annotated() const;
  std::optional<size_t> IndexOf(const std::string& item_id) const;
  bool HasTag(const std::string& tag) const;

  std::string ToJson() const;
  static TriageSession FromJson(const std::string& text);
  void Save(const std::string& path) const;
  static TriageSession Load(const std::string& path);

  bool operator==(const TriageSession&) const = default;
};

// Uniform sample of min(n, population) distinct positions in [0, population),
// in ascending order. Deterministic in seed.
std::vector<size_t> SampleWithoutReplacement(size_t population, size_t n, uint64_t seed);

// Misclassified rows for `focal_class` (gold 1 / predicted 0 for false
// negatives, the reverse for false positives), sampled as above. `scores`
// supplies ids and the focal-class score; texts come from `corpus`.
TriageSession SampleErrors(const PredictionMatrix& scores, const BinaryMatrix& predicted,
                           const BinaryMatrix& gold, const Corpus& corpus,
                           const std::string& focal_class, TriageKind kind, size_t n,
                           uint64_t seed, const ErrorTaxonomy& taxonomy = ErrorTaxonomy::Default());

struct TagFrequency {
  std::string tag;
  size_t count = 0;
  size_t denominator = 0;
  double percent = 0;
};

struct FrequencyReport {
  std::string focal_class;
  TriageKind kind = TriageKind::kFalseNegative;
  size_t sampled = 0;
  size_t annotated = 0;
  // doubtful_label over every annotated item.
  TagFrequency doubtful;
  // Every other tag over the annotated items without doubtful_label.
  std::vector<TagFrequency> undoubtful;

  std::string ToJson() const;
  std::string ToText() const;
};

// Raises a report error when nothing is annotated.
FrequencyReport ComputeFrequencyReport(const TriageSession& session);

}  // namespace toxens

#endif  // TOXENS_TRIAGE_H_
