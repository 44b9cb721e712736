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

#include "toxens/predictions.h"

#include <cmath>
#include <cstdio>

#include "toxens/binary_io.h"
#include "toxens/common.h"
#include "toxens/csv.h"

namespace toxens {

std::vector<double> PredictionMatrix::Column(size_t c) const {
  std::vector<double> out(rows());
  for (size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

void PredictionMatrix::Validate(bool softmax) const {
  if (scores.size() != rows() * cols()) {
    Fail(ErrorKind::kInternal, "prediction matrix shape mismatch");
  }
  for (size_t r = 0; r < rows(); ++r) {
    double sum = 0;
    for (size_t c = 0; c < cols(); ++c) {
      const double s = at(r, c);
      if (!(s >= 0.0 && s <= 1.0)) {
        Fail(ErrorKind::kInternal, "score outside [0,1] for '" + ids[r] + "'");
      }
      sum += s;
    }
    if (softmax && std::abs(sum - 1.0) > 1e-6) {
      Fail(ErrorKind::kInternal, "softmax row for '" + ids[r] + "' does not sum to 1");
    }
  }
}

std::string PredictionMatrix::ToCsv() const {
  std::vector<std::string> header{"id"};
  header.insert(header.end(), classes.begin(), classes.end());
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

PredictionMatrix PredictionMatrix::FromCsv(std::string_view content, std::string producer) {
  const auto records = ParseCsv(content);
  if (records.empty() || records[0].fields.empty() || records[0].fields[0] != "id") {
    Fail(ErrorKind::kParse, "prediction CSV must start with an 'id' column");
  }
  PredictionMatrix m;
  m.producer = std::move(producer);
  m.classes.assign(records[0].fields.begin() + 1, records[0].fields.end());
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != m.classes.size() + 1) {
      Fail(ErrorKind::kParse, "prediction CSV row " + std::to_string(r) + " has " +
                                  std::to_string(f.size()) + " fields");
    }
    m.ids.push_back(f[0]);
    for (size_t c = 1; c < f.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(f[c].c_str(), &end);
      if (end == f[c].c_str() || *end != '\0') {
        Fail(ErrorKind::kParse, "bad score '" + f[c] + "' on row " + std::to_string(r));
      }
      m.scores.push_back(v);
    }
  }
  return m;
}

void PredictionMatrix::SaveCsv(const std::string& path) const {
  WriteStringToFile(path, ToCsv());
}

PredictionMatrix PredictionMatrix::LoadCsv(const std::string& path) {
  return FromCsv(ReadFileToString(path), path);
}

void PredictionMatrix::SaveBinary(const std::string& path) const {
  BinaryWriter w("TXPM", 1, 1);
  w.PutString(producer);
  w.Put<uint64_t>(classes.size());
  for (const auto& c : classes) w.PutString(c);
  w.Put<uint64_t>(ids.size());
  for (const auto& id : ids) w.PutString(id);
  w.PutVector(scores);
  w.WriteFile(path);
}

PredictionMatrix PredictionMatrix::LoadBinary(const std::string& path) {
  auto r = BinaryReader::FromFile(path, "TXPM", 1, 0);
  PredictionMatrix m;
  m.producer = r.GetString();
  const auto nc = r.Get<uint64_t>();
  for (uint64_t i = 0; i < nc; ++i) m.classes.push_back(r.GetString());
  const auto nr = r.Get<uint64_t>();
  for (uint64_t i = 0; i < nr; ++i) m.ids.push_back(r.GetString());
  m.scores = r.GetVector<double>();
  if (m.scores.size() != nr * nc) Fail(ErrorKind::kParse, "prediction cache is inconsistent");
  return m;
}

}  // namespace toxens
