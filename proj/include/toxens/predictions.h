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

#ifndef TOXENS_PREDICTIONS_H_
#define TOXENS_PREDICTIONS_H_

#include <string>
#include <string_view>
#include <vector>

namespace toxens {

// Per-sample, per-class scores in [0,1].
struct PredictionMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> classes;
  std::vector<double> scores;  // row-major, ids.size() x classes.size()
  std::string producer;

  size_t rows() const { return ids.size(); }
  size_t cols() const { return classes.size(); }
  double at(size_t r, size_t c) const { return scores[r * classes.size() + c]; }
  double& at(size_t r, size_t c) { return scores[r * classes.size() + c]; }
  std::vector<double> Column(size_t c) const;

  // Throws when a score leaves [0,1], or (softmax) a row does not sum to 1.
  void Validate(bool softmax) const;

  // `id,<class columns>` with 17 significant digits.
  std::string ToCsv() const;
  static PredictionMatrix FromCsv(std::string_view content, std::string producer = "");
  void SaveCsv(const std::string& path) const;
  static PredictionMatrix LoadCsv(const std::string& path);
  void SaveBinary(const std::string& path) const;
  static PredictionMatrix LoadBinary(const std::string& path);

  bool operator==(const PredictionMatrix&) const = default;
};

}  // namespace toxens

#endif  // TOXENS_PREDICTIONS_H_
