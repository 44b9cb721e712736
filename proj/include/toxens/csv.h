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

#ifndef TOXENS_CSV_H_
#define TOXENS_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace toxens {

struct CsvRecord {
  std::vector<std::string> fields;
  // 1-based physical line on which the record starts.
  size_t line = 0;
};

// RFC-4180 reader: comma separated, '"' quoting with '""' escapes, quoted
// fields may span lines, LF or CRLF terminators. A blank line between records
// is skipped. Throws a parse error on an unterminated quote or stray quote.
std::vector<CsvRecord> ParseCsv(std::string_view content);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string CsvEscape(std::string_view field);
std::string CsvJoin(const std::vector<std::string>& fields);

bool IsValidUtf8(std::string_view s);

}  // namespace toxens

#endif  // TOXENS_CSV_H_
