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

#include "toxens/csv.h"

#include "toxens/common.h"

namespace toxens {

std::vector<CsvRecord> ParseCsv(std::string_view content) {
  std::vector<CsvRecord> records;
  size_t i = 0;
  size_t line = 1;
  // Skip a UTF-8 byte order mark.
  if (content.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  while (i < content.size()) {
    // Blank line.
    if (content[i] == '\n' || (content[i] == '\r' && i + 1 < content.size() &&
                               content[i + 1] == '\n')) {
      i += content[i] == '\r' ? 2 : 1;
      ++line;
      continue;
    }
    CsvRecord record;
    record.line = line;
    std::string field;
    bool done = false;
    while (!done) {
      field.clear();
      if (i < content.size() && content[i] == '"') {
        ++i;
        const size_t start_line = line;
        while (true) {
          if (i >= content.size()) {
            Fail(ErrorKind::kParse, "unterminated quoted field starting on line " +
                                        std::to_string(start_line));
          }
          const char c = content[i];
          if (c == '"') {
            if (i + 1 < content.size() && content[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (i < content.size() && content[i] != ',' && content[i] != '\n' &&
            content[i] != '\r') {
          Fail(ErrorKind::kParse,
               "unexpected character after closing quote on line " +
                   std::to_string(line));
        }
      } else {
        while (i < content.size() && content[i] != ',' && content[i] != '\n' &&
               content[i] != '\r') {
          if (content[i] == '"') {
            Fail(ErrorKind::kParse, "stray quote in unquoted field on line " +
                                        std::to_string(line));
          }
          field.push_back(content[i]);
          ++i;
        }
      }
      record.fields.push_back(field);
      if (i >= content.size()) {
        done = true;
      } else if (content[i] == ',') {
        ++i;
      } else {
        if (content[i] == '\r') ++i;
        if (i < content.size() && content[i] == '\n') ++i;
        ++line;
        done = true;
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string CsvEscape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string CsvJoin(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += CsvEscape(fields[i]);
  }
  return out;
}

bool IsValidUtf8(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    size_t len;
    uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

}  // namespace toxens
