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

// Little-endian binary containers. Every artifact starts with
//   magic (4 bytes) | format version (u32) | config hash (u64)
// and the reader refuses a file whose magic, version or hash differ from
// what the caller expects.

#ifndef TOXENS_BINARY_IO_H_
#define TOXENS_BINARY_IO_H_

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "toxens/common.h"

namespace toxens {

class BinaryWriter {
 public:
  BinaryWriter(std::string_view magic, uint32_t version, uint64_t config_hash);

  template <typename T>
  void Put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    buffer_.append(p, sizeof(T));
  }
  void PutString(std::string_view s);
  template <typename T>
  void PutVector(const std::vector<T>& values) {
    static_assert(std::is_arithmetic_v<T>);
    Put<uint64_t>(values.size());
    const auto* p = reinterpret_cast<const char*>(values.data());
    buffer_.append(p, values.size() * sizeof(T));
  }

  const std::string& bytes() const { return buffer_; }
  void WriteFile(const std::string& path) const;

 private:
  std::string buffer_;
};

class BinaryReader {
 public:
  // Pass expected_hash = 0 to accept any config hash (read it via
  // config_hash()).
  BinaryReader(std::string bytes, std::string_view magic, uint32_t version,
               uint64_t expected_hash);
  static BinaryReader FromFile(const std::string& path, std::string_view magic,
                               uint32_t version, uint64_t expected_hash);

  template <typename T>
  T Get() {
    static_assert(std::is_arithmetic_v<T>);
    Need(sizeof(T));
    T value;
    std::memcpy(&value, buffer_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string GetString();
  template <typename T>
  std::vector<T> GetVector() {
    const auto n = Get<uint64_t>();
    if (n > (buffer_.size() - pos_) / sizeof(T)) Truncated();
    std::vector<T> out(n);
    std::memcpy(out.data(), buffer_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return out;
  }

  uint64_t config_hash() const { return config_hash_; }
  bool AtEnd() const { return pos_ == buffer_.size(); }

 private:
  void Need(size_t n) {
    if (buffer_.size() - pos_ < n) Truncated();
  }
  [[noreturn]] void Truncated() const;

  std::string buffer_;
  size_t pos_ = 0;
  uint64_t config_hash_ = 0;
};

std::string ReadFileToString(const std::string& path);
void WriteStringToFile(const std::string& path, std::string_view content);

}  // namespace toxens

#endif  // TOXENS_BINARY_IO_H_
