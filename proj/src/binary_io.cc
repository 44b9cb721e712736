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

#include "toxens/binary_io.h"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace toxens {

BinaryWriter::BinaryWriter(std::string_view magic, uint32_t version,
                           uint64_t config_hash) {
  if (magic.size() != 4) Fail(ErrorKind::kInternal, "magic must be 4 bytes");
  buffer_.append(magic);
  Put<uint32_t>(version);
  Put<uint64_t>(config_hash);
}

void BinaryWriter::PutString(std::string_view s) {
  Put<uint64_t>(s.size());
  buffer_.append(s);
}

void BinaryWriter::WriteFile(const std::string& path) const {
  WriteStringToFile(path, buffer_);
}

BinaryReader::BinaryReader(std::string bytes, std::string_view magic,
                           uint32_t version, uint64_t expected_hash)
    : buffer_(std::move(bytes)) {
  if (buffer_.size() < 16 || std::string_view(buffer_).substr(0, 4) != magic) {
    Fail(ErrorKind::kParse, "not a '" + std::string(magic) + "' file");
  }
  pos_ = 4;
  const auto v = Get<uint32_t>();
  if (v != version) {
    Fail(ErrorKind::kParse, "unsupported " + std::string(magic) +
                                " version " + std::to_string(v) +
                                " (expected " + std::to_string(version) + ")");
  }
  config_hash_ = Get<uint64_t>();
  if (expected_hash != 0 && config_hash_ != expected_hash) {
    Fail(ErrorKind::kConfiguration,
         "config hash mismatch in " + std::string(magic) + " file: stored " +
             HexDigest(config_hash_) + ", expected " +
             HexDigest(expected_hash));
  }
}

BinaryReader BinaryReader::FromFile(const std::string& path,
                                    std::string_view magic, uint32_t version,
                                    uint64_t expected_hash) {
  return BinaryReader(ReadFileToString(path), magic, version, expected_hash);
}

std::string BinaryReader::GetString() {
  const auto n = Get<uint64_t>();
  Need(n);
  std::string out = buffer_.substr(pos_, n);
  pos_ += n;
  return out;
}

void BinaryReader::Truncated() const {
  Fail(ErrorKind::kParse, "truncated binary file at offset " +
                              std::to_string(pos_));
}

std::string ReadFileToString(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteStringToFile(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace toxens
