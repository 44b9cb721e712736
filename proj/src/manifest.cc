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

#include "toxens/manifest.h"

#include <unicode/uversion.h>

#include <ctime>
#include <filesystem>

#include "json.hpp"
#include "toxens/binary_io.h"
#include "toxens/common.h"

namespace toxens {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string UtcNow(const char* format) {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), format, &tm);
  return buf;
}

std::string Relative(const std::string& path, const std::string& out_dir) {
  std::error_code ec;
  const fs::path rel = fs::relative(fs::absolute(path), fs::absolute(out_dir), ec);
  if (ec || rel.empty() || *rel.begin() == "..") return fs::absolute(path).lexically_normal().string();
  return rel.generic_string();
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> argv, std::string out_dir)
    : command_(std::move(command)),
      argv_(std::move(argv)),
      out_dir_(std::move(out_dir)),
      started_utc_(UtcNow("%Y-%m-%dT%H:%M:%SZ")),
      start_(std::chrono::steady_clock::now()) {}

void RunManifest::SetConfig(const std::string& path, uint64_t hash) {
  config_path_ = path;
  config_hash_ = hash;
}

void RunManifest::AddSeed(const std::string& name, uint64_t seed) { seeds_.emplace_back(name, seed); }

void RunManifest::AddNote(const std::string& key, const std::string& value) {
  notes_.emplace_back(key, value);
}

void RunManifest::AddInput(const std::string& path) { inputs_.push_back(path); }

void RunManifest::AddArtifact(const std::string& path) {
  const std::string content = ReadFileToString(path);
  artifacts_.push_back({Relative(path, out_dir_), content.size(), HexDigest(Fnv1a64(content))});
}

std::string RunManifest::ToJson() const {
  json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["config"] = {{"path", config_path_}, {"hash", HexDigest(config_hash_)}};
  json seeds = json::object();
  for (const auto& [k, v] : seeds_) seeds[k] = v;
  j["seeds"] = seeds;
  json notes = json::object();
  for (const auto& [k, v] : notes_) notes[k] = v;
  j["notes"] = notes;
  j["inputs"] = inputs_;
  json arts = json::array();
  for (const auto& a : artifacts_) {
    arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"fnv1a64", a.digest}});
  }
  j["artifacts"] = arts;
  j["started_utc"] = started_utc_;
  j["wall_clock_seconds"] = wall_seconds_;
  j["versions"] = {{"toxens", kVersion},
                   {"compiler", __VERSION__},
                   {"cxx", static_cast<long>(__cplusplus)},
                   {"icu", U_ICU_VERSION}};
  return j.dump(2) + "\n";
}

std::string RunManifest::Finish() {
  wall_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const fs::path dir = fs::path(out_dir_) / "manifests";
  fs::create_directories(dir);
  std::string stem = command_;
  for (auto& ch : stem) {
    if (ch == ' ') ch = '-';
  }
  const std::string tag = HexDigest(Fnv1a64(ToJson() + std::to_string(std::clock()))).substr(0, 8);
  const fs::path path = dir / (stem + "-" + UtcNow("%Y%m%dT%H%M%S") + "-" + tag + ".json");
  WriteStringToFile(path.string(), ToJson());

  auto index = LoadArtifactIndex(out_dir_);
  const std::string rel = Relative(path.string(), out_dir_);
  for (const auto& a : artifacts_) index[a.path] = rel;
  std::string tsv = "artifact\tmanifest\n";
  for (const auto& [a, m] : index) tsv += a + "\t" + m + "\n";
  WriteStringToFile((fs::path(out_dir_) / "artifacts.tsv").string(), tsv);
  return path.string();
}

std::map<std::string, std::string> LoadArtifactIndex(const std::string& out_dir) {
  std::map<std::string, std::string> index;
  const fs::path path = fs::path(out_dir) / "artifacts.tsv";
  if (!fs::exists(path)) return index;
  const std::string content = ReadFileToString(path.string());
  size_t start = 0;
  bool header = true;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const std::string line = content.substr(start, end - start);
    start = end + 1;
    if (header) {
      header = false;
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab != std::string::npos) index[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return index;
}

}  // namespace toxens
