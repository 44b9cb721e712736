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

// Run manifests. Each command records what it read, what it wrote and the
// settings that produced it; out/artifacts.tsv maps every artifact to the
// manifest that last wrote it.

#ifndef TOXENS_MANIFEST_H_
#define TOXENS_MANIFEST_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace toxens {

inline constexpr const char* kVersion = "0.1.0";

struct ArtifactRecord {
  std::string path;  // relative to the output directory
  uint64_t bytes = 0;
  std::string digest;  // FNV-1a 64 of the content
};

class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv, std::string out_dir);

  void SetConfig(const std::string& path, uint64_t hash);
  void AddSeed(const std::string& name, uint64_t seed);
  void AddNote(const std::string& key, const std::string& value);
  void AddInput(const std::string& path);
  // `path` is absolute or relative to the working directory; the file must
  // exist.
  void AddArtifact(const std::string& path);

  const std::vector<ArtifactRecord>& artifacts() const { return artifacts_; }

  std::string ToJson() const;
  // Writes out_dir/manifests/<name>.json, updates out_dir/artifacts.tsv and
  // returns the manifest path.
  std::string Finish();

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string out_dir_;
  std::string config_path_;
  uint64_t config_hash_ = 0;
  std::vector<std::pair<std::string, uint64_t>> seeds_;
  std::vector<std::pair<std::string, std::string>> notes_;
  std::vector<std::string> inputs_;
  std::vector<ArtifactRecord> artifacts_;
  std::string started_utc_;
  std::chrono::steady_clock::time_point start_;
  double wall_seconds_ = 0;
};

// Artifact path -> manifest path, as recorded in out_dir/artifacts.tsv.
std::map<std::string, std::string> LoadArtifactIndex(const std::string& out_dir);

}  // namespace toxens

#endif  // TOXENS_MANIFEST_H_
