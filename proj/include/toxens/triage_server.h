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

// JSON API over a triage session, and an HTTP server exposing it.
//
//   GET  /api/session                   metadata, tag list, progress
//   GET  /api/items?offset=&limit=      items with current annotations
//   POST /api/items/{id}/annotation     body: tag array or {"tags": [...]}
//   GET  /api/report                    frequency report
//
// Errors are {"code": ..., "message": ...}.

#ifndef TOXENS_TRIAGE_SERVER_H_
#define TOXENS_TRIAGE_SERVER_H_

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "toxens/triage.h"

namespace toxens {

struct ApiResponse {
  int status = 200;
  std::string body;
};

class TriageApi {
 public:
  // Every successful write is persisted to `save_path` when non-empty. A
  // non-empty `token` must be passed as the `token` query parameter.
  TriageApi(TriageSession session, std::string save_path = "", std::string token = "");

  ApiResponse Handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query, const std::string& body);

  TriageSession Snapshot() const;

 private:
  ApiResponse Session() const;
  ApiResponse Items(const std::map<std::string, std::string>& query) const;
  ApiResponse Annotate(const std::string& item_id, const std::string& body);
  ApiResponse Report() const;

  mutable std::shared_mutex mu_;
  TriageSession session_;
  std::string save_path_;
  std::string token_;
};

class TriageServer {
 public:
  explicit TriageServer(TriageApi* api);
  ~TriageServer();

  // Serves a built UI from `dir` at "/".
  void MountStatic(const std::string& dir);
  // Port 0 picks a free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  // Blocks until Stop().
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace toxens

#endif  // TOXENS_TRIAGE_SERVER_H_
