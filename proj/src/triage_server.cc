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

#include "toxens/triage_server.h"

#include <algorithm>
#include <mutex>

#include "httplib.h"
#include "json.hpp"
#include "toxens/common.h"

namespace toxens {

using nlohmann::json;

namespace {

ApiResponse ErrorResponse(int status, const std::string& code, const std::string& message) {
  return {status, json{{"code", code}, {"message", message}}.dump()};
}

ApiResponse Ok(const json& j) { return {200, j.dump()}; }

bool ParseSize(const std::map<std::string, std::string>& q, const std::string& key, size_t def,
               size_t* out) {
  const auto it = q.find(key);
  if (it == q.end()) {
    *out = def;
    return true;
  }
  const std::string& s = it->second;
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), ::isdigit)) return false;
  *out = std::stoul(s);
  return true;
}

}  // namespace

TriageApi::TriageApi(TriageSession session, std::string save_path, std::string token)
    : session_(std::move(session)), save_path_(std::move(save_path)), token_(std::move(token)) {}

TriageSession TriageApi::Snapshot() const {
  std::shared_lock lock(mu_);
  return session_;
}

ApiResponse TriageApi::Handle(const std::string& method, const std::string& path,
                              const std::map<std::string, std::string>& query,
                              const std::string& body) {
  if (!token_.empty()) {
    const auto it = query.find("token");
    if (it == query.end() || it->second != token_) {
      return ErrorResponse(401, "unauthorized", "missing or wrong session token");
    }
  }
  if (path == "/api/session") {
    if (method != "GET") return ErrorResponse(405, "method_not_allowed", "use GET");
    return Session();
  }
  if (path == "/api/items") {
    if (method != "GET") return ErrorResponse(405, "method_not_allowed", "use GET");
    return Items(query);
  }
  if (path == "/api/report") {
    if (method != "GET") return ErrorResponse(405, "method_not_allowed", "use GET");
    return Report();
  }
  const std::string prefix = "/api/items/";
  const std::string suffix = "/annotation";
  if (path.size() > prefix.size() + suffix.size() && path.rfind(prefix, 0) == 0 &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    if (method != "POST") return ErrorResponse(405, "method_not_allowed", "use POST");
    const std::string id =
        httplib::detail::decode_url(path.substr(prefix.size(), path.size() - prefix.size() - suffix.size()), false);
    return Annotate(id, body);
  }
  return ErrorResponse(404, "not_found", "no route for " + method + " " + path);
}

ApiResponse TriageApi::Session() const {
  std::shared_lock lock(mu_);
  json tags = json::array();
  for (const auto& t : session_.tags) tags.push_back({{"id", t.id}, {"description", t.description}});
  return Ok({{"session_id", session_.session_id},
             {"focal_class", session_.focal_class},
             {"kind", TriageKindName(session_.kind)},
             {"seed", session_.seed},
             {"population", session_.population},
             {"requested", session_.requested},
             {"tags", tags},
             {"progress", {{"annotated", session_.annotated()}, {"total", session_.items.size()}}}});
}

ApiResponse TriageApi::Items(const std::map<std::string, std::string>& query) const {
  size_t offset = 0, limit = 0;
  if (!ParseSize(query, "offset", 0, &offset) || !ParseSize(query, "limit", 50, &limit)) {
    return ErrorResponse(400, "bad_request", "offset and limit must be non-negative integers");
  }
  std::shared_lock lock(mu_);
  json items = json::array();
  const size_t end = std::min(session_.items.size(), offset + limit);
  for (size_t i = offset; i < end; ++i) {
    const auto& it = session_.items[i];
    json e = {{"id", it.id}, {"text", it.text}, {"gold", it.gold}, {"score", it.score}};
    e["annotation"] = session_.annotations[i] ? json(*session_.annotations[i]) : json(nullptr);
    items.push_back(e);
  }
  return Ok({{"total", session_.items.size()}, {"offset", offset}, {"items", items}});
}

ApiResponse TriageApi::Annotate(const std::string& item_id, const std::string& body) {
  std::vector<std::string> tags;
  try {
    const json j = json::parse(body);
    const json& arr = j.is_object() ? j.at("tags") : j;
    if (!arr.is_array()) return ErrorResponse(400, "bad_request", "expected a tag array");
    for (const auto& t : arr) {
      if (!t.is_string()) return ErrorResponse(400, "bad_request", "tags must be strings");
      tags.push_back(t.get<std::string>());
    }
  } catch (const json::exception& e) {
    return ErrorResponse(400, "bad_request", std::string("invalid JSON body: ") + e.what());
  }
  std::unique_lock lock(mu_);
  if (!session_.IndexOf(item_id)) return ErrorResponse(404, "not_found", "unknown item '" + item_id + "'");
  TriageSession updated = session_;
  try {
    updated.RecordAnnotation(item_id, tags);
    if (!save_path_.empty()) updated.Save(save_path_);
  } catch (const Error& e) {
    if (e.is_validation()) return ErrorResponse(422, "validation_error", e.what());
    return ErrorResponse(500, "internal_error", e.what());
  }
  session_ = std::move(updated);
  const size_t idx = *session_.IndexOf(item_id);
  return Ok({{"id", item_id},
             {"annotation", *session_.annotations[idx]},
             {"progress", {{"annotated", session_.annotated()}, {"total", session_.items.size()}}}});
}

ApiResponse TriageApi::Report() const {
  std::shared_lock lock(mu_);
  try {
    return {200, ComputeFrequencyReport(session_).ToJson()};
  } catch (const Error& e) {
    return ErrorResponse(409, "report_error", e.what());
  }
}

struct TriageServer::Impl {
  TriageApi* api;
  httplib::Server server;
};

TriageServer::TriageServer(TriageApi* api) : impl_(std::make_unique<Impl>()) {
  impl_->api = api;
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    const ApiResponse r = impl_->api->Handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  impl_->server.Get(R"(/api/.*)", handler);
  impl_->server.Post(R"(/api/.*)", handler);
  impl_->server.Put(R"(/api/.*)", handler);
  impl_->server.Delete(R"(/api/.*)", handler);
}

TriageServer::~TriageServer() { Stop(); }

void TriageServer::MountStatic(const std::string& dir) {
  if (!impl_->server.set_mount_point("/", dir)) {
    Fail(ErrorKind::kConfiguration, "cannot serve UI from '" + dir + "'");
  }
}

int TriageServer::Bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) Fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void TriageServer::Serve() { impl_->server.listen_after_bind(); }

void TriageServer::Stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace toxens
