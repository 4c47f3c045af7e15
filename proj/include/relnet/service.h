// Copyright 2026 The RELNET Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Read-only HTTP interface over a catalog of clips and models loaded once
// at startup:
//
//   GET  /api/experts
//   GET  /api/models
//   GET  /api/clips
//   GET  /api/clips/{id}/spectrogram
//   POST /api/relevance  {"clip_id": ..., "expert_ids": [...]}
//   POST /api/classify   {"clip_id": ..., "model": <model id | MV | SUM | PROD | RV>,
//                         "expert_ids": [...]}
//
// Errors are {"error": {"code": ..., "message": ...}} with status 400, 404
// or 500.

#ifndef RELNET_SERVICE_H_
#define RELNET_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relnet/expert.h"
#include "relnet/features.h"
#include "relnet/relnet_model.h"

namespace relnet {

struct ServiceOptions {
  std::filesystem::path models_dir;
  std::filesystem::path features_dir;
  std::filesystem::path manifest;
  std::string host = "127.0.0.1";
  int port = 8080;
};

// Fills options left unset on the command line from RELNET_MODELS_DIR,
// RELNET_FEATURES_DIR, RELNET_MANIFEST and RELNET_PORT. Explicit flags win.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
ServiceOptions ApplyEnvironment(ServiceOptions options, bool models_set, bool features_set,
                                bool manifest_set, bool port_set, const EnvLookup& env);
std::optional<std::string> ProcessEnv(const std::string& name);

struct CatalogClip {
  std::string id;  // file stem of the manifest path
  std::string path;
  std::string label;
  MelSpectrogram features;
};

struct CatalogExpert {
  std::string id;  // file stem
  std::shared_ptr<const ExpertModel> model;
  std::uint32_t checksum = 0;
};

struct CatalogModel {
  std::string id;
  std::string kind;  // "relnet" or "convnet"
  std::optional<RelnetModel> relnet;
  std::optional<SegmentClassifier> convnet;
};

// Immutable after Load.
class SessionCatalog {
 public:
  // *.expert, *.relnet and *.convnet under models_dir; clips from the
  // manifest. Any unreadable or corrupt artifact aborts with an error
  // naming the file.
  static SessionCatalog Load(const ServiceOptions& options);

  void AddClip(CatalogClip clip);
  void AddExpert(const std::string& id, std::shared_ptr<const ExpertModel> model);
  void AddModel(CatalogModel model);

  const std::vector<CatalogClip>& clips() const { return clips_; }
  const std::vector<CatalogExpert>& experts() const { return experts_; }
  const std::vector<CatalogModel>& models() const { return models_; }

  const CatalogClip& Clip(const std::string& id) const;
  const CatalogExpert& Expert(const std::string& id) const;
  const CatalogModel* Model(const std::string& id) const;

 private:
  std::vector<CatalogClip> clips_;
  std::vector<CatalogExpert> experts_;
  std::vector<CatalogModel> models_;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

inline constexpr std::size_t kMaxSpectrogramColumns = 2000;

// Transport-independent request handling; safe to call concurrently.
class ServiceHandler {
 public:
  explicit ServiceHandler(std::shared_ptr<const SessionCatalog> catalog);

  HttpResponse Handle(const std::string& method, const std::string& path,
                      const std::string& body) const;

 private:
  std::string Experts() const;
  std::string Models() const;
  std::string Clips() const;
  std::string Spectrogram(const std::string& id) const;
  std::string Relevance(const std::string& body) const;
  std::string Classify(const std::string& body) const;

  std::shared_ptr<const SessionCatalog> catalog_;
};

// HTTP front end for a handler. Stop() may be called from any thread and
// makes Listen() return.
class ServiceServer {
 public:
  explicit ServiceServer(const ServiceHandler& handler);
  ~ServiceServer();
  ServiceServer(const ServiceServer&) = delete;
  ServiceServer& operator=(const ServiceServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  void Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocks serving `handler` until the process is stopped. `on_ready` is called
// once the socket is bound.
void RunServer(const ServiceHandler& handler, const std::string& host, int port,
               const std::function<void(int port)>& on_ready = {});

}  // namespace relnet

#endif  // RELNET_SERVICE_H_
