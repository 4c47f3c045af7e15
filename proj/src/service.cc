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

#include "relnet/service.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "httplib.h"
#include "json_util.h"
#include "relnet/dataset.h"
#include "relnet/fusion.h"
#include "relnet/relevance.h"

namespace relnet {
namespace {

std::string Hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInputTooShort:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kIncompatible:
    case ErrorCode::kEmpty:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    default:
      return 500;
  }
}

HttpResponse ErrorResponse(int status, std::string_view code, const std::string& message) {
  Json j{{"error", {{"code", code}, {"message", message}}}};
  return {status, j.dump()};
}

Json ParseBody(const std::string& body) {
  try {
    Json j = Json::parse(body);
    Require(j.is_object(), ErrorCode::kInvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

std::string RequireString(const Json& j, const char* key) {
  Require(j.contains(key) && j[key].is_string(), ErrorCode::kInvalidArgument,
          std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::vector<std::string> ExpertIds(const Json& j) {
  if (!j.contains("expert_ids")) return {};
  Require(j["expert_ids"].is_array(), ErrorCode::kInvalidArgument,
          "field 'expert_ids' must be an array of strings");
  std::vector<std::string> ids;
  for (const Json& v : j["expert_ids"]) {
    Require(v.is_string(), ErrorCode::kInvalidArgument,
            "field 'expert_ids' must be an array of strings");
    ids.push_back(v.get<std::string>());
  }
  return ids;
}

// Models for `ids`, in request order. The same id twice is allowed (the
// relevance of duplicated experts is well defined); class ids need not be
// distinct, so no ExpertSet is built.
std::vector<const ExpertModel*> ResolveExperts(const SessionCatalog& catalog,
                                               const std::vector<std::string>& ids) {
  std::vector<const ExpertModel*> out;
  for (const auto& id : ids) out.push_back(catalog.Expert(id).model.get());
  return out;
}

Json RankingJson(const std::vector<double>& scores, const std::vector<std::string>& names) {
  const std::vector<std::size_t> ranking = RankScores(scores);
  Json classes = Json::array();
  Json top3 = Json::array();
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    classes.push_back({{"class", names[ranking[r]]}, {"index", ranking[r]},
                       {"score", scores[ranking[r]]}});
    if (r < 3) top3.push_back(names[ranking[r]]);
  }
  return Json{{"classes", classes}, {"top3", top3}};
}

}  // namespace

std::optional<std::string> ProcessEnv(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

ServiceOptions ApplyEnvironment(ServiceOptions options, bool models_set, bool features_set,
                                bool manifest_set, bool port_set, const EnvLookup& env) {
  if (!models_set) {
    if (auto v = env("RELNET_MODELS_DIR")) options.models_dir = *v;
  }
  if (!features_set) {
    if (auto v = env("RELNET_FEATURES_DIR")) options.features_dir = *v;
  }
  if (!manifest_set) {
    if (auto v = env("RELNET_MANIFEST")) options.manifest = *v;
  }
  if (!port_set) {
    if (auto v = env("RELNET_PORT")) {
      try {
        options.port = std::stoi(*v);
      } catch (const std::exception&) {
        Fail(ErrorCode::kInvalidArgument, "RELNET_PORT is not a number: '" + *v + "'");
      }
    }
  }
  Require(options.port >= 0 && options.port <= 65535, ErrorCode::kInvalidArgument,
          "port out of range: " + std::to_string(options.port));
  return options;
}

SessionCatalog SessionCatalog::Load(const ServiceOptions& options) {
  SessionCatalog catalog;
  if (!options.models_dir.empty()) {
    Require(std::filesystem::is_directory(options.models_dir), ErrorCode::kNotFound,
            "models directory not found: " + options.models_dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(options.models_dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (f.extension() == ".expert") {
        catalog.AddExpert(f.stem().string(), std::make_shared<const ExpertModel>(LoadExpert(f)));
      }
    }
    std::vector<std::shared_ptr<const ExpertModel>> available;
    for (const auto& e : catalog.experts_) available.push_back(e.model);
    for (const auto& f : files) {
      if (f.extension() == ".relnet") {
        catalog.AddModel({f.stem().string(), "relnet", LoadRelnet(f, available), std::nullopt});
      } else if (f.extension() == ".convnet") {
        catalog.AddModel({f.stem().string(), "convnet", std::nullopt, LoadClassifier(f)});
      }
    }
  }
  if (!options.manifest.empty()) {
    const Manifest manifest = LoadManifest(options.manifest);
    for (const ManifestRecord& r : manifest.records) {
      CatalogClip clip;
      clip.id = std::filesystem::path(r.path).stem().string();
      clip.path = r.path;
      clip.label = r.label;
      clip.features = LoadClipFeatures(manifest, r, options.features_dir);
      catalog.AddClip(std::move(clip));
    }
  }
  return catalog;
}

void SessionCatalog::AddClip(CatalogClip clip) {
  for (const auto& c : clips_) {
    Require(c.id != clip.id, ErrorCode::kDuplicate, "duplicate clip id '" + clip.id + "'");
  }
  clips_.push_back(std::move(clip));
}

void SessionCatalog::AddExpert(const std::string& id, std::shared_ptr<const ExpertModel> model) {
  for (const auto& e : experts_) {
    Require(e.id != id, ErrorCode::kDuplicate, "duplicate expert id '" + id + "'");
  }
  const std::uint32_t checksum = model->Checksum();
  experts_.push_back({id, std::move(model), checksum});
}

void SessionCatalog::AddModel(CatalogModel model) {
  for (const auto& m : models_) {
    Require(m.id != model.id, ErrorCode::kDuplicate, "duplicate model id '" + model.id + "'");
  }
  Require(!TryParseFusionMode(model.id).has_value(), ErrorCode::kInvalidArgument,
          "model id '" + model.id + "' collides with a fusion mode name");
  models_.push_back(std::move(model));
}

const CatalogClip& SessionCatalog::Clip(const std::string& id) const {
  for (const auto& c : clips_) {
    if (c.id == id) return c;
  }
  Fail(ErrorCode::kNotFound, "unknown clip id '" + id + "'");
}

const CatalogExpert& SessionCatalog::Expert(const std::string& id) const {
  for (const auto& e : experts_) {
    if (e.id == id) return e;
  }
  Fail(ErrorCode::kNotFound, "unknown expert id '" + id + "'");
}

const CatalogModel* SessionCatalog::Model(const std::string& id) const {
  for (const auto& m : models_) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

ServiceHandler::ServiceHandler(std::shared_ptr<const SessionCatalog> catalog)
    : catalog_(std::move(catalog)) {}

HttpResponse ServiceHandler::Handle(const std::string& method, const std::string& path,
                                    const std::string& body) const {
  try {
    static const std::string kClips = "/api/clips/";
    static const std::string kSpec = "/spectrogram";
    if (path == "/api/experts" || path == "/api/models" || path == "/api/clips" ||
        (path.rfind(kClips, 0) == 0 && path.size() > kClips.size() + kSpec.size() &&
         path.compare(path.size() - kSpec.size(), kSpec.size(), kSpec) == 0)) {
      if (method != "GET") return ErrorResponse(405, "method_not_allowed", "use GET " + path);
      if (path == "/api/experts") return {200, Experts()};
      if (path == "/api/models") return {200, Models()};
      if (path == "/api/clips") return {200, Clips()};
      const std::string id =
          path.substr(kClips.size(), path.size() - kClips.size() - kSpec.size());
      return {200, Spectrogram(id)};
    }
    if (path == "/api/relevance" || path == "/api/classify") {
      if (method != "POST") return ErrorResponse(405, "method_not_allowed", "use POST " + path);
      return {200, path == "/api/relevance" ? Relevance(body) : Classify(body)};
    }
    return ErrorResponse(404, "not_found", "no route for " + method + " " + path);
  } catch (const Error& e) {
    return ErrorResponse(StatusFor(e.code()), ErrorCodeName(e.code()), e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(500, "internal", e.what());
  }
}

std::string ServiceHandler::Experts() const {
  Json list = Json::array();
  for (const auto& e : catalog_->experts()) {
    list.push_back({{"id", e.id},
                    {"class_id", e.model->class_id()},
                    {"class_name", e.model->class_name()},
                    {"checksum", Hex(e.checksum)},
                    {"training", MetadataToJson(e.model->metadata())}});
  }
  return Json{{"experts", list}}.dump();
}

std::string ServiceHandler::Models() const {
  Json list = Json::array();
  for (const auto& m : catalog_->models()) {
    const auto& names = m.relnet ? m.relnet->class_names() : m.convnet->class_names();
    Json entry{{"id", m.id}, {"kind", m.kind}, {"class_names", names}};
    if (m.relnet) {
      Json experts = Json::array();
      for (const auto& e : m.relnet->experts().entries()) experts.push_back(e.class_name);
      entry["experts"] = experts;
    }
    list.push_back(entry);
  }
  Json fusion = Json::array();
  for (FusionMode f : kAllFusionModes) fusion.push_back(FusionModeName(f));
  return Json{{"models", list}, {"fusion_modes", fusion}}.dump();
}

std::string ServiceHandler::Clips() const {
  Json list = Json::array();
  for (const auto& c : catalog_->clips()) {
    list.push_back({{"id", c.id},
                    {"name", c.path},
                    {"label", c.label},
                    {"frames", c.features.frames()},
                    {"bins", c.features.bins()},
                    {"frame_hop_seconds", c.features.frame_hop_seconds},
                    {"duration_seconds",
                     static_cast<double>(c.features.frames()) * c.features.frame_hop_seconds}});
  }
  return Json{{"clips", list}}.dump();
}

std::string ServiceHandler::Spectrogram(const std::string& id) const {
  const CatalogClip& clip = catalog_->Clip(id);
  const std::size_t frames = clip.features.frames();
  const std::size_t bins = clip.features.bins();
  const std::size_t columns = std::min(frames, kMaxSpectrogramColumns);
  Json values = Json::array();
  Json times = Json::array();
  for (std::size_t j = 0; j < columns; ++j) {
    times.push_back(static_cast<double>(j * frames / columns) * clip.features.frame_hop_seconds);
  }
  for (std::size_t b = 0; b < bins; ++b) {
    auto src = clip.features.values.row(b);
    Json row = Json::array();
    for (std::size_t j = 0; j < columns; ++j) {
      const std::size_t first = j * frames / columns;
      const std::size_t last = (j + 1) * frames / columns;
      double sum = 0.0;
      for (std::size_t t = first; t < last; ++t) sum += src[t];
      row.push_back(std::log1p(sum / static_cast<double>(last - first)));
    }
    values.push_back(std::move(row));
  }
  return Json{{"id", clip.id},
              {"bins", bins},
              {"frames", frames},
              {"columns", columns},
              {"column_seconds", static_cast<double>(frames) / static_cast<double>(columns) *
                                     clip.features.frame_hop_seconds},
              {"times", times},
              {"scale", "log1p"},
              {"values", values}}
      .dump();
}

std::string ServiceHandler::Relevance(const std::string& body) const {
  const Json req = ParseBody(body);
  const std::string clip_id = RequireString(req, "clip_id");
  const std::vector<std::string> ids = ExpertIds(req);
  Require(ids.size() >= 2, ErrorCode::kInvalidArgument,
          "relevance needs at least 2 expert ids, got " + std::to_string(ids.size()));
  const CatalogClip& clip = catalog_->Clip(clip_id);
  const std::vector<const ExpertModel*> experts = ResolveExperts(*catalog_, ids);
  std::vector<std::string> names;
  for (const ExpertModel* e : experts) names.push_back(e->class_name());
  const ProbabilityMatrix probs = ExpertProbabilities(clip.features, experts);
  const RelevanceProfile profile = ComputeRelevanceProfile(probs, names);
  Json top_names = Json::array();
  Json top_ids = Json::array();
  for (std::size_t t : profile.top_expert) {
    top_names.push_back(names[t]);
    top_ids.push_back(ids[t]);
  }
  return Json{{"clip_id", clip_id},
              {"expert_ids", ids},
              {"expert_names", names},
              {"segments", profile.segments()},
              {"segment_times", profile.segment_times},
              {"r_max", profile.relevance},
              {"top_expert", top_names},
              {"top_expert_id", top_ids},
              {"top_expert_index", profile.top_expert}}
      .dump();
}

std::string ServiceHandler::Classify(const std::string& body) const {
  const Json req = ParseBody(body);
  const std::string clip_id = RequireString(req, "clip_id");
  const std::string model_id = RequireString(req, "model");
  const CatalogClip& clip = catalog_->Clip(clip_id);
  Json out{{"clip_id", clip_id}, {"model", model_id}};

  if (const CatalogModel* m = catalog_->Model(model_id)) {
    ClipDistribution dist;
    std::vector<std::string> names;
    if (m->relnet) {
      dist = m->relnet->Forward(clip.features).clip;
      names = m->relnet->class_names();
    } else {
      dist = m->convnet->Forward(clip.features).clip;
      names = m->convnet->class_names();
    }
    out["kind"] = m->kind;
    out["degenerate"] = dist.degenerate;
    out.update(RankingJson(dist.probs, names));
    return out.dump();
  }

  const std::optional<FusionMode> parsed = TryParseFusionMode(model_id);
  Require(parsed.has_value(), ErrorCode::kNotFound, "unknown model '" + model_id + "'");
  const FusionMode mode = *parsed;
  const std::vector<std::string> ids = ExpertIds(req);
  Require(ids.size() >= 2, ErrorCode::kInvalidArgument,
          std::string(FusionModeName(mode)) + " fusion needs at least 2 expert ids, got " +
              std::to_string(ids.size()));
  const std::vector<const ExpertModel*> experts = ResolveExperts(*catalog_, ids);
  std::vector<std::string> names;
  for (const ExpertModel* e : experts) names.push_back(e->class_name());
  const ProbabilityMatrix probs = ExpertProbabilities(clip.features, experts);
  std::vector<double> relevance;
  if (mode == FusionMode::kRV) relevance = ComputeRelevanceProfile(probs, names).relevance;
  const FusionResult fused = Fuse(probs, mode, relevance);
  out["kind"] = "fusion";
  out["expert_ids"] = ids;
  out.update(RankingJson(fused.scores, names));
  return out.dump();
}

struct ServiceServer::Impl {
  httplib::Server server;
};

ServiceServer::ServiceServer(const ServiceHandler& handler) : impl_(std::make_unique<Impl>()) {
  auto dispatch = [&handler](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handler.Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
    res.set_header("Access-Control-Allow-Origin", "*");
  };
  impl_->server.Get(R"(/api/.*)", dispatch);
  impl_->server.Post(R"(/api/.*)", dispatch);
  impl_->server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

ServiceServer::~ServiceServer() = default;

int ServiceServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    Require(bound > 0, ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  Require(impl_->server.bind_to_port(host, port), ErrorCode::kIo,
          "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ServiceServer::Listen() { impl_->server.listen_after_bind(); }

void ServiceServer::Stop() { impl_->server.stop(); }

void RunServer(const ServiceHandler& handler, const std::string& host, int port,
               const std::function<void(int)>& on_ready) {
  ServiceServer server(handler);
  const int bound = server.Bind(host, port);
  if (on_ready) on_ready(bound);
  server.Listen();
}

}  // namespace relnet
