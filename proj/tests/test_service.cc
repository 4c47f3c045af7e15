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


#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "relnet/fusion.h"
#include "relnet/relevance.h"
#include "relnet/service.h"
#include "test_util.h"
#include "trained_suite.h"

namespace relnet {
namespace {

using Json = nlohmann::json;
using testing::SharedSuite;

// Models and the first six held-out clips of the shared suite.
std::shared_ptr<const SessionCatalog> SuiteCatalog() {
  static const std::shared_ptr<const SessionCatalog> catalog = [] {
    const auto& s = SharedSuite();
    auto c = std::make_shared<SessionCatalog>();
    for (const auto& e : s.models.experts) c->AddExpert("e_" + e->class_name(), e);
    c->AddModel({"relnet_main", "relnet", s.models.relnet, std::nullopt});
    c->AddModel({"convnet_main", "convnet", std::nullopt, s.models.convnet});
    for (std::size_t j = 0; j < 6; ++j) {
      const Bag& b = s.data.bags[s.split.test[j]];
      c->AddClip({b.name, b.name + ".wav", s.data.class_names[b.label], b.features});
    }
    return std::shared_ptr<const SessionCatalog>(c);
  }();
  return catalog;
}

Json Call(const ServiceHandler& h, const std::string& method, const std::string& path,
          const std::string& body, int expected_status) {
  const HttpResponse r = h.Handle(method, path, body);
  EXPECT_EQ(r.status, expected_status) << method << " " << path << ": " << r.body;
  return Json::parse(r.body);
}

std::vector<std::string> ExpertIds() {
  std::vector<std::string> ids;
  for (const auto& e : SuiteCatalog()->experts()) ids.push_back(e.id);
  return ids;
}

TEST(Service, ListsCatalogue) {
  const ServiceHandler h(SuiteCatalog());
  const Json experts = Call(h, "GET", "/api/experts", "", 200)["experts"];
  ASSERT_EQ(experts.size(), 3u);
  EXPECT_EQ(experts[0]["checksum"].get<std::string>().size(), 8u);
  EXPECT_TRUE(experts[0].contains("training"));
  const Json models = Call(h, "GET", "/api/models", "", 200);
  EXPECT_EQ(models["models"].size(), 2u);
  EXPECT_EQ(models["fusion_modes"], Json({"MV", "SUM", "PROD", "RV"}));
  EXPECT_EQ(models["models"][0]["experts"].size(), 3u);
  const Json clips = Call(h, "GET", "/api/clips", "", 200)["clips"];
  ASSERT_EQ(clips.size(), 6u);
  EXPECT_GT(clips[0]["duration_seconds"].get<double>(), 0.0);
}

TEST(Service, RouteErrors) {
  const ServiceHandler h(SuiteCatalog());
  EXPECT_EQ(Call(h, "GET", "/api/nothing", "", 404)["error"]["code"], "not_found");
  Call(h, "POST", "/api/experts", "{}", 405);
  Call(h, "GET", "/api/relevance", "", 405);
  Call(h, "GET", "/api/clips/missing/spectrogram", "", 404);
  Call(h, "POST", "/api/relevance", "{not json", 400);
  Call(h, "POST", "/api/relevance", "[1]", 400);
  Call(h, "POST", "/api/relevance", R"({"expert_ids": []})", 400);
  const std::string clip = SuiteCatalog()->clips()[0].id;
  Json req{{"clip_id", clip}, {"expert_ids", {ExpertIds()[0]}}};
  Call(h, "POST", "/api/relevance", req.dump(), 400);
  req["expert_ids"] = {ExpertIds()[0], "ghost"};
  const Json err = Call(h, "POST", "/api/relevance", req.dump(), 404);
  EXPECT_NE(err["error"]["message"].get<std::string>().find("ghost"), std::string::npos);
  Call(h, "POST", "/api/classify", Json{{"clip_id", clip}, {"model", "nope"}}.dump(), 404);
  Call(h, "POST", "/api/classify",
       Json{{"clip_id", clip}, {"model", "RV"}, {"expert_ids", {ExpertIds()[0]}}}.dump(), 400);
}

TEST(Service, SpectrogramIsDownsampled) {
  auto c = std::make_shared<SessionCatalog>();
  MelSpectrogram long_clip = testing::RandomSpectrogram(4, 5003, 3);
  long_clip.frame_hop_seconds = 0.01;
  c->AddClip({"long", "long.wav", "x", long_clip});
  c->AddClip({"short", "short.wav", "x", testing::RandomSpectrogram(4, 30, 4)});
  const ServiceHandler h(c);
  const Json j = Call(h, "GET", "/api/clips/long/spectrogram", "", 200);
  EXPECT_EQ(j["columns"], kMaxSpectrogramColumns);
  ASSERT_EQ(j["values"].size(), 4u);
  EXPECT_EQ(j["values"][0].size(), kMaxSpectrogramColumns);
  EXPECT_EQ(j["times"].size(), kMaxSpectrogramColumns);
  // Column 0 covers frames [0, 2) of bin 0.
  const double mean = 0.5 * (long_clip.values(0, 0) + long_clip.values(0, 1));
  EXPECT_NEAR(j["values"][0][0].get<double>(), std::log1p(mean), 1e-6);
  const Json s = Call(h, "GET", "/api/clips/short/spectrogram", "", 200);
  EXPECT_EQ(s["columns"], 30);
}

TEST(Service, RelevanceMatchesLibrary) {
  const ServiceHandler h(SuiteCatalog());
  const CatalogClip& clip = SuiteCatalog()->clips()[1];
  const std::vector<std::string> ids = ExpertIds();
  const Json j =
      Call(h, "POST", "/api/relevance", Json{{"clip_id", clip.id}, {"expert_ids", ids}}.dump(), 200);
  std::vector<const ExpertModel*> experts;
  std::vector<std::string> names;
  for (const auto& e : SuiteCatalog()->experts()) {
    experts.push_back(e.model.get());
    names.push_back(e.model->class_name());
  }
  const RelevanceProfile p =
      ComputeRelevanceProfile(ExpertProbabilities(clip.features, experts), names);
  ASSERT_EQ(j["r_max"].size(), p.segments());
  for (std::size_t k = 0; k < p.segments(); ++k) {
    EXPECT_DOUBLE_EQ(j["r_max"][k].get<double>(), p.relevance[k]);
    EXPECT_EQ(j["top_expert_id"][k], ids[p.top_expert[k]]);
  }
}

TEST(Service, ClassifyModelsAndFusion) {
  const ServiceHandler h(SuiteCatalog());
  const auto& s = SharedSuite();
  const CatalogClip& clip = SuiteCatalog()->clips()[2];
  const Json rel =
      Call(h, "POST", "/api/classify", Json{{"clip_id", clip.id}, {"model", "relnet_main"}}.dump(),
           200);
  const auto expected = RankScores(s.models.relnet.Forward(clip.features).clip.probs);
  ASSERT_EQ(rel["top3"].size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(rel["top3"][r], s.data.class_names[expected[r]]);
  }
  EXPECT_EQ(rel["kind"], "relnet");
  Call(h, "POST", "/api/classify", Json{{"clip_id", clip.id}, {"model", "convnet_main"}}.dump(),
       200);
  for (const char* mode : {"MV", "SUM", "PROD", "RV"}) {
    const Json f = Call(
        h, "POST", "/api/classify",
        Json{{"clip_id", clip.id}, {"model", mode}, {"expert_ids", ExpertIds()}}.dump(), 200);
    EXPECT_EQ(f["kind"], "fusion");
    EXPECT_EQ(f["classes"].size(), 3u);
  }
}

TEST(Service, HttpRoundTrip) {
  const ServiceHandler h(SuiteCatalog());
  ServiceServer server(h);
  const int port = server.Bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.Listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  auto res = client.Get("/api/experts");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(Json::parse(res->body)["experts"].size(), 3u);
  res = client.Post("/api/relevance", "{bad", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client.Options("/api/classify");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  server.Stop();
  listener.join();
}

TEST(Service, LoadsArtifactsFromDisk) {
  const auto& s = SharedSuite();
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "models");
  for (const auto& e : s.models.experts) {
    SaveExpert(*e, dir / "models" / (e->class_name() + ".expert"));
  }
  SaveRelnet(s.models.relnet, dir / "models" / "main.relnet");
  SaveClassifier(s.models.convnet, dir / "models" / "base.convnet");
  WriteSyntheticDataset(dir / "data", s.data);
  ServiceOptions opt;
  opt.models_dir = dir / "models";
  opt.manifest = dir / "data" / "manifest.tsv";
  opt.features_dir = dir / "data" / "features";
  const SessionCatalog catalog = SessionCatalog::Load(opt);
  EXPECT_EQ(catalog.experts().size(), 3u);
  EXPECT_EQ(catalog.models().size(), 2u);
  EXPECT_EQ(catalog.clips().size(), s.data.bags.size());
  EXPECT_EQ(catalog.Expert(s.models.experts[0]->class_name()).checksum,
            s.models.experts[0]->Checksum());

  // A damaged expert aborts startup and names the file.
  const auto victim = dir / "models" / (s.models.experts[1]->class_name() + ".expert");
  std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(40);
  f.put('\x7f');
  f.close();
  try {
    SessionCatalog::Load(opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(victim.filename().string()), std::string::npos);
  }
}

TEST(Service, EmptyCatalogueGivesEmptyLists) {
  testing::TempDir dir;
  ServiceOptions opt;
  opt.models_dir = dir.path();
  const ServiceHandler h(std::make_shared<SessionCatalog>(SessionCatalog::Load(opt)));
  EXPECT_TRUE(Call(h, "GET", "/api/experts", "", 200)["experts"].empty());
  EXPECT_TRUE(Call(h, "GET", "/api/models", "", 200)["models"].empty());
  EXPECT_TRUE(Call(h, "GET", "/api/clips", "", 200)["clips"].empty());
  opt.models_dir = dir / "absent";
  EXPECT_THROW(SessionCatalog::Load(opt), Error);
}

TEST(Service, EnvironmentFillsUnsetOptions) {
  const std::map<std::string, std::string> env = {{"RELNET_MODELS_DIR", "/env/models"},
                                                  {"RELNET_FEATURES_DIR", "/env/features"},
                                                  {"RELNET_MANIFEST", "/env/m.tsv"},
                                                  {"RELNET_PORT", "9001"}};
  const EnvLookup lookup = [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  ServiceOptions flags;
  flags.models_dir = "/flag/models";
  flags.port = 7000;
  const ServiceOptions a = ApplyEnvironment(flags, true, false, false, true, lookup);
  EXPECT_EQ(a.models_dir, "/flag/models");
  EXPECT_EQ(a.features_dir, "/env/features");
  EXPECT_EQ(a.manifest, "/env/m.tsv");
  EXPECT_EQ(a.port, 7000);
  const ServiceOptions b = ApplyEnvironment(ServiceOptions{}, false, false, false, false, lookup);
  EXPECT_EQ(b.models_dir, "/env/models");
  EXPECT_EQ(b.port, 9001);
  const EnvLookup bad = [](const std::string& k) -> std::optional<std::string> {
    if (k == "RELNET_PORT") return "eighty";
    return std::nullopt;
  };
  EXPECT_THROW(ApplyEnvironment(ServiceOptions{}, false, false, false, false, bad), Error);
}

}  // namespace
}  // namespace relnet
