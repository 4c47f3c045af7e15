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

// relnet: data preparation, training, inspection and serving.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relnet/binary_io.h"
#include "relnet/dataset.h"
#include "relnet/experiment.h"
#include "relnet/expert.h"
#include "relnet/features.h"
#include "relnet/fusion.h"
#include "relnet/plot.h"
#include "relnet/relevance.h"
#include "relnet/relnet_model.h"
#include "relnet/service.h"

namespace fs = std::filesystem;
using namespace relnet;

namespace {

struct TrainFlags {
  std::size_t hidden_units = 100;
  std::size_t batch_size = 100;
  std::size_t patience = 50;
  double min_delta = 0.05;
  std::size_t max_epochs = 1000;
  double learning_rate = 1e-3;
  std::size_t pad_frames = 0;  // 0 = no padding
  std::uint64_t seed = 0;
  bool full_coverage = false;

  void Register(CLI::App* app) {
    app->add_option("--hidden-units", hidden_units, "Dense layer width (HN)");
    app->add_option("--batch-size", batch_size, "Clips per mini-batch");
    app->add_option("--patience", patience, "Early-stopping patience in epochs");
    app->add_option("--min-delta", min_delta, "Minimal validation-loss improvement");
    app->add_option("--max-epochs", max_epochs, "Epoch limit");
    app->add_option("--learning-rate", learning_rate, "Adam step size");
    app->add_option("--pad-frames", pad_frames, "Centre-pad every clip to this many frames");
    app->add_option("--seed", seed, "Random seed");
    app->add_flag("--full-coverage", full_coverage, "Use bands 20/40/68 covering all 128 bins");
  }

  ExpertConfig Model() const {
    ExpertConfig c;
    c.hidden_units = hidden_units;
    c.seed = seed;
    if (full_coverage) c.bands = BandSplit::FullCoverage();
    return c;
  }

  TrainConfig Train() const {
    TrainConfig t;
    t.batch_size = batch_size;
    t.patience = patience;
    t.min_delta = min_delta;
    t.max_epochs = max_epochs;
    t.adam.learning_rate = learning_rate;
    t.seed = seed;
    t.padding = pad_frames > 0 ? Padding::CenterTo(pad_frames) : Padding::None();
    return t;
  }
};

struct DataFlags {
  std::string manifest;
  std::string features_dir;

  void Register(CLI::App* app) {
    app->add_option("--manifest", manifest, "Manifest (path, label[, verified])")->required();
    app->add_option("--features-dir", features_dir, "Directory of cached .feat files");
  }

  Manifest LoadManifestFile() const { return LoadManifest(manifest); }
};

EpochCallback Progress(const std::string& what, bool verbose) {
  if (!verbose) return {};
  return [what](const EpochRecord& r, const Trunk<float>&) {
    std::fprintf(stderr, "%s epoch %zu train %.4f val %.4f%s\n", what.c_str(), r.epoch,
                 r.train_loss, r.validation_loss, r.improved ? " *" : "");
  };
}

std::vector<std::shared_ptr<const ExpertModel>> LoadExpertFiles(
    const std::vector<std::string>& paths) {
  std::vector<std::shared_ptr<const ExpertModel>> out;
  for (const auto& p : paths) out.push_back(std::make_shared<const ExpertModel>(LoadExpert(p)));
  return out;
}

std::vector<std::shared_ptr<const ExpertModel>> LoadExpertDir(const fs::path& dir) {
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".expert") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  auto experts = LoadExpertFiles(paths);
  std::sort(experts.begin(), experts.end(),
            [](const auto& a, const auto& b) { return a->class_id() < b->class_id(); });
  return experts;
}

MelSpectrogram LoadClipArg(const std::string& path) {
  const fs::path p(path);
  if (p.extension() == ".feat") return ReadFeatureCache(p);
  return ComputeMelSpectrogram(ReadWav(p));
}

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void PrintRanking(const std::vector<double>& scores, const std::vector<std::string>& names) {
  const auto ranking = RankScores(scores);
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    std::printf("%zu\t%s\t%.6f\n", r + 1, names[ranking[r]].c_str(), scores[ranking[r]]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relevance-weighted weak-label audio classification toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log per-epoch progress to stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
  SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", spec.num_classes);
  synth->add_option("--bags-per-class", spec.bags_per_class);
  synth->add_option("--segments", spec.segments_per_bag);
  synth->add_option("--min-events", spec.min_events);
  synth->add_option("--max-events", spec.max_events);
  synth->add_option("--noise", spec.noise_level, "Mean background power");
  synth->add_option("--amplitude", spec.event_amplitude, "Event power above background");
  synth->add_option("--seed", spec.seed);

  // extract
  auto* extract = app.add_subcommand("extract", "Compute Mel features for every manifest clip");
  DataFlags extract_data;
  std::string extract_out;
  extract_data.Register(extract);
  extract->add_option("--out", extract_out, "Feature cache directory")->required();

  // train-experts
  auto* train_experts = app.add_subcommand("train-experts", "Train one-vs-all experts");
  DataFlags te_data;
  TrainFlags te_flags;
  std::string te_out;
  std::size_t te_threads = 1;
  te_data.Register(train_experts);
  te_flags.Register(train_experts);
  train_experts->add_option("--out", te_out, "Output directory for <class>.expert")->required();
  train_experts->add_option("--threads", te_threads, "Experts trained concurrently");

  // train-convnet
  auto* train_convnet = app.add_subcommand("train-convnet", "Train the N-way segment classifier");
  DataFlags tc_data;
  TrainFlags tc_flags;
  std::string tc_out;
  tc_data.Register(train_convnet);
  tc_flags.Register(train_convnet);
  train_convnet->add_option("--out", tc_out, "Output .convnet file")->required();

  // train-relnet
  auto* train_relnet = app.add_subcommand("train-relnet", "Train the classifier branch");
  DataFlags tr_data;
  TrainFlags tr_flags;
  std::string tr_out, tr_experts;
  tr_data.Register(train_relnet);
  tr_flags.Register(train_relnet);
  train_relnet->add_option("--experts-dir", tr_experts, "Directory of .expert files")->required();
  train_relnet->add_option("--out", tr_out, "Output .relnet file")->required();

  // relevance
  auto* relevance = app.add_subcommand("relevance", "Relevance profile of one clip");
  std::string rel_clip, rel_out;
  std::vector<std::string> rel_experts;
  bool rel_literal = false;
  relevance->add_option("--clip", rel_clip, "WAV or .feat file")->required();
  relevance->add_option("--experts", rel_experts, ".expert files (>= 2)")->required();
  relevance->add_option("--out", rel_out, "Write the TSV here instead of stdout");
  relevance->add_flag("--literal", rel_literal, "Entropy on raw probabilities (comparison only)");

  // classify
  auto* classify = app.add_subcommand("classify", "Rank classes for one clip");
  std::string cl_clip, cl_model, cl_fusion, cl_experts_dir;
  std::vector<std::string> cl_experts;
  classify->add_option("--clip", cl_clip, "WAV or .feat file")->required();
  classify->add_option("--model", cl_model, ".relnet or .convnet file");
  classify->add_option("--experts-dir", cl_experts_dir, "Experts referenced by a .relnet file");
  classify->add_option("--fusion", cl_fusion, "MV, SUM, PROD or RV");
  classify->add_option("--experts", cl_experts, ".expert files for fusion");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Padded/unpadded MAP@3 of all models");
  DataFlags ev_data;
  std::string ev_models, ev_report, ev_relnet = "relnet.relnet", ev_convnet = "convnet.convnet";
  std::size_t ev_pad = 1200;
  double ev_test_fraction = 0.0;
  std::uint64_t ev_seed = 0;
  bool ev_recall = false;
  ev_data.Register(evaluate);
  evaluate->add_option("--models-dir", ev_models, "Directory with experts and models")
      ->required();
  evaluate->add_option("--relnet", ev_relnet, "RELNET file name inside --models-dir");
  evaluate->add_option("--convnet", ev_convnet, "CONVNET file name inside --models-dir");
  evaluate->add_option("--pad-frames", ev_pad, "Global padding target t");
  evaluate->add_option("--test-fraction", ev_test_fraction,
                       "Evaluate a stratified fraction (0 = every clip)");
  evaluate->add_option("--seed", ev_seed, "Split seed");
  evaluate->add_option("--report", ev_report, "Write the JSON report here");
  evaluate->add_flag("--recall", ev_recall, "Score recall@3 instead of MAP@3");

  // plot
  auto* plot = app.add_subcommand("plot", "Render relevance profiles to SVG");
  std::vector<std::string> plot_profiles, plot_labels;
  std::string plot_out, plot_title, plot_mask;
  plot->add_option("--profile", plot_profiles, "Profile TSV (one or two)")->required();
  plot->add_option("--label", plot_labels, "Legend label per profile");
  plot->add_option("--mask", plot_mask, "Event mask file to shade");
  plot->add_option("--title", plot_title);
  plot->add_option("--out", plot_out, "Output .svg")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Read-only HTTP service");
  ServiceOptions so;
  std::string so_models, so_features, so_manifest;
  auto* o_models = serve->add_option("--models-dir", so_models);
  auto* o_features = serve->add_option("--features-dir", so_features);
  auto* o_manifest = serve->add_option("--manifest", so_manifest);
  auto* o_port = serve->add_option("--port", so.port);
  serve->add_option("--host", so.host);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "End-to-end synthetic benchmark");
  BenchmarkConfig bc = DeskBenchmark();
  std::string bench_out;
  bool bench_recall = false;
  bench->add_option("--out", bench_out, "Directory for models and report.json");
  bench->add_option("--pad-frames", bc.pad_frames, "Global padding target t");
  bench->add_option("--noise", bc.data.noise_level);
  bench->add_option("--amplitude", bc.data.event_amplitude);
  bench->add_option("--min-events", bc.data.min_events);
  bench->add_option("--max-events", bc.data.max_events);
  bench->add_option("--bags-per-class", bc.data.bags_per_class);
  bench->add_option("--hidden-units", bc.model.hidden_units);
  bench->add_option("--max-epochs", bc.train.max_epochs);
  bench->add_option("--patience", bc.train.patience);
  bench->add_option("--min-delta", bc.train.min_delta);
  bench->add_option("--learning-rate", bc.train.adam.learning_rate);
  bench->add_option("--threads", bc.threads);
  bench->add_option("--seed", bc.seed);
  bench->add_flag("--recall", bench_recall);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const SyntheticDataset data = GenerateSynthetic(spec);
      WriteSyntheticDataset(synth_out, data);
      std::printf("wrote %zu bags to %s (event separability %.3f)\n", data.bags.size(),
                  synth_out.c_str(), data.separability_accuracy);
    } else if (*extract) {
      const Manifest manifest = extract_data.LoadManifestFile();
      fs::create_directories(extract_out);
      for (const auto& r : manifest.records) {
        const auto source = manifest.Resolve(r);
        WriteFeatureCache(fs::path(extract_out) / (source.stem().string() + ".feat"),
                          LoadClipFeatures(manifest, r, {}));
      }
      std::printf("extracted %zu clips\n", manifest.records.size());
    } else if (*train_experts) {
      const Manifest manifest = te_data.LoadManifestFile();
      const std::vector<Bag> bags = LoadBags(manifest, te_data.features_dir);
      fs::create_directories(te_out);
      const auto experts = TrainExperts(bags, manifest.vocabulary, te_flags.Model(),
                                        te_flags.Train(), te_threads);
      for (const auto& e : experts) {
        SaveExpert(e, fs::path(te_out) / (e.class_name() + ".expert"));
        std::printf("%s: %zu epochs, best %zu, val loss %.4f\n", e.class_name().c_str(),
                    e.metadata().epochs_run, e.metadata().best_epoch,
                    e.metadata().best_validation_loss);
      }
    } else if (*train_convnet) {
      const Manifest manifest = tc_data.LoadManifestFile();
      const std::vector<Bag> bags = LoadBags(manifest, tc_data.features_dir);
      const SegmentClassifier model =
          TrainSegmentClassifier(bags, manifest.vocabulary, tc_flags.Model(), tc_flags.Train(),
                                 Progress("convnet", verbose));
      SaveClassifier(model, tc_out);
      std::printf("convnet: %zu epochs, best %zu\n", model.metadata().epochs_run,
                  model.metadata().best_epoch);
    } else if (*train_relnet) {
      const Manifest manifest = tr_data.LoadManifestFile();
      const std::vector<Bag> bags = LoadBags(manifest, tr_data.features_dir);
      const ExpertSet experts(LoadExpertDir(tr_experts));
      const RelnetModel model = TrainRelnet(bags, experts, tr_flags.Model(), tr_flags.Train(),
                                            Progress("relnet", verbose));
      SaveRelnet(model, tr_out);
      std::printf("relnet: %zu epochs, best %zu\n", model.branch().metadata().epochs_run,
                  model.branch().metadata().best_epoch);
    } else if (*relevance) {
      const MelSpectrogram clip = LoadClipArg(rel_clip);
      const auto models = LoadExpertFiles(rel_experts);
      std::vector<const ExpertModel*> ptrs;
      std::vector<std::string> names;
      for (const auto& m : models) {
        ptrs.push_back(m.get());
        names.push_back(m->class_name());
      }
      const RelevanceProfile profile = ComputeRelevanceProfile(
          ExpertProbabilities(clip, ptrs), names,
          rel_literal ? EntropyMode::kLiteral : EntropyMode::kNormalized);
      if (rel_out.empty()) {
        std::cout << ProfileToTsv(profile);
      } else {
        WriteProfileTsv(rel_out, profile);
      }
    } else if (*classify) {
      const MelSpectrogram clip = LoadClipArg(cl_clip);
      if (!cl_model.empty()) {
        if (ModelFileKind(cl_model) == "relnet") {
          Require(!cl_experts_dir.empty(), ErrorCode::kInvalidArgument,
                  "--experts-dir is required for a .relnet model");
          const auto available = LoadExpertDir(cl_experts_dir);
          const RelnetModel model = LoadRelnet(cl_model, available);
          PrintRanking(model.Forward(clip).clip.probs, model.class_names());
        } else {
          const SegmentClassifier model = LoadClassifier(cl_model);
          PrintRanking(model.Forward(clip).clip.probs, model.class_names());
        }
      } else {
        Require(!cl_fusion.empty(), ErrorCode::kInvalidArgument,
                "give --model or --fusion with --experts");
        const FusionMode mode = ParseFusionMode(cl_fusion);
        const auto models = LoadExpertFiles(cl_experts);
        std::vector<const ExpertModel*> ptrs;
        std::vector<std::string> names;
        for (const auto& m : models) {
          ptrs.push_back(m.get());
          names.push_back(m->class_name());
        }
        const ProbabilityMatrix probs = ExpertProbabilities(clip, ptrs);
        std::vector<double> rel;
        if (mode == FusionMode::kRV) rel = ComputeRelevanceProfile(probs, names).relevance;
        PrintRanking(Fuse(probs, mode, rel).scores, names);
      }
    } else if (*evaluate) {
      const Manifest manifest = ev_data.LoadManifestFile();
      const std::vector<Bag> bags = LoadBags(manifest, ev_data.features_dir);
      ModelSuite suite;
      suite.experts = LoadExpertDir(ev_models);
      suite.convnet = LoadClassifier(fs::path(ev_models) / ev_convnet);
      suite.relnet = LoadRelnet(fs::path(ev_models) / ev_relnet, suite.experts);
      std::vector<std::size_t> test;
      if (ev_test_fraction > 0.0) {
        test = StratifiedSplit(manifest.Labels(), {1.0 - ev_test_fraction, 0.0, ev_test_fraction},
                               ev_seed)
                   .test;
      } else {
        for (std::size_t i = 0; i < bags.size(); ++i) test.push_back(i);
      }
      ExperimentReport report =
          RunExperiment(bags, test, suite, ev_pad,
                        ev_recall ? RankMetric::kRecallAt3 : RankMetric::kMapAt3);
      report.seed = ev_seed;
      std::cout << report.ToTable();
      if (!ev_report.empty()) WriteText(ev_report, report.ToJson());
    } else if (*plot) {
      Require(plot_profiles.size() <= 2, ErrorCode::kInvalidArgument,
              "at most two profiles can be compared");
      std::vector<PlotCurve> curves;
      for (std::size_t i = 0; i < plot_profiles.size(); ++i) {
        curves.push_back({i < plot_labels.size() ? plot_labels[i]
                                                 : fs::path(plot_profiles[i]).stem().string(),
                          ReadProfileTsv(plot_profiles[i])});
      }
      std::vector<std::uint8_t> mask;
      if (!plot_mask.empty()) {
        const auto bytes = ReadFileBytes(plot_mask);
        mask = MaskFromString(std::string(bytes.begin(), bytes.end()));
      }
      PlotOptions options;
      options.title = plot_title;
      options.mask = mask;
      WriteText(plot_out, RenderRelevanceSvg(curves, options));
    } else if (*serve) {
      so.models_dir = so_models;
      so.features_dir = so_features;
      so.manifest = so_manifest;
      so = ApplyEnvironment(so, o_models->count() > 0, o_features->count() > 0,
                            o_manifest->count() > 0, o_port->count() > 0, ProcessEnv);
      auto catalog = std::make_shared<const SessionCatalog>(SessionCatalog::Load(so));
      std::fprintf(stderr, "loaded %zu clips, %zu experts, %zu models\n",
                   catalog->clips().size(), catalog->experts().size(),
                   catalog->models().size());
      const ServiceHandler handler(catalog);
      RunServer(handler, so.host, so.port, [&](int port) {
        std::fprintf(stderr, "listening on http://%s:%d\n", so.host.c_str(), port);
      });
    } else if (*bench) {
      bc.metric = bench_recall ? RankMetric::kRecallAt3 : RankMetric::kMapAt3;
      const auto start = std::chrono::steady_clock::now();
      const BenchmarkResult result = RunSyntheticBenchmark(bc, [&](const std::string& msg) {
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::fprintf(stderr, "[%7.1fs] %s\n", s, msg.c_str());
      });
      std::printf("event separability: %.3f\n", result.data.separability_accuracy);
      for (const auto& e : result.models.experts) {
        std::printf("expert %s: %zu epochs (best %zu)\n", e->class_name().c_str(),
                    e->metadata().epochs_run, e->metadata().best_epoch);
      }
      std::printf("convnet: %zu epochs (best %zu)\nrelnet: %zu epochs (best %zu)\n",
                  result.models.convnet.metadata().epochs_run,
                  result.models.convnet.metadata().best_epoch,
                  result.models.relnet.branch().metadata().epochs_run,
                  result.models.relnet.branch().metadata().best_epoch);
      std::cout << result.report.ToTable();
      if (!bench_out.empty()) {
        const fs::path out(bench_out);
        fs::create_directories(out);
        for (const auto& e : result.models.experts) {
          SaveExpert(*e, out / (e->class_name() + ".expert"));
        }
        SaveClassifier(result.models.convnet, out / "convnet.convnet");
        SaveRelnet(result.models.relnet, out / "relnet.relnet");
        WriteText(out / "report.json", result.report.ToJson());
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(ErrorCodeName(e.code())).c_str(),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
