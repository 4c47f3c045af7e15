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

#include "relnet/experiment.h"

#include <cstdio>
#include <sstream>

#include "json_util.h"

namespace relnet {
namespace {

std::vector<std::size_t> TopThree(const std::vector<std::size_t>& ranking) {
  return {ranking.begin(), ranking.begin() + std::min<std::ptrdiff_t>(3, ranking.size())};
}

std::vector<std::size_t> RankDistribution(const ClipDistribution& clip) {
  return TopThree(RankScores(clip.probs));
}

bool SameExperts(const ModelSuite& models) {
  const auto relnet_models = models.relnet.experts().models();
  if (relnet_models.size() != models.experts.size()) return false;
  for (std::size_t i = 0; i < relnet_models.size(); ++i) {
    if (relnet_models[i] != models.experts[i].get()) return false;
  }
  return true;
}

Json TrainConfigToJson(const TrainConfig& t) {
  return Json{{"batch_size", t.batch_size},
              {"patience", t.patience},
              {"min_delta", t.min_delta},
              {"max_epochs", t.max_epochs},
              {"validation_fraction", t.validation_fraction},
              {"learning_rate", t.adam.learning_rate},
              {"padding", PaddingName(t.padding)}};
}

}  // namespace

double PaddingSegmentFraction(const ExpertConfig& config, std::size_t frames,
                              std::size_t target) {
  if (target <= frames) return 0.0;
  const std::size_t segments = config.SegmentCount(target);
  if (segments == 0) return 0.0;
  const std::size_t left = (target - frames) / 2;
  const std::size_t content_end = left + frames;
  const std::size_t span = config.min_frames();
  std::size_t zero = 0;
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t first = config.SegmentStartFrame(k);
    if (first + span <= left || first >= content_end) ++zero;
  }
  return static_cast<double>(zero) / static_cast<double>(segments);
}

std::vector<std::pair<std::string, std::vector<std::vector<std::size_t>>>> EvaluateModels(
    std::span<const Bag> bags, std::span<const std::size_t> test, const ModelSuite& models,
    const Padding& padding) {
  Require(models.experts.size() >= 2, ErrorCode::kInvalidArgument,
          "evaluation needs at least 2 experts");
  const std::size_t classes = models.experts.size();
  Require(models.convnet.num_classes() == classes && models.relnet.num_classes() == classes,
          ErrorCode::kIncompatible, "models disagree on the number of classes");
  for (std::size_t c = 0; c < classes; ++c) {
    Require(models.convnet.class_names()[c] == models.experts[c]->class_name() &&
                models.relnet.class_names()[c] == models.experts[c]->class_name(),
            ErrorCode::kIncompatible,
            "models disagree on the name of class " + std::to_string(c));
  }
  const bool shared_experts = SameExperts(models);
  std::vector<const ExpertModel*> experts;
  std::vector<std::string> names;
  for (const auto& e : models.experts) {
    experts.push_back(e.get());
    names.push_back(e->class_name());
  }

  std::vector<std::string> order = {kConvnetName, kRelnetName};
  for (FusionMode m : kAllFusionModes) order.emplace_back(FusionModeName(m));
  std::vector<std::pair<std::string, std::vector<std::vector<std::size_t>>>> out;
  for (const auto& name : order) out.push_back({name, {}});

  std::size_t batch_max = 0;
  for (std::size_t i : test) batch_max = std::max(batch_max, bags[i].features.frames());
  for (std::size_t i : test) {
    const MelSpectrogram spec = ApplyPadding(bags[i].features, padding, batch_max);
    const ProbabilityMatrix probs = ExpertProbabilities(spec, experts);
    const RelevanceProfile profile = ComputeRelevanceProfile(probs, names);
    out[0].second.push_back(RankDistribution(models.convnet.Forward(spec).clip));
    if (shared_experts) {
      out[1].second.push_back(
          RankDistribution(models.relnet.branch().Forward(spec, profile.relevance).clip));
    } else {
      out[1].second.push_back(RankDistribution(models.relnet.Forward(spec).clip));
    }
    for (std::size_t m = 0; m < kAllFusionModes.size(); ++m) {
      const FusionResult fused = Fuse(probs, kAllFusionModes[m], profile.relevance);
      out[2 + m].second.push_back(TopThree(fused.ranking));
    }
  }
  return out;
}

ExperimentReport RunExperiment(std::span<const Bag> bags, std::span<const std::size_t> test,
                               const ModelSuite& models, std::size_t pad_frames,
                               RankMetric metric) {
  Require(!test.empty(), ErrorCode::kEmpty, "test split is empty");
  ExperimentReport report;
  report.metric = metric;
  report.pad_frames = pad_frames;
  report.class_names = models.convnet.class_names();
  double fraction = 0.0;
  for (std::size_t i : test) {
    report.clip_names.push_back(bags[i].name);
    Require(bags[i].label >= 0 && static_cast<std::size_t>(bags[i].label) <
                                      report.class_names.size(),
            ErrorCode::kInvalidArgument, "test bag '" + bags[i].name + "' has an unknown label");
    report.truths.push_back(static_cast<std::size_t>(bags[i].label));
    Require(bags[i].features.frames() <= pad_frames, ErrorCode::kInvalidArgument,
            "test bag '" + bags[i].name + "' is longer than the padding target");
    fraction += PaddingSegmentFraction(models.convnet.config(), bags[i].features.frames(),
                                       pad_frames);
  }
  report.padding_segment_fraction = fraction / static_cast<double>(test.size());

  const auto padded = EvaluateModels(bags, test, models, Padding::CenterTo(pad_frames));
  const auto unpadded = EvaluateModels(bags, test, models, Padding::None());
  for (std::size_t m = 0; m < padded.size(); ++m) {
    ModelScores s;
    s.model = padded[m].first;
    s.top3_padded = padded[m].second;
    s.top3_unpadded = unpadded[m].second;
    s.padded = MeanTopThree(s.top3_padded, report.truths, metric);
    s.unpadded = MeanTopThree(s.top3_unpadded, report.truths, metric);
    report.models.push_back(std::move(s));
  }
  return report;
}

const ModelScores& ExperimentReport::Find(const std::string& model) const {
  for (const ModelScores& s : models) {
    if (s.model == model) return s;
  }
  Fail(ErrorCode::kNotFound, "report has no model '" + model + "'");
}

std::string ExperimentReport::ToJson() const {
  Json clips = Json::array();
  for (std::size_t i = 0; i < clip_names.size(); ++i) {
    clips.push_back({{"name", clip_names[i]}, {"truth", truths[i]}});
  }
  Json scores = Json::array();
  for (const ModelScores& s : models) {
    scores.push_back({{"name", s.model},
                      {"padded", s.padded},
                      {"unpadded", s.unpadded},
                      {"top3_padded", s.top3_padded},
                      {"top3_unpadded", s.top3_unpadded}});
  }
  Json j{{"format_version", kFormatVersion},
         {"metric", RankMetricName(metric)},
         {"seed", seed},
         {"config", ParseJson(config_json, "report config")},
         {"pad_frames", pad_frames},
         {"padding_segment_fraction", padding_segment_fraction},
         {"class_names", class_names},
         {"clips", clips},
         {"models", scores}};
  return j.dump(1);
}

ExperimentReport ExperimentReport::FromJson(const std::string& text) {
  const std::string what = "experiment report";
  const Json j = ParseJson(text, what);
  const int version = JsonGet<int>(j, "format_version", what);
  if (version > kFormatVersion) {
    Fail(ErrorCode::kVersionMismatch,
         what + ": format version " + std::to_string(version) +
             " is newer than supported version " + std::to_string(kFormatVersion));
  }
  ExperimentReport r;
  const auto metric = JsonGet<std::string>(j, "metric", what);
  r.metric = metric == RankMetricName(RankMetric::kRecallAt3) ? RankMetric::kRecallAt3
                                                                : RankMetric::kMapAt3;
  r.seed = JsonGet<std::uint64_t>(j, "seed", what);
  r.config_json = JsonGet<Json>(j, "config", what).dump();
  r.pad_frames = JsonGet<std::size_t>(j, "pad_frames", what);
  r.padding_segment_fraction = JsonGet<double>(j, "padding_segment_fraction", what);
  r.class_names = JsonGet<std::vector<std::string>>(j, "class_names", what);
  for (const Json& c : JsonGet<Json>(j, "clips", what)) {
    r.clip_names.push_back(JsonGet<std::string>(c, "name", what));
    r.truths.push_back(JsonGet<std::size_t>(c, "truth", what));
  }
  for (const Json& m : JsonGet<Json>(j, "models", what)) {
    ModelScores s;
    s.model = JsonGet<std::string>(m, "name", what);
    s.padded = JsonGet<double>(m, "padded", what);
    s.unpadded = JsonGet<double>(m, "unpadded", what);
    s.top3_padded = JsonGet<std::vector<std::vector<std::size_t>>>(m, "top3_padded", what);
    s.top3_unpadded = JsonGet<std::vector<std::vector<std::size_t>>>(m, "top3_unpadded", what);
    r.models.push_back(std::move(s));
  }
  return r;
}

std::string ExperimentReport::ToTable() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "metric: %s   test clips: %zu   padded to %zu frames "
                "(%.1f%% zero segments)\n",
                std::string(RankMetricName(metric)).c_str(), truths.size(), pad_frames,
                100.0 * padding_segment_fraction);
  os << line;
  std::snprintf(line, sizeof(line), "%-10s %12s %12s %10s\n", "model", "with padding",
                "w/o padding", "gap");
  os << line;
  for (const ModelScores& s : models) {
    std::snprintf(line, sizeof(line), "%-10s %12.3f %12.3f %+10.3f\n", s.model.c_str(),
                  s.padded, s.unpadded, s.gap());
    os << line;
  }
  return os.str();
}

BenchmarkConfig DeskBenchmark() {
  BenchmarkConfig config;
  config.data.event_amplitude = 4.0;
  config.train.adam.learning_rate = 3e-3;
  return config;
}

std::string BenchmarkConfig::ToJson() const {
  Json j{{"seed", seed},
         {"data",
          {{"num_classes", data.num_classes},
           {"bags_per_class", data.bags_per_class},
           {"segments_per_bag", data.segments_per_bag},
           {"min_events", data.min_events},
           {"max_events", data.max_events},
           {"noise_level", data.noise_level},
           {"event_amplitude", data.event_amplitude},
           {"bins", data.bins},
           {"covered_bins", data.covered_bins}}},
         {"model", ConfigToJson(model)},
         {"train", TrainConfigToJson(train)},
         {"test_fraction", test_fraction},
         {"pad_frames", pad_frames},
         {"pad_training", pad_training},
         {"pad_expert_training", pad_expert_training},
         {"metric", RankMetricName(metric)}};
  return j.dump();
}

BenchmarkResult RunSyntheticBenchmark(const BenchmarkConfig& config,
                                      const ProgressCallback& progress) {
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  SyntheticSpec spec = config.data;
  spec.seed = MixSeed(config.seed, 1);
  spec.segmentation = config.model;
  ExpertConfig model = config.model;
  model.seed = MixSeed(config.seed, 2);
  TrainConfig train = config.train;
  train.seed = MixSeed(config.seed, 3);
  train.padding = config.pad_training ? Padding::CenterTo(config.pad_frames) : Padding::None();
  Require(config.pad_frames >= spec.frames(), ErrorCode::kInvalidArgument,
          "pad_frames " + std::to_string(config.pad_frames) + " is shorter than the " +
              std::to_string(spec.frames()) + "-frame synthetic clips");

  BenchmarkResult result;
  say("generating synthetic data");
  result.data = GenerateSynthetic(spec);
  std::vector<int> labels;
  for (const Bag& b : result.data.bags) labels.push_back(b.label);
  result.split = StratifiedSplit(labels, {1.0 - config.test_fraction, 0.0, config.test_fraction},
                                 MixSeed(config.seed, 4));
  std::vector<Bag> train_bags;
  for (std::size_t i : result.split.train) train_bags.push_back(result.data.bags[i]);

  say("training " + std::to_string(spec.num_classes) + " experts");
  TrainConfig expert_train = train;
  expert_train.padding =
      config.pad_expert_training ? Padding::CenterTo(config.pad_frames) : Padding::None();
  std::vector<ExpertModel> experts =
      TrainExperts(train_bags, result.data.class_names, model, expert_train, config.threads);
  for (ExpertModel& e : experts) {
    result.models.experts.push_back(std::make_shared<const ExpertModel>(std::move(e)));
  }
  const ExpertSet set(result.models.experts);

  say("training CONVNET");
  result.models.convnet = TrainSegmentClassifier(train_bags, result.data.class_names, model, train);
  say("training RELNET");
  result.models.relnet = TrainRelnet(train_bags, set, model, train);

  say("evaluating");
  result.report = RunExperiment(result.data.bags, result.split.test, result.models,
                                config.pad_frames, config.metric);
  result.report.seed = config.seed;
  result.report.config_json = config.ToJson();
  return result;
}

}  // namespace relnet
