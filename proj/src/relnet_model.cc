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

#include "relnet/relnet_model.h"

#include <map>
#include <utility>

#include "json_util.h"
#include "relnet/binary_io.h"
#include "relnet/model_io.h"

namespace relnet {
namespace {

constexpr std::string_view kModelMagic = "RLNM";

std::vector<std::size_t> ClassTargets(std::span<const Bag> bags, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  std::vector<std::size_t> targets;
  for (const Bag& b : bags) {
    Require(b.label >= 0 && static_cast<std::size_t>(b.label) < classes,
            ErrorCode::kInvalidArgument,
            "bag '" + b.name + "' has label " + std::to_string(b.label) + " outside [0, " +
                std::to_string(classes) + ")");
    ++counts[static_cast<std::size_t>(b.label)];
    targets.push_back(static_cast<std::size_t>(b.label));
  }
  for (std::size_t c = 0; c < classes; ++c) {
    Require(counts[c] > 0, ErrorCode::kInvalidArgument,
            "class " + std::to_string(c) + " is absent from the training data");
  }
  return targets;
}

Json NamesToJson(const std::vector<std::string>& names) { return Json(names); }

}  // namespace

SegmentClassifier::SegmentClassifier(const ExpertConfig& config,
                                     std::vector<std::string> class_names)
    : trunk_(Trunk<float>::Initialize(config, class_names.size(), config.seed)),
      class_names_(std::move(class_names)) {}

SegmentClassifier::SegmentClassifier(Trunk<float> trunk, std::vector<std::string> class_names,
                                     TrainingMetadata metadata)
    : trunk_(std::move(trunk)),
      class_names_(std::move(class_names)),
      metadata_(std::move(metadata)) {
  Require(trunk_.outputs() == class_names_.size(), ErrorCode::kShapeMismatch,
          "classifier head has " + std::to_string(trunk_.outputs()) + " outputs for " +
              std::to_string(class_names_.size()) + " classes");
}

ClassifierOutput SegmentClassifier::Forward(const MelSpectrogram& spec,
                                            std::span<const double> weights) const {
  TrunkCache<float> cache = TrunkForward(trunk_, spec.values);
  Require(weights.empty() || weights.size() == cache.segments(), ErrorCode::kInternal,
          "relevance branch produced " + std::to_string(weights.size()) +
              " weights for " + std::to_string(cache.segments()) + " classifier segments");
  ClassifierOutput out;
  out.clip = AggregateSegments(cache.probs, weights);
  out.segment_probs = std::move(cache.probs);
  return out;
}

SegmentClassifier TrainSegmentClassifier(std::span<const Bag> bags,
                                         std::vector<std::string> class_names,
                                         const ExpertConfig& config,
                                         const TrainConfig& train_config,
                                         const EpochCallback& on_epoch) {
  Require(class_names.size() >= 2, ErrorCode::kInvalidArgument,
          "a classifier needs at least 2 classes");
  const std::vector<std::size_t> targets = ClassTargets(bags, class_names.size());
  Trunk<float> trunk = Trunk<float>::Initialize(config, class_names.size(), config.seed);
  TrainingObjective objective;
  objective.target = [&](std::size_t i) { return targets[i]; };
  TrainingMetadata meta = TrainTrunkWithSplit(trunk, bags, objective, train_config, on_epoch);
  return SegmentClassifier(std::move(trunk), std::move(class_names), std::move(meta));
}

RelnetModel::RelnetModel(ExpertSet experts, SegmentClassifier branch)
    : experts_(std::move(experts)), branch_(std::move(branch)) {
  Require(experts_.size() >= 2, ErrorCode::kInvalidArgument,
          "the relevance branch needs at least 2 experts");
  Require(branch_.num_classes() == experts_.size(), ErrorCode::kShapeMismatch,
          "classifier head width " + std::to_string(branch_.num_classes()) +
              " does not match expert count " + std::to_string(experts_.size()));
  Require(branch_.config().CompatibleWith(experts_.config()), ErrorCode::kIncompatible,
          "classifier branch and experts segment the input differently");
}

RelnetOutput RelnetModel::Forward(const MelSpectrogram& spec) const {
  RelnetOutput out;
  out.relevance = ComputeRelevanceProfile(spec, experts_);
  ClassifierOutput branch = branch_.Forward(spec, out.relevance.relevance);
  out.clip = std::move(branch.clip);
  out.segment_probs = std::move(branch.segment_probs);
  return out;
}

RelnetModel TrainRelnet(std::span<const Bag> bags, const ExpertSet& experts,
                        const ExpertConfig& branch_config, const TrainConfig& train_config,
                        const EpochCallback& on_epoch) {
  Require(experts.size() >= 2, ErrorCode::kInvalidArgument,
          "the relevance branch needs at least 2 experts");
  for (const ExpertEntry& e : experts.entries()) {
    Require(e.model->metadata().trained, ErrorCode::kInvalidArgument,
            "expert '" + e.class_name + "' is untrained");
  }
  for (std::size_t c = 0; c < experts.size(); ++c) {
    Require(experts[c].class_id == static_cast<int>(c), ErrorCode::kInvalidArgument,
            "expert " + std::to_string(c) + " has class id " +
                std::to_string(experts[c].class_id) + "; experts must be ordered by class id");
  }
  Require(branch_config.CompatibleWith(experts.config()), ErrorCode::kIncompatible,
          "classifier branch and experts segment the input differently");
  const std::vector<std::size_t> targets = ClassTargets(bags, experts.size());

  // Relevance weights are constants of the frozen branch; cache them per
  // (bag, padded length).
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache;
  TrainingObjective objective;
  objective.target = [&](std::size_t i) { return targets[i]; };
  objective.weights = [&](std::size_t i, const MelSpectrogram& padded) {
    const auto key = std::make_pair(i, padded.frames());
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, ComputeRelevanceProfile(padded, experts).relevance).first;
    }
    return it->second;
  };
  Trunk<float> trunk = Trunk<float>::Initialize(branch_config, experts.size(), branch_config.seed);
  TrainingMetadata meta = TrainTrunkWithSplit(trunk, bags, objective, train_config, on_epoch);
  return RelnetModel(experts,
                     SegmentClassifier(std::move(trunk), experts.names(), std::move(meta)));
}

std::vector<std::uint8_t> SerializeClassifier(const SegmentClassifier& model) {
  ModelFile file;
  file.version = kModelFormatVersion;
  Json manifest{{"kind", "convnet"},
                {"class_names", NamesToJson(model.class_names())},
                {"config", ConfigToJson(model.config())},
                {"training", MetadataToJson(model.metadata())}};
  file.manifest = manifest.dump();
  AppendTrunkBlobs(model.trunk(), "", file.blobs);
  return EncodeModelFile(file, kModelMagic);
}

namespace {

SegmentClassifier ReadBranch(const ModelFile& file, const Json& manifest,
                             const std::string& what) {
  const ExpertConfig config = ConfigFromJson(JsonGet<Json>(manifest, "config", what));
  auto names = JsonGet<std::vector<std::string>>(manifest, "class_names", what);
  Require(names.size() >= 2, ErrorCode::kCorruptFile, what + ": fewer than 2 class names");
  Trunk<float> trunk = Trunk<float>::Zeros(config, names.size());
  ReadTrunkBlobs(file.blobs, "", trunk, what);
  return SegmentClassifier(std::move(trunk), std::move(names),
                           MetadataFromJson(JsonGet<Json>(manifest, "training", what)));
}

Json ReadManifest(const ModelFile& file, const std::string& expected_kind,
                  const std::string& what) {
  Json manifest = ParseJson(file.manifest, what);
  const auto kind = JsonGet<std::string>(manifest, "kind", what);
  Require(kind == expected_kind, ErrorCode::kCorruptFile,
          what + ": expected a " + expected_kind + " model, found '" + kind + "'");
  return manifest;
}

}  // namespace

SegmentClassifier DeserializeClassifier(std::span<const std::uint8_t> bytes,
                                        const std::string& what) {
  const ModelFile file = DecodeModelFile(bytes, kModelMagic, kModelFormatVersion, what);
  return ReadBranch(file, ReadManifest(file, "convnet", what), what);
}

void SaveClassifier(const SegmentClassifier& model, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeClassifier(model));
}

SegmentClassifier LoadClassifier(const std::filesystem::path& path) {
  return DeserializeClassifier(ReadFileBytes(path), path.string());
}

std::vector<std::uint8_t> SerializeRelnet(const RelnetModel& model) {
  ModelFile file;
  file.version = kModelFormatVersion;
  Json experts = Json::array();
  for (const ExpertEntry& e : model.experts().entries()) {
    experts.push_back({{"class_id", e.class_id},
                       {"class_name", e.class_name},
                       {"checksum", e.model->Checksum()}});
  }
  const SegmentClassifier& branch = model.branch();
  Json manifest{{"kind", "relnet"},
                {"class_names", NamesToJson(branch.class_names())},
                {"config", ConfigToJson(branch.config())},
                {"training", MetadataToJson(branch.metadata())},
                {"experts", experts}};
  file.manifest = manifest.dump();
  AppendTrunkBlobs(branch.trunk(), "", file.blobs);
  return EncodeModelFile(file, kModelMagic);
}

RelnetModel DeserializeRelnet(std::span<const std::uint8_t> bytes,
                              std::span<const std::shared_ptr<const ExpertModel>> available,
                              const std::string& what) {
  const ModelFile file = DecodeModelFile(bytes, kModelMagic, kModelFormatVersion, what);
  const Json manifest = ReadManifest(file, "relnet", what);
  std::vector<std::pair<std::uint32_t, std::shared_ptr<const ExpertModel>>> by_checksum;
  for (const auto& m : available) by_checksum.emplace_back(m->Checksum(), m);

  std::vector<std::shared_ptr<const ExpertModel>> chosen;
  for (const Json& ref : JsonGet<Json>(manifest, "experts", what)) {
    const auto checksum = JsonGet<std::uint32_t>(ref, "checksum", what);
    const auto name = JsonGet<std::string>(ref, "class_name", what);
    std::shared_ptr<const ExpertModel> found;
    for (const auto& [sum, model] : by_checksum) {
      if (sum == checksum) found = model;
    }
    if (!found) {
      char hex[16];
      std::snprintf(hex, sizeof(hex), "%08x", checksum);
      Fail(ErrorCode::kNotFound, what + ": expert '" + name + "' with checksum " + hex +
                                     " is not among the available experts");
    }
    chosen.push_back(std::move(found));
  }
  return RelnetModel(ExpertSet(std::move(chosen)), ReadBranch(file, manifest, what));
}

void SaveRelnet(const RelnetModel& model, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeRelnet(model));
}

RelnetModel LoadRelnet(const std::filesystem::path& path,
                       std::span<const std::shared_ptr<const ExpertModel>> available) {
  return DeserializeRelnet(ReadFileBytes(path), available, path.string());
}

std::string ModelFileKind(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  const ModelFile file = DecodeModelFile(bytes, kModelMagic, kModelFormatVersion, path.string());
  return JsonGet<std::string>(ParseJson(file.manifest, path.string()), "kind", path.string());
}

}  // namespace relnet
