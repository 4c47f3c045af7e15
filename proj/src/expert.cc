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

#include "relnet/expert.h"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "json_util.h"
#include "relnet/binary_io.h"
#include "relnet/model_io.h"

namespace relnet {
namespace {

constexpr std::string_view kModelMagic = "RLNM";

}  // namespace

ExpertModel::ExpertModel(const ExpertConfig& config, int class_id, std::string class_name)
    : trunk_(Trunk<float>::Initialize(config, 2, config.seed)),
      class_id_(class_id),
      class_name_(std::move(class_name)) {}

ExpertModel::ExpertModel(Trunk<float> trunk, int class_id, std::string class_name,
                         TrainingMetadata metadata)
    : trunk_(std::move(trunk)),
      class_id_(class_id),
      class_name_(std::move(class_name)),
      metadata_(std::move(metadata)) {
  Require(trunk_.outputs() == 2, ErrorCode::kShapeMismatch,
          "an expert needs a two-way output head");
}

ExpertOutput ExpertModel::Forward(const MelSpectrogram& spec) const {
  TrunkCache<float> cache = TrunkForward(trunk_, spec.values);
  ExpertOutput out;
  const ClipDistribution clip = AggregateSegments(cache.probs);
  out.clip_probs = {clip.probs[0], clip.probs[1]};
  out.segment_probs = std::move(cache.probs);
  return out;
}

std::vector<float> ExpertModel::PositiveProb(const MelSpectrogram& spec) const {
  const TrunkCache<float> cache = TrunkForward(trunk_, spec.values);
  std::vector<float> out(cache.segments());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = cache.probs(k, kPositiveIndex);
  return out;
}

std::uint32_t ExpertModel::Checksum() const { return EncodedChecksum(SerializeExpert(*this)); }

ExpertModel TrainExpert(std::span<const Bag> bags, int class_id, const std::string& class_name,
                        const ExpertConfig& config, const TrainConfig& train_config,
                        const EpochCallback& on_epoch) {
  Require(!bags.empty(), ErrorCode::kEmpty, "no bags to train expert '" + class_name + "'");
  std::size_t positives = 0;
  for (const Bag& b : bags) positives += b.label == class_id ? 1 : 0;
  Require(positives > 0 && positives < bags.size(), ErrorCode::kInvalidArgument,
          "expert '" + class_name + "' needs positive and negative clips; got " +
              std::to_string(positives) + " positive of " + std::to_string(bags.size()));
  ExpertConfig cfg = config;
  cfg.seed = MixSeed(config.seed, static_cast<std::uint64_t>(class_id));
  TrainConfig tc = train_config;
  tc.seed = MixSeed(train_config.seed, static_cast<std::uint64_t>(class_id));
  Trunk<float> trunk = Trunk<float>::Initialize(cfg, 2, cfg.seed);
  TrainingObjective objective;
  objective.target = [&](std::size_t i) { return ExpertTarget(bags[i].label, class_id); };
  TrainingMetadata meta = TrainTrunkWithSplit(trunk, bags, objective, tc, on_epoch);
  return ExpertModel(std::move(trunk), class_id, class_name, std::move(meta));
}

std::vector<ExpertModel> TrainExperts(std::span<const Bag> bags,
                                      std::span<const std::string> class_names,
                                      const ExpertConfig& config,
                                      const TrainConfig& train_config, std::size_t threads) {
  const std::size_t n = class_names.size();
  std::vector<ExpertModel> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t c = next++; c < n; c = next++) {
      try {
        out[c] = TrainExpert(bags, static_cast<int>(c), class_names[c], config, train_config);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<std::uint8_t> SerializeExpert(const ExpertModel& model) {
  ModelFile file;
  file.version = kModelFormatVersion;
  Json manifest{{"kind", "expert"},
                {"class_id", model.class_id()},
                {"class_name", model.class_name()},
                {"config", ConfigToJson(model.config())},
                {"training", MetadataToJson(model.metadata())}};
  file.manifest = manifest.dump();
  AppendTrunkBlobs(model.trunk(), "", file.blobs);
  return EncodeModelFile(file, kModelMagic);
}

ExpertModel DeserializeExpert(std::span<const std::uint8_t> bytes, const std::string& what) {
  const ModelFile file = DecodeModelFile(bytes, kModelMagic, kModelFormatVersion, what);
  const Json manifest = ParseJson(file.manifest, what);
  const auto kind = JsonGet<std::string>(manifest, "kind", what);
  Require(kind == "expert", ErrorCode::kCorruptFile,
          what + ": expected an expert model, found '" + kind + "'");
  const ExpertConfig config = ConfigFromJson(JsonGet<Json>(manifest, "config", what));
  Trunk<float> trunk = Trunk<float>::Zeros(config, 2);
  ReadTrunkBlobs(file.blobs, "", trunk, what);
  return ExpertModel(std::move(trunk), JsonGet<int>(manifest, "class_id", what),
                     JsonGet<std::string>(manifest, "class_name", what),
                     MetadataFromJson(JsonGet<Json>(manifest, "training", what)));
}

void SaveExpert(const ExpertModel& model, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeExpert(model));
}

ExpertModel LoadExpert(const std::filesystem::path& path) {
  return DeserializeExpert(ReadFileBytes(path), path.string());
}

}  // namespace relnet
