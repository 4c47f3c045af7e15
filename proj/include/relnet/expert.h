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

#ifndef RELNET_EXPERT_H_
#define RELNET_EXPERT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relnet/aggregation.h"
#include "relnet/dataset.h"
#include "relnet/network.h"
#include "relnet/trainer.h"

namespace relnet {

// Output column holding the "belongs to the expert's class" probability.
inline constexpr std::size_t kPositiveIndex = 0;

struct ExpertOutput {
  Tensor<float> segment_probs;  // [S x 2]
  std::array<double, 2> clip_probs{};
};

// One-vs-all weak-label classifier for a single class.
class ExpertModel {
 public:
  ExpertModel() = default;
  // Freshly initialised from config.seed.
  ExpertModel(const ExpertConfig& config, int class_id, std::string class_name);
  ExpertModel(Trunk<float> trunk, int class_id, std::string class_name,
              TrainingMetadata metadata);

  ExpertOutput Forward(const MelSpectrogram& spec) const;
  // P_n(k) for every segment k.
  std::vector<float> PositiveProb(const MelSpectrogram& spec) const;

  const ExpertConfig& config() const { return trunk_.config; }
  int class_id() const { return class_id_; }
  const std::string& class_name() const { return class_name_; }
  const TrainingMetadata& metadata() const { return metadata_; }
  const Trunk<float>& trunk() const { return trunk_; }
  Trunk<float>& mutable_trunk() { return trunk_; }

  // CRC32 of the serialized model; identifies the model in RELNET files.
  std::uint32_t Checksum() const;

 private:
  Trunk<float> trunk_;
  int class_id_ = 0;
  std::string class_name_;
  TrainingMetadata metadata_;
};

// Positive target for bags of `class_id`, negative for every other class.
inline std::size_t ExpertTarget(int bag_label, int class_id) {
  return bag_label == class_id ? kPositiveIndex : 1 - kPositiveIndex;
}

ExpertModel TrainExpert(std::span<const Bag> bags, int class_id, const std::string& class_name,
                        const ExpertConfig& config, const TrainConfig& train_config,
                        const EpochCallback& on_epoch = {});

// Trains one expert per class name (class id = index), optionally on
// several threads. Results are independent of the thread count.
std::vector<ExpertModel> TrainExperts(std::span<const Bag> bags,
                                      std::span<const std::string> class_names,
                                      const ExpertConfig& config,
                                      const TrainConfig& train_config, std::size_t threads = 1);

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> SerializeExpert(const ExpertModel& model);
ExpertModel DeserializeExpert(std::span<const std::uint8_t> bytes, const std::string& what);
void SaveExpert(const ExpertModel& model, const std::filesystem::path& path);
ExpertModel LoadExpert(const std::filesystem::path& path);

}  // namespace relnet

#endif  // RELNET_EXPERT_H_
