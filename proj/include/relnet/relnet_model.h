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

// The N-way segment classifier (standalone it is the CONVNET baseline) and
// the two-branch model that weights its per-segment outputs by the R_max
// relevance of a frozen expert set.

#ifndef RELNET_RELNET_MODEL_H_
#define RELNET_RELNET_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relnet/aggregation.h"
#include "relnet/dataset.h"
#include "relnet/network.h"
#include "relnet/relevance.h"
#include "relnet/trainer.h"

namespace relnet {

struct ClassifierOutput {
  ClipDistribution clip;
  Tensor<float> segment_probs;  // Q [S x N]
};

// Per-segment N-way softmax on the shared trunk.
class SegmentClassifier {
 public:
  SegmentClassifier() = default;
  SegmentClassifier(const ExpertConfig& config, std::vector<std::string> class_names);
  SegmentClassifier(Trunk<float> trunk, std::vector<std::string> class_names,
                    TrainingMetadata metadata);

  // Empty `weights` = unit weights (mean aggregation).
  ClassifierOutput Forward(const MelSpectrogram& spec,
                           std::span<const double> weights = {}) const;

  std::size_t num_classes() const { return class_names_.size(); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const ExpertConfig& config() const { return trunk_.config; }
  const TrainingMetadata& metadata() const { return metadata_; }
  const Trunk<float>& trunk() const { return trunk_; }

 private:
  Trunk<float> trunk_;
  std::vector<std::string> class_names_;
  TrainingMetadata metadata_;
};

// Bag labels must be class indices in [0, class_names.size()).
SegmentClassifier TrainSegmentClassifier(std::span<const Bag> bags,
                                         std::vector<std::string> class_names,
                                         const ExpertConfig& config,
                                         const TrainConfig& train_config,
                                         const EpochCallback& on_epoch = {});

struct RelnetOutput {
  ClipDistribution clip;
  Tensor<float> segment_probs;  // Q [S x N]
  RelevanceProfile relevance;   // R_max(k) from the relevance branch
};

class RelnetModel {
 public:
  RelnetModel() = default;
  RelnetModel(ExpertSet experts, SegmentClassifier branch);

  RelnetOutput Forward(const MelSpectrogram& spec) const;

  const ExpertSet& experts() const { return experts_; }
  const SegmentClassifier& branch() const { return branch_; }
  const std::vector<std::string>& class_names() const { return branch_.class_names(); }
  std::size_t num_classes() const { return branch_.num_classes(); }

 private:
  ExpertSet experts_;
  SegmentClassifier branch_;
};

// Stage 2: experts stay frozen, only the classifier branch is fitted. The
// expert set's order defines the class order; bag label c must equal the
// class id of expert c.
RelnetModel TrainRelnet(std::span<const Bag> bags, const ExpertSet& experts,
                        const ExpertConfig& branch_config, const TrainConfig& train_config,
                        const EpochCallback& on_epoch = {});

std::vector<std::uint8_t> SerializeClassifier(const SegmentClassifier& model);
SegmentClassifier DeserializeClassifier(std::span<const std::uint8_t> bytes,
                                        const std::string& what);
void SaveClassifier(const SegmentClassifier& model, const std::filesystem::path& path);
SegmentClassifier LoadClassifier(const std::filesystem::path& path);

// Experts are referenced by checksum and resolved against `available` on load.
std::vector<std::uint8_t> SerializeRelnet(const RelnetModel& model);
RelnetModel DeserializeRelnet(std::span<const std::uint8_t> bytes,
                              std::span<const std::shared_ptr<const ExpertModel>> available,
                              const std::string& what);
void SaveRelnet(const RelnetModel& model, const std::filesystem::path& path);
RelnetModel LoadRelnet(const std::filesystem::path& path,
                       std::span<const std::shared_ptr<const ExpertModel>> available);

// Kind recorded in a model file's manifest ("expert", "convnet", "relnet").
std::string ModelFileKind(const std::filesystem::path& path);

}  // namespace relnet

#endif  // RELNET_RELNET_MODEL_H_
