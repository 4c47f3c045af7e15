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

// Mini-batch Adam training with early stopping, shared by experts, the
// standalone segment classifier and the classifier branch.

#ifndef RELNET_TRAINER_H_
#define RELNET_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "relnet/adam.h"
#include "relnet/dataset.h"
#include "relnet/network.h"

namespace relnet {

struct TrainConfig {
  std::size_t batch_size = 100;
  std::size_t patience = 50;
  double min_delta = 0.05;  // absolute validation-loss decrease that counts
  std::size_t max_epochs = 1000;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  AdamConfig adam;
  Padding padding;

  void Validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool improved = false;
};

struct TrainingMetadata {
  bool trained = false;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::quiet_NaN();
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<EpochRecord> history;  // not persisted
};

using EpochCallback = std::function<void(const EpochRecord&, const Trunk<float>&)>;

// What the loop needs to know about a task: the target class of each bag
// and, optionally, constant per-segment aggregation weights for a bag at a
// given padded length (empty span = unit weights).
struct TrainingObjective {
  std::function<std::size_t(std::size_t bag)> target;
  std::function<std::vector<double>(std::size_t bag, const MelSpectrogram& padded)> weights;
};

// Trains `trunk` in place on bags[train] with early stopping on the mean
// validation loss over bags[validation]. On return `trunk` holds the
// best-epoch weights.
TrainingMetadata TrainTrunk(Trunk<float>& trunk, std::span<const Bag> bags,
                            std::span<const std::size_t> train,
                            std::span<const std::size_t> validation,
                            const TrainingObjective& objective, const TrainConfig& config,
                            const EpochCallback& on_epoch = {});

// Splits `bags` into train/validation (stratified by bag label) and trains.
TrainingMetadata TrainTrunkWithSplit(Trunk<float>& trunk, std::span<const Bag> bags,
                                     const TrainingObjective& objective,
                                     const TrainConfig& config,
                                     const EpochCallback& on_epoch = {});

}  // namespace relnet

#endif  // RELNET_TRAINER_H_
