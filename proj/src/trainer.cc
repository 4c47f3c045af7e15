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

#include "relnet/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relnet/aggregation.h"

namespace relnet {

void TrainConfig::Validate() const {
  Require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  Require(max_epochs >= 1, ErrorCode::kInvalidArgument, "max epochs must be >= 1");
  Require(min_delta >= 0.0, ErrorCode::kInvalidArgument, "min_delta must be >= 0");
  Require(patience >= 1, ErrorCode::kInvalidArgument, "patience must be >= 1");
  Require(validation_fraction > 0.0 && validation_fraction < 1.0,
          ErrorCode::kInvalidArgument, "validation fraction must be in (0, 1)");
  Require(adam.learning_rate > 0.0, ErrorCode::kInvalidArgument,
          "learning rate must be positive");
}

namespace {

// Loss of one (possibly padded) bag; accumulates gradients when `grads` is set.
double BagLoss(const Trunk<float>& trunk, std::size_t bag, const MelSpectrogram& features,
               const TrainingObjective& objective, Trunk<float>* grads, bool* correct) {
  const TrunkCache<float> cache = TrunkForward(trunk, features.values);
  std::vector<double> weights;
  if (objective.weights) {
    weights = objective.weights(bag, features);
  }
  const std::size_t target = objective.target(bag);
  Tensor<float> grad_q;
  ClipDistribution dist;
  const double loss = AggregateCrossEntropy(cache.probs, weights, target,
                                            grads != nullptr ? &grad_q : nullptr, &dist);
  if (grads != nullptr) TrunkBackward(trunk, cache, grad_q, *grads);
  if (correct != nullptr) {
    const auto best = std::max_element(dist.probs.begin(), dist.probs.end());
    *correct = static_cast<std::size_t>(best - dist.probs.begin()) == target;
  }
  return loss;
}

double MeanLoss(const Trunk<float>& trunk, std::span<const Bag> bags,
                std::span<const std::size_t> indices, const TrainingObjective& objective,
                const TrainConfig& config, double* accuracy = nullptr) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  BatchIterator it(bags, std::vector<std::size_t>(indices.begin(), indices.end()),
                   config.batch_size, config.padding);
  Batch batch;
  double total = 0.0;
  std::size_t hits = 0;
  while (it.Next(batch)) {
    for (std::size_t i = 0; i < batch.indices.size(); ++i) {
      bool correct = false;
      total += BagLoss(trunk, batch.indices[i], batch.features[i], objective, nullptr, &correct);
      hits += correct ? 1 : 0;
    }
  }
  if (accuracy != nullptr) *accuracy = static_cast<double>(hits) / indices.size();
  return total / static_cast<double>(indices.size());
}

}  // namespace

TrainingMetadata TrainTrunk(Trunk<float>& trunk, std::span<const Bag> bags,
                            std::span<const std::size_t> train,
                            std::span<const std::size_t> validation,
                            const TrainingObjective& objective, const TrainConfig& config,
                            const EpochCallback& on_epoch) {
  config.Validate();
  Require(!train.empty(), ErrorCode::kEmpty, "training set is empty");
  Require(static_cast<bool>(objective.target), ErrorCode::kInvalidArgument,
          "training objective has no target function");

  TrainingMetadata meta;
  Trunk<float> grads = Trunk<float>::Zeros(trunk.config, trunk.outputs());
  std::vector<Tensor<float>*> params = trunk.Parameters();
  std::vector<Tensor<float>*> grad_ptrs = grads.Parameters();
  std::vector<const Tensor<float>*> grad_views(grad_ptrs.begin(), grad_ptrs.end());
  AdamState<float> adam(params, config.adam);

  Trunk<float> best = trunk;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.begin(), train.end());

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::sort(order.begin(), order.end());
    Rng rng(MixSeed(config.seed, epoch));
    Shuffle(order.begin(), order.end(), rng);

    BatchIterator it(bags, order, config.batch_size, config.padding);
    Batch batch;
    double train_total = 0.0;
    while (it.Next(batch)) {
      grads.SetZero();
      for (std::size_t i = 0; i < batch.indices.size(); ++i) {
        train_total +=
            BagLoss(trunk, batch.indices[i], batch.features[i], objective, &grads, nullptr);
      }
      const float scale = 1.0f / static_cast<float>(batch.indices.size());
      for (Tensor<float>* g : grad_ptrs) {
        for (float& v : g->data()) v *= scale;
      }
      AdamStep<float>(params, grad_views, adam);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = train_total / static_cast<double>(order.size());
    record.validation_loss = validation.empty()
                                 ? record.train_loss
                                 : MeanLoss(trunk, bags, validation, objective, config);
    if (!std::isfinite(record.validation_loss) || !std::isfinite(record.train_loss)) {
      Fail(ErrorCode::kTrainingDiverged,
           "loss became non-finite at epoch " + std::to_string(epoch));
    }
    record.improved = record.validation_loss <= best_loss - config.min_delta;
    if (record.improved) {
      best_loss = record.validation_loss;
      best = trunk;
      meta.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    meta.epochs_run = epoch;
    meta.history.push_back(record);
    if (on_epoch) on_epoch(record, trunk);
    if (since_best >= config.patience) break;
  }

  trunk = std::move(best);
  meta.trained = true;
  meta.best_validation_loss = best_loss;
  MeanLoss(trunk, bags, train, objective, config, &meta.train_accuracy);
  return meta;
}

TrainingMetadata TrainTrunkWithSplit(Trunk<float>& trunk, std::span<const Bag> bags,
                                     const TrainingObjective& objective,
                                     const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  std::vector<int> labels;
  labels.reserve(bags.size());
  for (const Bag& b : bags) labels.push_back(b.label);
  SplitIndices split = StratifiedSplit(
      labels, {1.0 - config.validation_fraction, 0.0, config.validation_fraction},
      MixSeed(config.seed, 0x5A11D));
  // The test part of the generic split serves as validation here.
  split.validation = std::move(split.test);
  return TrainTrunk(trunk, bags, split.train, split.validation, objective, config, on_epoch);
}

}  // namespace relnet
