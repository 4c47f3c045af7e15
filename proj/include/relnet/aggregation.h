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

#ifndef RELNET_AGGREGATION_H_
#define RELNET_AGGREGATION_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "relnet/layers.h"
#include "relnet/tensor.h"

namespace relnet {

struct ClipDistribution {
  std::vector<double> probs;
  bool degenerate = false;  // all weighted scores were ~0; probs is uniform
};

inline constexpr double kDegenerateScore = 1e-12;

// Clip-level distribution from per-segment class probabilities q [S x C]:
// score_c = sum_k w_k q[k][c], normalised over c. Empty `weights` means
// unit weights, which is plain sum-then-normalise aggregation.
template <typename T>
ClipDistribution AggregateSegments(const Tensor<T>& q, std::span<const double> weights = {}) {
  const std::size_t segments = q.dim(0);
  const std::size_t classes = q.dim(1);
  Require(weights.empty() || weights.size() == segments, ErrorCode::kInternal,
          "segment weight count does not match segment count");
  ClipDistribution out;
  out.probs.assign(classes, 0.0);
  for (std::size_t k = 0; k < segments; ++k) {
    const double w = weights.empty() ? 1.0 : weights[k];
    for (std::size_t c = 0; c < classes; ++c) out.probs[c] += w * static_cast<double>(q(k, c));
  }
  double total = 0.0;
  for (double s : out.probs) total += s;
  if (!(total > kDegenerateScore)) {
    std::fill(out.probs.begin(), out.probs.end(), 1.0 / static_cast<double>(classes));
    out.degenerate = true;
    return out;
  }
  for (double& p : out.probs) p /= total;
  return out;
}

// Cross-entropy of the aggregated distribution against `target`. When
// `grad_q` is non-null it is overwritten with dL/dq.
template <typename T>
double AggregateCrossEntropy(const Tensor<T>& q, std::span<const double> weights,
                             std::size_t target, Tensor<T>* grad_q,
                             ClipDistribution* distribution = nullptr) {
  const std::size_t segments = q.dim(0);
  const std::size_t classes = q.dim(1);
  std::vector<double> score(classes, 0.0);
  for (std::size_t k = 0; k < segments; ++k) {
    const double w = weights.empty() ? 1.0 : weights[k];
    for (std::size_t c = 0; c < classes; ++c) score[c] += w * static_cast<double>(q(k, c));
  }
  ClipDistribution dist = AggregateSegments(q, weights);
  const double loss = CrossEntropyLoss<double>(dist.probs, target);
  if (grad_q != nullptr) {
    *grad_q = Tensor<T>(q.shape());
    double total = 0.0;
    for (double s : score) total += s;
    const double p = dist.probs[target];
    if (!dist.degenerate && p > kProbabilityFloor) {
      for (std::size_t k = 0; k < segments; ++k) {
        const double w = weights.empty() ? 1.0 : weights[k];
        for (std::size_t c = 0; c < classes; ++c) {
          double g = w / total;
          if (c == target) g -= w / score[target];
          (*grad_q)(k, c) = static_cast<T>(g);
        }
      }
    }
  }
  if (distribution != nullptr) *distribution = std::move(dist);
  return loss;
}

}  // namespace relnet

#endif  // RELNET_AGGREGATION_H_
