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

// Central-difference gradient check for the full trunk plus weighted
// aggregation, in double precision.

#ifndef RELNET_TESTS_GRAD_CHECK_H_
#define RELNET_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "relnet/aggregation.h"
#include "relnet/network.h"

namespace relnet::testing {

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // finite difference straddled a ReLU kink
  double max_rel_error = 0.0;
};

inline std::vector<bool> ReluMask(const TrunkCache<double>& cache) {
  std::vector<bool> mask;
  for (const auto& c : cache.conv_out) {
    for (double v : c.data()) mask.push_back(v > 0.0);
  }
  for (double v : cache.hidden.data()) mask.push_back(v > 0.0);
  return mask;
}

inline GradCheckResult CheckTrunkGradient(Trunk<double> trunk, const Tensor<float>& input,
                                          std::span<const double> weights, std::size_t target,
                                          double h = 1e-5) {
  const TrunkCache<double> cache = TrunkForward(trunk, input);
  Tensor<double> grad_q;
  AggregateCrossEntropy(cache.probs, weights, target, &grad_q);
  Trunk<double> grads = Trunk<double>::Zeros(trunk.config, trunk.outputs());
  TrunkBackward(trunk, cache, grad_q, grads);

  GradCheckResult result;
  auto params = trunk.Parameters();
  auto analytic = grads.Parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t]->data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = p[j];
      p[j] = saved + h;
      const TrunkCache<double> plus = TrunkForward(trunk, input);
      const double loss_plus = AggregateCrossEntropy<double>(plus.probs, weights, target, nullptr);
      p[j] = saved - h;
      const TrunkCache<double> minus = TrunkForward(trunk, input);
      const double loss_minus = AggregateCrossEntropy<double>(minus.probs, weights, target, nullptr);
      p[j] = saved;
      if (ReluMask(plus) != ReluMask(minus)) {
        ++result.skipped;
        continue;
      }
      const double numeric = (loss_plus - loss_minus) / (2.0 * h);
      const double a = (*analytic[t])[j];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace relnet::testing

#endif  // RELNET_TESTS_GRAD_CHECK_H_
