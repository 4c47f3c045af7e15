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

#ifndef RELNET_ADAM_H_
#define RELNET_ADAM_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relnet/error.h"
#include "relnet/tensor.h"

namespace relnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;

  // Zero accumulators shaped like `params`.
  AdamState(std::span<Tensor<T>* const> params, AdamConfig cfg) : config(cfg) {
    for (const Tensor<T>* p : params) {
      first_moment.emplace_back(p->shape());
      second_moment.emplace_back(p->shape());
    }
  }
};

// One bias-corrected Adam update over every tensor in `params`. Returns the
// indices of the tensors that were updated (the update record); tensors that
// are not passed in are never touched.
template <typename T>
std::vector<std::size_t> AdamStep(std::span<Tensor<T>* const> params,
                                  std::span<const Tensor<T>* const> grads,
                                  AdamState<T>& state) {
  Require(params.size() == grads.size() &&
              params.size() == state.first_moment.size(),
          ErrorCode::kShapeMismatch, "adam: parameter/gradient/state count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Require(params[i]->shape() == grads[i]->shape() &&
                params[i]->shape() == state.first_moment[i].shape(),
            ErrorCode::kShapeMismatch, "adam: shape mismatch for tensor " +
                                           std::to_string(i));
    if (!grads[i]->AllFinite()) {
      Fail(ErrorCode::kTrainingDiverged,
           "adam: non-finite gradient in tensor " + std::to_string(i) +
               " at step " + std::to_string(state.step + 1));
    }
  }

  ++state.step;
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = state.config.learning_rate;
  const double eps = state.config.epsilon;

  std::vector<std::size_t> updated;
  updated.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * gj;
      const double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      p[j] = static_cast<T>(static_cast<double>(p[j]) -
                            lr * m_hat / (std::sqrt(v_hat) + eps));
    }
    updated.push_back(i);
  }
  return updated;
}

}  // namespace relnet

#endif  // RELNET_ADAM_H_
