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

// Forward and backward passes for the four layer types used by the expert
// and classifier networks: valid 1D convolution over time, average pooling
// over time, time-distributed dense layers and a per-row softmax.
//
// Layouts: convolution input is [bins x frames], output [features x frames'].
// Dense layers operate on [segments x features] and are applied to every
// segment independently.

#ifndef RELNET_LAYERS_H_
#define RELNET_LAYERS_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "relnet/error.h"
#include "relnet/tensor.h"

namespace relnet {

enum class Activation { kIdentity, kRelu };

// Lower bound applied to probabilities inside log terms.
inline constexpr double kProbabilityFloor = 1e-12;

template <typename T>
struct Conv1dParams {
  Tensor<T> kernel;  // [out_features x in_bins x window]
  Tensor<T> bias;    // [out_features]

  Conv1dParams() = default;
  Conv1dParams(std::size_t out_features, std::size_t in_bins, std::size_t window)
      : kernel({out_features, in_bins, window}), bias({out_features}) {}

  std::size_t out_features() const { return kernel.dim(0); }
  std::size_t in_bins() const { return kernel.dim(1); }
  std::size_t window() const { return kernel.dim(2); }
};

template <typename T>
struct DenseParams {
  Tensor<T> weights;  // [out x in]
  Tensor<T> bias;     // [out]

  DenseParams() = default;
  DenseParams(std::size_t out, std::size_t in) : weights({out, in}), bias({out}) {}

  std::size_t out() const { return weights.dim(0); }
  std::size_t in() const { return weights.dim(1); }
};

template <typename T>
inline T Activate(T x, Activation act) {
  return act == Activation::kRelu ? std::max(x, T{0}) : x;
}

// Valid convolution over time: out[o][t] = act(b[o] + sum_{i,w} k[o][i][w] *
// in[i][t + w]), t in [0, frames - window].
template <typename T>
Tensor<T> Conv1dForward(const Tensor<T>& input, const Conv1dParams<T>& params,
                        Activation act = Activation::kRelu) {
  Require(input.rank() == 2 && input.dim(0) == params.in_bins(),
          ErrorCode::kShapeMismatch,
          "conv1d expects [" + std::to_string(params.in_bins()) +
              " x T] input, got " + ShapeToString(input.shape()));
  const std::size_t frames = input.dim(1);
  const std::size_t window = params.window();
  Require(frames >= window, ErrorCode::kInputTooShort,
          "conv1d input has " + std::to_string(frames) +
              " frames, needs at least " + std::to_string(window));
  const std::size_t out_frames = frames - window + 1;
  Tensor<T> out({params.out_features(), out_frames});
  for (std::size_t o = 0; o < params.out_features(); ++o) {
    T* dst = out.row(o).data();
    std::fill(dst, dst + out_frames, params.bias[o]);
    for (std::size_t i = 0; i < params.in_bins(); ++i) {
      const T* src = input.row(i).data();
      for (std::size_t w = 0; w < window; ++w) {
        const T k = params.kernel(o, i, w);
        const T* s = src + w;
        for (std::size_t t = 0; t < out_frames; ++t) dst[t] += k * s[t];
      }
    }
    if (act == Activation::kRelu) {
      for (std::size_t t = 0; t < out_frames; ++t) dst[t] = std::max(dst[t], T{0});
    }
  }
  return out;
}

// Accumulates parameter gradients into `grads`. When `grad_input` is non-null
// it receives dL/dinput with the input's shape.
template <typename T>
void Conv1dBackward(const Tensor<T>& input, const Tensor<T>& output,
                    const Tensor<T>& grad_output, const Conv1dParams<T>& params,
                    Activation act, Conv1dParams<T>& grads,
                    Tensor<T>* grad_input = nullptr) {
  const std::size_t out_frames = output.dim(1);
  const std::size_t window = params.window();
  std::vector<T> g(out_frames);
  if (grad_input != nullptr) *grad_input = Tensor<T>(input.shape());
  for (std::size_t o = 0; o < params.out_features(); ++o) {
    const T* go = grad_output.row(o).data();
    const T* y = output.row(o).data();
    T bias_grad = 0;
    for (std::size_t t = 0; t < out_frames; ++t) {
      g[t] = (act == Activation::kRelu && y[t] <= T{0}) ? T{0} : go[t];
      bias_grad += g[t];
    }
    grads.bias[o] += bias_grad;
    for (std::size_t i = 0; i < params.in_bins(); ++i) {
      const T* src = input.row(i).data();
      // Window-wide accumulator keeps the reduction order fixed per tap.
      T acc[16] = {};
      T* kg = &grads.kernel(o, i, 0);
      if (window <= 16) {
        for (std::size_t t = 0; t < out_frames; ++t) {
          const T gt = g[t];
          for (std::size_t w = 0; w < window; ++w) acc[w] += gt * src[t + w];
        }
        for (std::size_t w = 0; w < window; ++w) kg[w] += acc[w];
      } else {
        for (std::size_t w = 0; w < window; ++w) {
          T s = 0;
          for (std::size_t t = 0; t < out_frames; ++t) s += g[t] * src[t + w];
          kg[w] += s;
        }
      }
      if (grad_input != nullptr) {
        T* gi = grad_input->row(i).data();
        for (std::size_t w = 0; w < window; ++w) {
          const T k = params.kernel(o, i, w);
          for (std::size_t t = 0; t < out_frames; ++t) gi[t + w] += k * g[t];
        }
      }
    }
  }
}

inline std::size_t PooledLength(std::size_t frames, std::size_t window,
                                std::size_t stride) {
  return (frames - window) / stride + 1;
}

// Mean over windows of `window` frames advanced by `stride`:
// [F x T'] -> [F x S], S = floor((T' - window) / stride) + 1.
template <typename T>
Tensor<T> AvgPoolTime(const Tensor<T>& input, std::size_t window = 10,
                      std::size_t stride = 5) {
  Require(window >= 1 && stride >= 1, ErrorCode::kInvalidArgument,
          "pool window and stride must be positive");
  Require(input.rank() == 2, ErrorCode::kShapeMismatch,
          "avg_pool_time expects a rank-2 input");
  const std::size_t frames = input.dim(1);
  Require(frames >= window, ErrorCode::kInputTooShort,
          "pooling input has " + std::to_string(frames) +
              " frames, needs at least " + std::to_string(window));
  const std::size_t segments = PooledLength(frames, window, stride);
  Tensor<T> out({input.dim(0), segments});
  const T scale = T{1} / static_cast<T>(window);
  for (std::size_t f = 0; f < input.dim(0); ++f) {
    const T* src = input.row(f).data();
    for (std::size_t s = 0; s < segments; ++s) {
      T sum = 0;
      for (std::size_t w = 0; w < window; ++w) sum += src[s * stride + w];
      out(f, s) = sum * scale;
    }
  }
  return out;
}

template <typename T>
Tensor<T> AvgPoolTimeBackward(const Tensor<T>& grad_output, std::size_t frames,
                              std::size_t window = 10, std::size_t stride = 5) {
  Tensor<T> grad({grad_output.dim(0), frames});
  const T scale = T{1} / static_cast<T>(window);
  for (std::size_t f = 0; f < grad_output.dim(0); ++f) {
    T* dst = grad.row(f).data();
    for (std::size_t s = 0; s < grad_output.dim(1); ++s) {
      const T g = grad_output(f, s) * scale;
      for (std::size_t w = 0; w < window; ++w) dst[s * stride + w] += g;
    }
  }
  return grad;
}

// [S x in] -> [S x out], applied per row.
template <typename T>
Tensor<T> DenseForward(const Tensor<T>& input, const DenseParams<T>& params,
                       Activation act) {
  Require(input.rank() == 2 && input.dim(1) == params.in(),
          ErrorCode::kShapeMismatch,
          "dense layer expects [S x " + std::to_string(params.in()) +
              "] input, got " + ShapeToString(input.shape()));
  Tensor<T> out({input.dim(0), params.out()});
  for (std::size_t s = 0; s < input.dim(0); ++s) {
    const T* x = input.row(s).data();
    for (std::size_t o = 0; o < params.out(); ++o) {
      const T* w = params.weights.row(o).data();
      T acc = params.bias[o];
      for (std::size_t i = 0; i < params.in(); ++i) acc += w[i] * x[i];
      out(s, o) = Activate(acc, act);
    }
  }
  return out;
}

template <typename T>
void DenseBackward(const Tensor<T>& input, const Tensor<T>& output,
                   const Tensor<T>& grad_output, const DenseParams<T>& params,
                   Activation act, DenseParams<T>& grads,
                   Tensor<T>* grad_input = nullptr) {
  if (grad_input != nullptr) *grad_input = Tensor<T>(input.shape());
  for (std::size_t s = 0; s < input.dim(0); ++s) {
    const T* x = input.row(s).data();
    for (std::size_t o = 0; o < params.out(); ++o) {
      T g = grad_output(s, o);
      if (act == Activation::kRelu && output(s, o) <= T{0}) g = 0;
      if (g == T{0}) continue;
      grads.bias[o] += g;
      T* gw = grads.weights.row(o).data();
      for (std::size_t i = 0; i < params.in(); ++i) gw[i] += g * x[i];
      if (grad_input != nullptr) {
        const T* w = params.weights.row(o).data();
        T* gi = grad_input->row(s).data();
        for (std::size_t i = 0; i < params.in(); ++i) gi[i] += g * w[i];
      }
    }
  }
}

template <typename T>
Tensor<T> SoftmaxRows(const Tensor<T>& logits) {
  Tensor<T> out(logits.shape());
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    auto in = logits.row(r);
    auto dst = out.row(r);
    const T peak = *std::max_element(in.begin(), in.end());
    T total = 0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - peak);
      total += dst[c];
    }
    for (T& v : dst) v /= total;
  }
  return out;
}

// dL/dlogits from dL/dprobs, row by row.
template <typename T>
Tensor<T> SoftmaxRowsBackward(const Tensor<T>& probs, const Tensor<T>& grad_probs) {
  Tensor<T> out(probs.shape());
  for (std::size_t r = 0; r < probs.dim(0); ++r) {
    auto p = probs.row(r);
    auto g = grad_probs.row(r);
    T dot = 0;
    for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
    auto dst = out.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) dst[c] = p[c] * (g[c] - dot);
  }
  return out;
}

// Hidden ReLU layer followed by a softmax head, per segment.
template <typename T>
Tensor<T> DenseSoftmaxForward(const Tensor<T>& segments, const DenseParams<T>& hidden,
                              const DenseParams<T>& head) {
  return SoftmaxRows(DenseForward(DenseForward(segments, hidden, Activation::kRelu),
                                  head, Activation::kIdentity));
}

// -log(p[target]) with p clamped to [kProbabilityFloor, 1].
template <typename T>
T CrossEntropyLoss(std::span<const T> predicted, std::size_t target) {
  Require(target < predicted.size(), ErrorCode::kInvalidArgument,
          "target class out of range");
  const T p = std::clamp(predicted[target], static_cast<T>(kProbabilityFloor), T{1});
  return -std::log(p);
}

// Gradient of CrossEntropyLoss w.r.t. predicted; zero where the clamp is active.
template <typename T>
std::vector<T> CrossEntropyGrad(std::span<const T> predicted, std::size_t target) {
  std::vector<T> grad(predicted.size(), T{0});
  const T p = predicted[target];
  if (p > static_cast<T>(kProbabilityFloor) && p <= T{1}) grad[target] = -T{1} / p;
  return grad;
}

}  // namespace relnet

#endif  // RELNET_LAYERS_H_
