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

// The band-wise convolutional trunk shared by expert classifiers and the
// classifier branch: three parallel 1D convolutions (low/mid/high Mel
// bands) -> feature concatenation -> average pooling over time -> dense
// ReLU layer -> per-segment softmax head.

#ifndef RELNET_NETWORK_H_
#define RELNET_NETWORK_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "relnet/features.h"
#include "relnet/layers.h"
#include "relnet/rng.h"
#include "relnet/tensor.h"

namespace relnet {

struct ExpertConfig {
  BandSplit bands;
  std::size_t features_low = 42;
  std::size_t features_mid = 42;
  std::size_t features_high = 16;
  std::size_t conv_window = 4;
  std::size_t pool_window = 10;
  std::size_t pool_stride = 5;
  std::size_t hidden_units = 100;  // swept over {20, 50, 100, 150}
  bool log_compress = true;
  std::uint64_t seed = 0;

  std::size_t total_features() const {
    return features_low + features_mid + features_high;
  }
  std::array<std::size_t, 3> band_bins() const { return {bands.low, bands.mid, bands.high}; }
  std::array<std::size_t, 3> band_features() const {
    return {features_low, features_mid, features_high};
  }
  // Frames needed for one pooled segment.
  std::size_t min_frames() const { return conv_window - 1 + pool_window; }
  std::size_t SegmentCount(std::size_t frames) const {
    return frames < min_frames() ? 0 : PooledLength(frames - conv_window + 1, pool_window, pool_stride);
  }
  // Start frame of segment k in the input.
  std::size_t SegmentStartFrame(std::size_t k) const { return k * pool_stride; }
  void Validate() const;

  // Everything that affects the shape of the computation (not the seed).
  bool CompatibleWith(const ExpertConfig& o) const {
    return bands == o.bands && conv_window == o.conv_window && pool_window == o.pool_window &&
           pool_stride == o.pool_stride && log_compress == o.log_compress;
  }
};

template <typename T>
struct Trunk {
  ExpertConfig config;
  std::array<Conv1dParams<T>, 3> conv;
  DenseParams<T> hidden;
  DenseParams<T> head;

  std::size_t outputs() const { return head.out(); }

  // Zero-valued parameters (also used as gradient accumulators).
  static Trunk Zeros(const ExpertConfig& config, std::size_t outputs) {
    config.Validate();
    Trunk t;
    t.config = config;
    const auto bins = config.band_bins();
    const auto feats = config.band_features();
    for (std::size_t b = 0; b < 3; ++b) {
      t.conv[b] = Conv1dParams<T>(feats[b], bins[b], config.conv_window);
    }
    t.hidden = DenseParams<T>(config.hidden_units, config.total_features());
    t.head = DenseParams<T>(outputs, config.hidden_units);
    return t;
  }

  // Fan-in scaled uniform weights, sqrt(6 / fan_in), for the ReLU layers;
  // zero biases. The softmax head starts at zero so every class begins at
  // 1/C; it still gets a gradient on the first step.
  static Trunk Initialize(const ExpertConfig& config, std::size_t outputs, std::uint64_t seed) {
    Trunk t = Zeros(config, outputs);
    Rng rng(seed);
    auto fill = [&](Tensor<T>& w, std::size_t fan_in, double gain) {
      const double limit = std::sqrt(gain / static_cast<double>(fan_in));
      for (T& v : w.data()) v = static_cast<T>(Uniform(rng, -limit, limit));
    };
    for (auto& c : t.conv) fill(c.kernel, c.in_bins() * c.window(), 6.0);
    fill(t.hidden.weights, t.hidden.in(), 6.0);
    return t;
  }

  template <typename F>
  void ForEachParameter(F&& f) {
    static constexpr const char* kBand[3] = {"low", "mid", "high"};
    for (std::size_t b = 0; b < 3; ++b) {
      f(std::string("conv_") + kBand[b] + ".kernel", conv[b].kernel);
      f(std::string("conv_") + kBand[b] + ".bias", conv[b].bias);
    }
    f(std::string("hidden.weights"), hidden.weights);
    f(std::string("hidden.bias"), hidden.bias);
    f(std::string("head.weights"), head.weights);
    f(std::string("head.bias"), head.bias);
  }
  template <typename F>
  void ForEachParameter(F&& f) const {
    const_cast<Trunk*>(this)->ForEachParameter(
        [&](const std::string& name, Tensor<T>& p) { f(name, static_cast<const Tensor<T>&>(p)); });
  }

  std::vector<Tensor<T>*> Parameters() {
    std::vector<Tensor<T>*> out;
    ForEachParameter([&](const std::string&, Tensor<T>& p) { out.push_back(&p); });
    return out;
  }
  std::vector<const Tensor<T>*> Parameters() const {
    std::vector<const Tensor<T>*> out;
    ForEachParameter([&](const std::string&, const Tensor<T>& p) { out.push_back(&p); });
    return out;
  }

  std::size_t ParameterCount() const {
    std::size_t n = 0;
    for (const Tensor<T>* p : Parameters()) n += p->size();
    return n;
  }

  void SetZero() {
    for (Tensor<T>* p : Parameters()) p->Fill(T{0});
  }

  // this += scale * other
  void AddScaled(const Trunk& other, T scale) {
    auto dst = Parameters();
    auto src = other.Parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      auto d = dst[i]->data();
      auto s = src[i]->data();
      for (std::size_t j = 0; j < d.size(); ++j) d[j] += scale * s[j];
    }
  }

  template <typename U>
  Trunk<U> Cast() const {
    Trunk<U> out;
    out.config = config;
    for (std::size_t b = 0; b < 3; ++b) {
      out.conv[b].kernel = conv[b].kernel.template Cast<U>();
      out.conv[b].bias = conv[b].bias.template Cast<U>();
    }
    out.hidden.weights = hidden.weights.template Cast<U>();
    out.hidden.bias = hidden.bias.template Cast<U>();
    out.head.weights = head.weights.template Cast<U>();
    out.head.bias = head.bias.template Cast<U>();
    return out;
  }

  friend bool operator==(const Trunk& a, const Trunk& b) {
    return a.Parameters().size() == b.Parameters().size() && [&] {
      auto pa = a.Parameters();
      auto pb = b.Parameters();
      for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!(*pa[i] == *pb[i])) return false;
      }
      return true;
    }();
  }
};

// Activations kept for the backward pass.
template <typename T>
struct TrunkCache {
  std::array<Tensor<T>, 3> band_input;  // [bins_b x T]
  std::array<Tensor<T>, 3> conv_out;    // [features_b x T']
  Tensor<T> concat;                     // [F x T']
  Tensor<T> pooled;                     // [S x F]
  Tensor<T> hidden;                     // [S x HN]
  Tensor<T> probs;                      // [S x C]

  std::size_t segments() const { return probs.dim(0); }
};

// `spectrogram` is the raw non-negative [bins x frames] matrix; log
// compression (if configured) and band slicing happen here.
template <typename T>
TrunkCache<T> TrunkForward(const Trunk<T>& trunk, const Tensor<float>& spectrogram) {
  const ExpertConfig& cfg = trunk.config;
  Require(spectrogram.rank() == 2, ErrorCode::kShapeMismatch, "spectrogram must be rank 2");
  Require(spectrogram.dim(1) >= cfg.min_frames(), ErrorCode::kInputTooShort,
          "spectrogram has " + std::to_string(spectrogram.dim(1)) +
              " frames; the minimum for one segment is " + std::to_string(cfg.min_frames()));
  cfg.bands.Validate(spectrogram.dim(0));

  TrunkCache<T> cache;
  const std::size_t frames = spectrogram.dim(1);
  const auto bins = cfg.band_bins();
  std::size_t first = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor<T> band({bins[b], frames});
    for (std::size_t r = 0; r < bins[b]; ++r) {
      auto src = spectrogram.row(first + r);
      auto dst = band.row(r);
      for (std::size_t t = 0; t < frames; ++t) {
        dst[t] = cfg.log_compress ? static_cast<T>(std::log1p(src[t])) : static_cast<T>(src[t]);
      }
    }
    first += bins[b];
    cache.conv_out[b] = Conv1dForward(band, trunk.conv[b], Activation::kRelu);
    cache.band_input[b] = std::move(band);
  }

  const std::size_t conv_frames = cache.conv_out[0].dim(1);
  cache.concat = Tensor<T>({cfg.total_features(), conv_frames});
  std::size_t row = 0;
  for (const auto& c : cache.conv_out) {
    std::copy(c.data().begin(), c.data().end(), cache.concat.row(row).begin());
    row += c.dim(0);
  }
  cache.pooled = Transpose(AvgPoolTime(cache.concat, cfg.pool_window, cfg.pool_stride));
  cache.hidden = DenseForward(cache.pooled, trunk.hidden, Activation::kRelu);
  cache.probs = SoftmaxRows(DenseForward(cache.hidden, trunk.head, Activation::kIdentity));
  return cache;
}

// Accumulates dL/dparams into `grads` given dL/dprobs ([S x C]).
template <typename T>
void TrunkBackward(const Trunk<T>& trunk, const TrunkCache<T>& cache,
                   const Tensor<T>& grad_probs, Trunk<T>& grads) {
  const ExpertConfig& cfg = trunk.config;
  const Tensor<T> grad_logits = SoftmaxRowsBackward(cache.probs, grad_probs);
  // The head's output is the pre-softmax logit; with identity activation the
  // cached output is unused.
  Tensor<T> grad_hidden;
  DenseBackward(cache.hidden, grad_logits, grad_logits, trunk.head, Activation::kIdentity,
                grads.head, &grad_hidden);
  Tensor<T> grad_pooled;
  DenseBackward(cache.pooled, cache.hidden, grad_hidden, trunk.hidden, Activation::kRelu,
                grads.hidden, &grad_pooled);
  const Tensor<T> grad_concat = AvgPoolTimeBackward(Transpose(grad_pooled), cache.concat.dim(1),
                                                    cfg.pool_window, cfg.pool_stride);
  std::size_t row = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const Tensor<T>& out = cache.conv_out[b];
    Tensor<T> grad_out(out.shape());
    for (std::size_t r = 0; r < out.dim(0); ++r) {
      auto src = grad_concat.row(row + r);
      std::copy(src.begin(), src.end(), grad_out.row(r).begin());
    }
    row += out.dim(0);
    Conv1dBackward(cache.band_input[b], out, grad_out, trunk.conv[b], Activation::kRelu,
                   grads.conv[b]);
  }
}

}  // namespace relnet

#endif  // RELNET_NETWORK_H_
