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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "grad_check.h"
#include "relnet/adam.h"
#include "relnet/aggregation.h"
#include "relnet/layers.h"
#include "relnet/network.h"
#include "relnet/rng.h"
#include "test_util.h"

namespace relnet {
namespace {

TEST(Conv1d, ValidConvolutionShape) {
  Conv1dParams<float> p(42, 20, 4);
  const Tensor<float> out = Conv1dForward(Tensor<float>({20, 100}, 1.0f), p);
  EXPECT_EQ(out.shape(), (Shape{42, 97}));
}

TEST(Conv1d, ZeroInputGivesActivationOfBias) {
  Conv1dParams<float> p(3, 5, 4);
  for (float& v : p.kernel.data()) v = 0.7f;
  const Tensor<float> out = Conv1dForward(Tensor<float>({5, 9}), p);
  for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Conv1d, HandConvolution) {
  Conv1dParams<float> p(1, 1, 4);
  p.kernel.Fill(1.0f);
  const Tensor<float> in({1, 5}, {1, 2, 3, 4, 5});
  const Tensor<float> out = Conv1dForward(in, p, Activation::kIdentity);
  ASSERT_EQ(out.shape(), (Shape{1, 2}));
  EXPECT_EQ(out(0, 0), 10.0f);
  EXPECT_EQ(out(0, 1), 14.0f);
}

TEST(Conv1d, TooShortInput) {
  Conv1dParams<float> p(1, 1, 4);
  try {
    Conv1dForward(Tensor<float>({1, 3}), p);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInputTooShort);
  }
}

TEST(AvgPool, SegmentCount) {
  EXPECT_EQ(AvgPoolTime(Tensor<float>({2, 97})).dim(1), 18u);
  EXPECT_EQ(PooledLength(97, 10, 5), 18u);
}

TEST(AvgPool, ConstantAndRamp) {
  const Tensor<float> c = AvgPoolTime(Tensor<float>({3, 40}, 2.5f));
  for (float v : c.data()) EXPECT_FLOAT_EQ(v, 2.5f);
  Tensor<float> ramp({1, 10});
  for (std::size_t t = 0; t < 10; ++t) ramp(0, t) = static_cast<float>(t + 1);
  const Tensor<float> out = AvgPoolTime(ramp);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FLOAT_EQ(out[0], 5.5f);
}

TEST(AvgPool, TooShortInput) {
  EXPECT_THROW(AvgPoolTime(Tensor<float>({1, 9})), Error);
}

TEST(Softmax, ClosedForms) {
  const Tensor<double> even = SoftmaxRows(Tensor<double>({1, 2}, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(even(0, 0), 0.5);
  const Tensor<double> p = SoftmaxRows(Tensor<double>({1, 2}, {std::log(3.0), 0.0}));
  EXPECT_NEAR(p(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.25, 1e-15);
}

TEST(Softmax, DenseHeadShapeAndDimensionCheck) {
  DenseParams<float> hidden(6, 4), head(2, 6);
  const Tensor<float> out = DenseSoftmaxForward(Tensor<float>({18, 4}, 1.0f), hidden, head);
  EXPECT_EQ(out.shape(), (Shape{18, 2}));
  try {
    DenseSoftmaxForward(Tensor<float>({18, 5}), hidden, head);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(CrossEntropy, ClosedForms) {
  const std::vector<double> perfect = {1.0, 0.0};
  EXPECT_EQ(CrossEntropyLoss<double>(perfect, 0), 0.0);
  const std::vector<double> half = {0.5, 0.5};
  EXPECT_NEAR(CrossEntropyLoss<double>(half, 1), std::numbers::ln2, 1e-15);
  const std::vector<double> skew = {0.9, 0.1};
  EXPECT_NEAR(CrossEntropyLoss<double>(skew, 1), 2.302585092994046, 1e-12);
}

TEST(CrossEntropy, ClampedZeroProbabilityIsFinite) {
  const std::vector<double> p = {1.0, 0.0};
  const double loss = CrossEntropyLoss<double>(p, 1);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(kProbabilityFloor), 1e-9);
  const std::vector<double> g = CrossEntropyGrad<double>(p, 1);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Tensor<float> w({3}, {1.0f, -2.0f, 0.5f});
  const Tensor<float> before = w;
  Tensor<float> g({3});
  Tensor<float>* params[] = {&w};
  const Tensor<float>* grads[] = {&g};
  AdamState<float> state(params, AdamConfig{});
  AdamStep<float>(params, grads, state);
  EXPECT_EQ(w, before);
}

TEST(Adam, FirstStepMovesBySignTimesRate) {
  Tensor<double> w({4}, {0.0, 1.0, -1.0, 3.0});
  const Tensor<double> before = w;
  Tensor<double> g({4}, {0.3, -7.0, 1e-3, -2e-2});
  Tensor<double>* params[] = {&w};
  const Tensor<double>* grads[] = {&g};
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState<double> state(params, cfg);
  AdamStep<double>(params, grads, state);
  for (std::size_t i = 0; i < 4; ++i) {
    const double step = before[i] - w[i];
    EXPECT_NEAR(step, 0.01 * (g[i] > 0 ? 1.0 : -1.0), 1e-6) << i;
  }
}

TEST(Adam, SecondMomentAfterTwoIdenticalSteps) {
  Tensor<double> w({2});
  Tensor<double> g({2}, {0.5, -3.0});
  Tensor<double>* params[] = {&w};
  const Tensor<double>* grads[] = {&g};
  AdamState<double> state(params, AdamConfig{});
  AdamStep<double>(params, grads, state);
  AdamStep<double>(params, grads, state);
  const double b2 = state.config.beta2;
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(state.second_moment[0][i], g[i] * g[i] * (1.0 - b2 * b2), 1e-15);
  }
}

TEST(Adam, NonFiniteGradientIsDivergence) {
  Tensor<float> w({2});
  Tensor<float> g({2}, {1.0f, std::nanf("")});
  Tensor<float>* params[] = {&w};
  const Tensor<float>* grads[] = {&g};
  AdamState<float> state(params, AdamConfig{});
  try {
    AdamStep<float>(params, grads, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrainingDiverged);
  }
}

// Only tensors passed to the step are touched: the frozen-branch guarantee.
TEST(Adam, UntouchedTensorsStayFixed) {
  Tensor<float> a({2}, {1.0f, 2.0f}), frozen({2}, {3.0f, 4.0f});
  const Tensor<float> frozen_before = frozen;
  Tensor<float> g({2}, {1.0f, 1.0f});
  Tensor<float>* params[] = {&a};
  const Tensor<float>* grads[] = {&g};
  AdamState<float> state(params, AdamConfig{});
  const auto updated = AdamStep<float>(params, grads, state);
  EXPECT_EQ(updated, (std::vector<std::size_t>{0}));
  EXPECT_EQ(frozen, frozen_before);
}

TEST(TrunkShape, SegmentAlgebraProperty) {
  ExpertConfig cfg = testing::SmallConfig();
  Trunk<float> trunk = Trunk<float>::Initialize(cfg, 2, 5);
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t frames = cfg.min_frames() + UniformIndex(rng, 60);
    const auto spec = testing::RandomSpectrogram(kMelBins, frames, 100 + trial);
    const TrunkCache<float> cache = TrunkForward(trunk, spec.values);
    EXPECT_EQ(cache.segments(), (frames - cfg.min_frames()) / cfg.pool_stride + 1);
    EXPECT_EQ(cache.segments(), cfg.SegmentCount(frames));
    EXPECT_EQ(cache.concat.dim(0), cfg.total_features());
    EXPECT_EQ(cache.concat.dim(1), frames - cfg.conv_window + 1);
    for (std::size_t k = 0; k < cache.segments(); ++k) {
      EXPECT_NEAR(cache.probs(k, 0) + cache.probs(k, 1), 1.0f, 1e-6f);
    }
  }
}

TEST(TrunkShape, TooFewFramesNamesMinimum) {
  Trunk<float> trunk = Trunk<float>::Initialize(ExpertConfig{}, 2, 1);
  try {
    TrunkForward(trunk, Tensor<float>({kMelBins, 12}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInputTooShort);
    EXPECT_NE(std::string(e.what()).find("13"), std::string::npos);
  }
}

ExpertConfig GradConfig() {
  ExpertConfig cfg;
  cfg.features_low = 8;
  cfg.features_mid = 8;
  cfg.features_high = 4;
  cfg.hidden_units = 20;
  return cfg;
}

Trunk<double> GradTrunk(std::size_t outputs) {
  Trunk<double> t = Trunk<float>::Initialize(GradConfig(), outputs, 21).Cast<double>();
  Rng rng(4);
  for (double& v : t.head.weights.data()) v = Uniform(rng, -0.3, 0.3);
  for (auto* b : {&t.conv[0].bias, &t.conv[1].bias, &t.conv[2].bias, &t.hidden.bias,
                  &t.head.bias}) {
    for (double& v : b->data()) v = Uniform(rng, -0.1, 0.1);
  }
  return t;
}

TEST(GradientCheck, UnitWeights) {
  const Trunk<double> trunk = GradTrunk(2);
  ASSERT_GT(trunk.ParameterCount(), 2500u);
  const auto spec = testing::RandomSpectrogram(kMelBins, 28, 8);
  const auto r = testing::CheckTrunkGradient(trunk, spec.values, {}, 1);
  EXPECT_LT(r.skipped * 100, r.checked + r.skipped);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.checked << " checked";
}

TEST(GradientCheck, ConstantRelevanceWeights) {
  const Trunk<double> trunk = GradTrunk(3);
  const auto spec = testing::RandomSpectrogram(kMelBins, 28, 9);
  const std::vector<double> weights = {0.3, 0.9, 0.05, 0.6};
  ASSERT_EQ(GradConfig().SegmentCount(28), weights.size());
  const auto r = testing::CheckTrunkGradient(trunk, spec.values, weights, 2);
  EXPECT_LT(r.skipped * 100, r.checked + r.skipped);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(GradientCheck, PerfectPredictionHasNearZeroGradient) {
  Tensor<double> q({3, 2}, {1.0, 0.0, 1.0, 0.0, 1.0, 0.0});
  Tensor<double> grad;
  const double loss = AggregateCrossEntropy(q, {}, 0, &grad);
  EXPECT_EQ(loss, 0.0);
  // dL/dq is non-zero, but a saturated softmax passes nothing back.
  const Tensor<double> grad_logits = SoftmaxRowsBackward(q, grad);
  for (double g : grad_logits.data()) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(Aggregation, Identities) {
  const Tensor<float> constant({4, 2}, {0.9f, 0.1f, 0.9f, 0.1f, 0.9f, 0.1f, 0.9f, 0.1f});
  const ClipDistribution c = AggregateSegments(constant);
  EXPECT_NEAR(c.probs[0], 0.9, 1e-7);
  EXPECT_NEAR(c.probs[1], 0.1, 1e-7);
  const Tensor<float> opposite({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
  const ClipDistribution o = AggregateSegments(opposite);
  EXPECT_DOUBLE_EQ(o.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(o.probs[1], 0.5);
}

TEST(Aggregation, WeightedCases) {
  const Tensor<float> q({3, 3}, {0.2f, 0.3f, 0.5f, 0.6f, 0.1f, 0.3f, 0.1f, 0.1f, 0.8f});
  // One supporting segment reproduces its row.
  const std::vector<double> single = {0.0, 0.7, 0.0};
  const ClipDistribution s = AggregateSegments(q, single);
  EXPECT_NEAR(s.probs[0], 0.6, 1e-7);
  EXPECT_NEAR(s.probs[1], 0.1, 1e-7);
  EXPECT_NEAR(s.probs[2], 0.3, 1e-7);
  // Unit weights equal plain mean aggregation.
  const std::vector<double> ones(3, 1.0);
  EXPECT_EQ(AggregateSegments(q, ones).probs, AggregateSegments(q).probs);
  // All-zero weights: uniform and flagged.
  const std::vector<double> zeros(3, 0.0);
  const ClipDistribution d = AggregateSegments(q, zeros);
  EXPECT_TRUE(d.degenerate);
  for (double p : d.probs) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Aggregation, RandomDistributionsStayNormalized) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 1 + UniformIndex(rng, 30), c = 2 + UniformIndex(rng, 6);
    Tensor<double> logits({s, c});
    for (double& v : logits.data()) v = 4.0 * Gaussian(rng);
    const Tensor<double> q = SoftmaxRows(logits);
    std::vector<double> w(s);
    for (double& v : w) v = UniformUnit(rng);
    const ClipDistribution d = AggregateSegments(q, w);
    double total = 0.0;
    for (double p : d.probs) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace relnet
