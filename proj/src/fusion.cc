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

#include "relnet/fusion.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relnet {

std::string_view FusionModeName(FusionMode mode) {
  switch (mode) {
    case FusionMode::kMV: return "MV";
    case FusionMode::kSUM: return "SUM";
    case FusionMode::kPROD: return "PROD";
    case FusionMode::kRV: return "RV";
  }
  return "?";
}

std::optional<FusionMode> TryParseFusionMode(std::string_view name) {
  for (FusionMode m : kAllFusionModes) {
    if (FusionModeName(m) == name) return m;
  }
  return std::nullopt;
}

FusionMode ParseFusionMode(std::string_view name) {
  if (auto m = TryParseFusionMode(name)) return *m;
  Fail(ErrorCode::kInvalidArgument,
       "unknown fusion mode '" + std::string(name) + "' (expected MV, SUM, PROD or RV)");
}

std::vector<std::size_t> RankScores(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

FusionResult Fuse(const ProbabilityMatrix& probs, FusionMode mode,
                  std::span<const double> relevance, double product_epsilon) {
  const std::size_t experts = probs.experts();
  const std::size_t segments = probs.segments();
  if (mode == FusionMode::kRV) {
    Require(!relevance.empty(), ErrorCode::kInvalidArgument,
            "RV fusion requires per-segment relevance");
    Require(relevance.size() == segments, ErrorCode::kShapeMismatch,
            "RV fusion got " + std::to_string(relevance.size()) + " relevance values for " +
                std::to_string(segments) + " segments");
  }
  FusionResult out;
  out.scores.assign(experts, 0.0);
  for (std::size_t k = 0; k < segments; ++k) {
    switch (mode) {
      case FusionMode::kMV:
        out.scores[ArgMax(probs.Column(k))] += 1.0;
        break;
      case FusionMode::kRV:
        out.scores[ArgMax(probs.Column(k))] += relevance[k];
        break;
      case FusionMode::kSUM:
        for (std::size_t n = 0; n < experts; ++n) out.scores[n] += probs.values(n, k);
        break;
      case FusionMode::kPROD:
        for (std::size_t n = 0; n < experts; ++n) {
          out.scores[n] += std::log(probs.values(n, k) + product_epsilon);
        }
        break;
    }
  }
  out.ranking = RankScores(out.scores);
  return out;
}

std::string_view RankMetricName(RankMetric metric) {
  return metric == RankMetric::kMapAt3 ? "map@3" : "recall@3";
}

double TopThreeCredit(std::span<const std::size_t> ranking, std::size_t truth,
                      RankMetric metric) {
  const std::size_t n = std::min<std::size_t>(3, ranking.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (ranking[r] == truth) {
      return metric == RankMetric::kMapAt3 ? 1.0 / static_cast<double>(r + 1) : 1.0;
    }
  }
  return 0.0;
}

double MeanTopThree(std::span<const std::vector<std::size_t>> rankings,
                    std::span<const std::size_t> truths, RankMetric metric) {
  Require(rankings.size() == truths.size(), ErrorCode::kShapeMismatch,
          "ranking count does not match truth count");
  Require(!truths.empty(), ErrorCode::kEmpty, "no clips to score");
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    total += TopThreeCredit(rankings[i], truths[i], metric);
  }
  return total / static_cast<double>(truths.size());
}

}  // namespace relnet
