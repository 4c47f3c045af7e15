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

// Late fusion of expert outputs and the top-3 ranking metrics.

#ifndef RELNET_FUSION_H_
#define RELNET_FUSION_H_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relnet/relevance.h"

namespace relnet {

enum class FusionMode { kMV, kSUM, kPROD, kRV };

inline constexpr std::array<FusionMode, 4> kAllFusionModes = {
    FusionMode::kMV, FusionMode::kSUM, FusionMode::kPROD, FusionMode::kRV};

std::string_view FusionModeName(FusionMode mode);
FusionMode ParseFusionMode(std::string_view name);
std::optional<FusionMode> TryParseFusionMode(std::string_view name);

inline constexpr double kProductEpsilon = 1e-12;

struct FusionResult {
  std::vector<double> scores;        // per expert/class
  std::vector<std::size_t> ranking;  // all classes, best first
};

// Class indices sorted by descending score; ties go to the lower index.
std::vector<std::size_t> RankScores(std::span<const double> scores);

//   MV:   votes_n = #{k : n = argmax_m P_m(k)}
//   SUM:  sum_k P_n(k)
//   PROD: sum_k log(P_n(k) + epsilon)   (epsilon = 0 gives the raw product)
//   RV:   sum of R_max(k) over segments k won by n
// `relevance` is required for RV and ignored otherwise.
FusionResult Fuse(const ProbabilityMatrix& probs, FusionMode mode,
                  std::span<const double> relevance = {},
                  double product_epsilon = kProductEpsilon);

enum class RankMetric { kMapAt3, kRecallAt3 };

std::string_view RankMetricName(RankMetric metric);

// Credit for one clip: 1, 1/2, 1/3 for the truth at rank 1..3 (MAP@3) or 1
// when it is anywhere in the first three (recall@3); 0 otherwise.
double TopThreeCredit(std::span<const std::size_t> ranking, std::size_t truth,
                      RankMetric metric = RankMetric::kMapAt3);

// Mean credit over clips. Only the first three entries of each ranking count.
double MeanTopThree(std::span<const std::vector<std::size_t>> rankings,
                    std::span<const std::size_t> truths, RankMetric metric = RankMetric::kMapAt3);

inline double MapAt3(std::span<const std::vector<std::size_t>> rankings,
                     std::span<const std::size_t> truths) {
  return MeanTopThree(rankings, truths, RankMetric::kMapAt3);
}
inline double RecallAt3(std::span<const std::vector<std::size_t>> rankings,
                        std::span<const std::size_t> truths) {
  return MeanTopThree(rankings, truths, RankMetric::kRecallAt3);
}

}  // namespace relnet

#endif  // RELNET_FUSION_H_
