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

// Segment relevance from a set of one-vs-all experts.
//
// For segment k, the experts' positive probabilities P_n(k) form a column.
// The column is normalised to a distribution and its Shannon entropy is
// taken in base N (the number of experts), so H(k) lies in [0, 1]:
//
//   H(k)     = -sum_n p_n log_N p_n,   p_n = P_n(k) / sum_m P_m(k)
//   R(k)     = 1 - H(k)
//   R_max(k) = R(k) * max_n P_n(k)
//
// A segment where a single expert fires is relevant; one where every expert
// agrees (all high or all low) is not. The max-weighting suppresses columns
// that are peaked only because every probability is tiny. Changing the
// expert set changes the relevance without retraining any model.

#ifndef RELNET_RELEVANCE_H_
#define RELNET_RELEVANCE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "relnet/expert.h"
#include "relnet/features.h"
#include "relnet/tensor.h"

namespace relnet {

// kNormalized is the default. kLiteral evaluates -sum P log_N P on the raw
// probabilities without normalisation; it exists for comparison only and
// does not keep H inside [0, 1].
enum class EntropyMode { kNormalized, kLiteral };

inline constexpr double kColumnEpsilon = 1e-12;

double Entropy(std::span<const double> column, EntropyMode mode = EntropyMode::kNormalized);
double Relevance(std::span<const double> column, EntropyMode mode = EntropyMode::kNormalized);
double WeightedRelevance(std::span<const double> column,
                         EntropyMode mode = EntropyMode::kNormalized);

// Index of the largest entry; ties go to the lowest index.
std::size_t ArgMax(std::span<const double> values);

struct ExpertEntry {
  int class_id = 0;
  std::string class_name;
  std::shared_ptr<const ExpertModel> model;
};

// Ordered experts with distinct class ids and a shared input geometry.
class ExpertSet {
 public:
  ExpertSet() = default;
  explicit ExpertSet(std::vector<std::shared_ptr<const ExpertModel>> models);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ExpertEntry>& entries() const { return entries_; }
  const ExpertEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::vector<std::string> names() const;
  std::vector<const ExpertModel*> models() const;

  ExpertSet With(std::shared_ptr<const ExpertModel> model) const;
  ExpertSet Without(int class_id) const;
  ExpertSet Subset(std::span<const int> class_ids) const;

  // Shared config; requires a non-empty set.
  const ExpertConfig& config() const;

 private:
  std::vector<ExpertEntry> entries_;
};

// P[n][k] = P_n(k), [N x S].
struct ProbabilityMatrix {
  Tensor<double> values;
  std::vector<double> segment_times;  // start of each segment, seconds

  std::size_t experts() const { return values.dim(0); }
  std::size_t segments() const { return values.dim(1); }
  std::vector<double> Column(std::size_t k) const;
};

ProbabilityMatrix ExpertProbabilities(const MelSpectrogram& spec,
                                      std::span<const ExpertModel* const> experts);
ProbabilityMatrix ExpertProbabilities(const MelSpectrogram& spec, const ExpertSet& experts);

struct RelevanceProfile {
  std::vector<double> relevance;       // R_max(k)
  std::vector<std::size_t> top_expert;  // argmax_n P_n(k)
  std::vector<double> segment_times;
  std::vector<std::string> expert_names;

  std::size_t segments() const { return relevance.size(); }
  double Mean(std::span<const std::uint8_t> mask, bool masked) const;
};

RelevanceProfile ComputeRelevanceProfile(const ProbabilityMatrix& probs,
                                         std::vector<std::string> expert_names,
                                         EntropyMode mode = EntropyMode::kNormalized);
RelevanceProfile ComputeRelevanceProfile(const MelSpectrogram& spec, const ExpertSet& experts,
                                         EntropyMode mode = EntropyMode::kNormalized);

// Tab-separated: segment, start_seconds, r_max, top_expert.
std::string ProfileToTsv(const RelevanceProfile& profile);
RelevanceProfile ProfileFromTsv(const std::string& text);
void WriteProfileTsv(const std::filesystem::path& path, const RelevanceProfile& profile);
RelevanceProfile ReadProfileTsv(const std::filesystem::path& path);

}  // namespace relnet

#endif  // RELNET_RELEVANCE_H_
