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

#include "relnet/relevance.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "relnet/binary_io.h"

namespace relnet {
namespace {

void CheckColumn(std::span<const double> column) {
  Require(column.size() >= 2, ErrorCode::kInvalidArgument,
          "relevance needs at least 2 experts, got " + std::to_string(column.size()));
}

double ColumnMax(std::span<const double> column) {
  return *std::max_element(column.begin(), column.end());
}

}  // namespace

double Entropy(std::span<const double> column, EntropyMode mode) {
  CheckColumn(column);
  const double log_n = std::log(static_cast<double>(column.size()));
  if (mode == EntropyMode::kLiteral) {
    double h = 0.0;
    for (double p : column) {
      if (p > 0.0) h -= p * std::log(p) / log_n;
    }
    return h;
  }
  double total = 0.0;
  for (double p : column) total += p;
  if (!(total > kColumnEpsilon)) return 1.0;
  double h = 0.0;
  for (double p : column) {
    const double q = p / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return std::clamp(h / log_n, 0.0, 1.0);
}

double Relevance(std::span<const double> column, EntropyMode mode) {
  return 1.0 - Entropy(column, mode);
}

double WeightedRelevance(std::span<const double> column, EntropyMode mode) {
  return Relevance(column, mode) * ColumnMax(column);
}

std::size_t ArgMax(std::span<const double> values) {
  Require(!values.empty(), ErrorCode::kInvalidArgument, "argmax of an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ExpertSet::ExpertSet(std::vector<std::shared_ptr<const ExpertModel>> models) {
  std::set<int> ids;
  for (auto& m : models) {
    Require(m != nullptr, ErrorCode::kInvalidArgument, "expert set contains a null model");
    Require(ids.insert(m->class_id()).second, ErrorCode::kDuplicate,
            "expert set contains class id " + std::to_string(m->class_id()) + " twice");
    if (!entries_.empty()) {
      Require(entries_.front().model->config().CompatibleWith(m->config()),
              ErrorCode::kIncompatible,
              "expert '" + m->class_name() + "' has a feature configuration incompatible with '" +
                  entries_.front().class_name + "'");
    }
    entries_.push_back({m->class_id(), m->class_name(), std::move(m)});
  }
}

std::vector<std::string> ExpertSet::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.class_name);
  return out;
}

std::vector<const ExpertModel*> ExpertSet::models() const {
  std::vector<const ExpertModel*> out;
  for (const auto& e : entries_) out.push_back(e.model.get());
  return out;
}

ExpertSet ExpertSet::With(std::shared_ptr<const ExpertModel> model) const {
  std::vector<std::shared_ptr<const ExpertModel>> models;
  for (const auto& e : entries_) models.push_back(e.model);
  models.push_back(std::move(model));
  return ExpertSet(std::move(models));
}

ExpertSet ExpertSet::Without(int class_id) const {
  std::vector<std::shared_ptr<const ExpertModel>> models;
  for (const auto& e : entries_) {
    if (e.class_id != class_id) models.push_back(e.model);
  }
  Require(models.size() < entries_.size(), ErrorCode::kNotFound,
          "no expert with class id " + std::to_string(class_id));
  return ExpertSet(std::move(models));
}

ExpertSet ExpertSet::Subset(std::span<const int> class_ids) const {
  std::vector<std::shared_ptr<const ExpertModel>> models;
  for (int id : class_ids) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const ExpertEntry& e) { return e.class_id == id; });
    Require(it != entries_.end(), ErrorCode::kNotFound,
            "no expert with class id " + std::to_string(id));
    models.push_back(it->model);
  }
  return ExpertSet(std::move(models));
}

const ExpertConfig& ExpertSet::config() const {
  Require(!entries_.empty(), ErrorCode::kEmpty, "expert set is empty");
  return entries_.front().model->config();
}

std::vector<double> ProbabilityMatrix::Column(std::size_t k) const {
  std::vector<double> out(experts());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = values(n, k);
  return out;
}

ProbabilityMatrix ExpertProbabilities(const MelSpectrogram& spec,
                                      std::span<const ExpertModel* const> experts) {
  Require(!experts.empty(), ErrorCode::kEmpty, "no experts given");
  for (const ExpertModel* e : experts) {
    Require(e->config().CompatibleWith(experts.front()->config()), ErrorCode::kIncompatible,
            "expert '" + e->class_name() + "' has an incompatible feature configuration");
  }
  ProbabilityMatrix out;
  for (std::size_t n = 0; n < experts.size(); ++n) {
    const std::vector<float> row = experts[n]->PositiveProb(spec);
    if (n == 0) out.values = Tensor<double>({experts.size(), row.size()});
    Require(row.size() == out.segments(), ErrorCode::kInternal,
            "experts produced different segment counts");
    for (std::size_t k = 0; k < row.size(); ++k) out.values(n, k) = row[k];
  }
  const ExpertConfig& cfg = experts.front()->config();
  for (std::size_t k = 0; k < out.segments(); ++k) {
    out.segment_times.push_back(static_cast<double>(cfg.SegmentStartFrame(k)) *
                                spec.frame_hop_seconds);
  }
  return out;
}

ProbabilityMatrix ExpertProbabilities(const MelSpectrogram& spec, const ExpertSet& experts) {
  const auto models = experts.models();
  return ExpertProbabilities(spec, std::span<const ExpertModel* const>(models));
}

double RelevanceProfile::Mean(std::span<const std::uint8_t> mask, bool masked) const {
  Require(mask.size() == relevance.size(), ErrorCode::kShapeMismatch,
          "mask has " + std::to_string(mask.size()) + " entries for " +
              std::to_string(relevance.size()) + " segments");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if ((mask[k] != 0) == masked) {
      sum += relevance[k];
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

RelevanceProfile ComputeRelevanceProfile(const ProbabilityMatrix& probs,
                                         std::vector<std::string> expert_names,
                                         EntropyMode mode) {
  Require(probs.experts() >= 2, ErrorCode::kInvalidArgument,
          "relevance needs at least 2 experts, got " + std::to_string(probs.experts()));
  Require(expert_names.size() == probs.experts(), ErrorCode::kShapeMismatch,
          "expert name count does not match probability rows");
  RelevanceProfile out;
  out.expert_names = std::move(expert_names);
  out.segment_times = probs.segment_times;
  for (std::size_t k = 0; k < probs.segments(); ++k) {
    const std::vector<double> column = probs.Column(k);
    out.relevance.push_back(WeightedRelevance(column, mode));
    out.top_expert.push_back(ArgMax(column));
  }
  return out;
}

RelevanceProfile ComputeRelevanceProfile(const MelSpectrogram& spec, const ExpertSet& experts,
                                         EntropyMode mode) {
  Require(experts.size() >= 2, ErrorCode::kInvalidArgument,
          "relevance needs at least 2 experts, got " + std::to_string(experts.size()));
  return ComputeRelevanceProfile(ExpertProbabilities(spec, experts), experts.names(), mode);
}

std::string ProfileToTsv(const RelevanceProfile& profile) {
  std::ostringstream os;
  os << "segment\tstart_seconds\tr_max\ttop_expert\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < profile.segments(); ++k) {
    os << k << '\t' << profile.segment_times[k] << '\t' << profile.relevance[k] << '\t'
       << profile.expert_names.at(profile.top_expert[k]) << '\n';
  }
  return os.str();
}

RelevanceProfile ProfileFromTsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Require(static_cast<bool>(std::getline(is, line)) &&
              line.rfind("segment\tstart_seconds\tr_max\ttop_expert", 0) == 0,
          ErrorCode::kCorruptFile, "relevance profile: missing header");
  RelevanceProfile out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string seg, start, rmax, name;
    if (!std::getline(row, seg, '\t') || !std::getline(row, start, '\t') ||
        !std::getline(row, rmax, '\t') || !std::getline(row, name)) {
      Fail(ErrorCode::kCorruptFile, "relevance profile: malformed row '" + line + "'");
    }
    try {
      out.segment_times.push_back(std::stod(start));
      out.relevance.push_back(std::stod(rmax));
    } catch (const std::exception&) {
      Fail(ErrorCode::kCorruptFile, "relevance profile: malformed number in '" + line + "'");
    }
    auto it = std::find(out.expert_names.begin(), out.expert_names.end(), name);
    if (it == out.expert_names.end()) {
      out.expert_names.push_back(name);
      it = out.expert_names.end() - 1;
    }
    out.top_expert.push_back(static_cast<std::size_t>(it - out.expert_names.begin()));
  }
  return out;
}

void WriteProfileTsv(const std::filesystem::path& path, const RelevanceProfile& profile) {
  const std::string text = ProfileToTsv(profile);
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RelevanceProfile ReadProfileTsv(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return ProfileFromTsv(std::string(bytes.begin(), bytes.end()));
}

}  // namespace relnet
