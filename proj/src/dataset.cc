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

#include "relnet/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "relnet/error.h"
#include "relnet/rng.h"

namespace relnet {
namespace {

std::vector<std::string> SplitFields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) {
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    out.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool ParseFlag(const std::string& text) {
  const std::string v = Lower(text);
  return v == "1" || v == "true" || v == "yes" || v == "y";
}

}  // namespace

int Manifest::LabelIndex(const std::string& label) const {
  auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), label);
  if (it == vocabulary.end() || *it != label) return -1;
  return static_cast<int>(it - vocabulary.begin());
}

std::vector<int> Manifest::Labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(LabelIndex(r.label));
  return out;
}

Manifest Manifest::Filter(bool verified) const {
  Manifest out;
  out.base_dir = base_dir;
  out.vocabulary = vocabulary;
  for (const auto& r : records) {
    if (r.verified == verified) out.records.push_back(r);
  }
  return out;
}

std::filesystem::path Manifest::Resolve(const ManifestRecord& record) const {
  std::filesystem::path p(record.path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kNotFound, "manifest not found: " + path.string());
  std::string header;
  while (std::getline(in, header)) {
    if (!header.empty() && header != "\r" && header[0] != '#') break;
  }
  Require(!header.empty(), ErrorCode::kEmpty, "manifest is empty: " + path.string());
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  const auto columns = SplitFields(header, delim);
  int path_col = -1, label_col = -1, verified_col = -1;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const std::string name = Lower(columns[i]);
    if (name == "path") path_col = static_cast<int>(i);
    if (name == "label") label_col = static_cast<int>(i);
    if (name == "verified") verified_col = static_cast<int>(i);
  }
  Require(path_col >= 0 && label_col >= 0, ErrorCode::kInvalidArgument,
          path.string() + ": manifest header must name 'path' and 'label' columns");

  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::set<std::string> labels;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto fields = SplitFields(line, delim);
    const auto need = static_cast<std::size_t>(std::max(path_col, label_col)) + 1;
    Require(fields.size() >= need, ErrorCode::kCorruptFile,
            path.string() + ":" + std::to_string(line_no) + ": missing columns");
    ManifestRecord r;
    r.path = fields[static_cast<std::size_t>(path_col)];
    r.label = fields[static_cast<std::size_t>(label_col)];
    if (verified_col >= 0 && static_cast<std::size_t>(verified_col) < fields.size()) {
      r.verified = ParseFlag(fields[static_cast<std::size_t>(verified_col)]);
    }
    Require(!r.path.empty() && !r.label.empty(), ErrorCode::kCorruptFile,
            path.string() + ":" + std::to_string(line_no) + ": empty path or label");
    if (!seen.insert(r.path).second) {
      Fail(ErrorCode::kDuplicate, "duplicate path in manifest: " + r.path);
    }
    labels.insert(r.label);
    m.records.push_back(std::move(r));
  }
  Require(!m.records.empty(), ErrorCode::kEmpty, "manifest has no records: " + path.string());
  m.vocabulary.assign(labels.begin(), labels.end());
  return m;
}

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write manifest: " + path.string());
  out << "path\tlabel\tverified\n";
  for (const auto& r : manifest.records) {
    out << r.path << '\t' << r.label << '\t' << (r.verified ? 1 : 0) << '\n';
  }
}

SplitIndices StratifiedSplit(std::span<const int> labels, const SplitFractions& fractions,
                             std::uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  Require(std::abs(sum - 1.0) < 1e-9, ErrorCode::kInvalidArgument,
          "split fractions must sum to 1, got " + std::to_string(sum));
  Require(fractions.train >= 0 && fractions.validation >= 0 && fractions.test >= 0,
          ErrorCode::kInvalidArgument, "split fractions must be non-negative");

  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);

  SplitIndices out;
  for (auto& [label, members] : by_label) {
    Rng rng(MixSeed(seed, static_cast<std::uint64_t>(label) + 1));
    Shuffle(members.begin(), members.end(), rng);
    const std::size_t n = members.size();
    const auto n_test = static_cast<std::size_t>(std::llround(n * fractions.test));
    const auto n_val = static_cast<std::size_t>(std::llround(n * fractions.validation));
    const bool too_small = (fractions.test > 0 && n_test == 0) ||
                           (fractions.validation > 0 && n_val == 0) ||
                           (fractions.train > 0 && n_test + n_val >= n);
    if (too_small) {
      Fail(ErrorCode::kInvalidArgument,
           "class " + std::to_string(label) + " has " + std::to_string(n) +
               " items, too few to populate every split");
    }
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<long>(n_test));
    out.validation.insert(out.validation.end(), members.begin() + static_cast<long>(n_test),
                          members.begin() + static_cast<long>(n_test + n_val));
    out.train.insert(out.train.end(), members.begin() + static_cast<long>(n_test + n_val),
                     members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

void SyntheticSpec::Validate() const {
  segmentation.Validate();
  Require(num_classes >= 2, ErrorCode::kInvalidArgument, "synthetic data needs >= 2 classes");
  Require(bags_per_class >= 1 && segments_per_bag >= 1, ErrorCode::kInvalidArgument,
          "synthetic data needs >= 1 bag per class and >= 1 segment per bag");
  Require(min_events >= 1 && min_events <= max_events, ErrorCode::kInvalidArgument,
          "synthetic event count range is invalid");
  Require(max_events < segments_per_bag, ErrorCode::kInvalidArgument,
          "infeasible synthetic spec: " + std::to_string(max_events) +
              " event segments do not fit sparsely in " + std::to_string(segments_per_bag) +
              " segments");
  Require(covered_bins <= bins && covered_bins / num_classes >= 3, ErrorCode::kInvalidArgument,
          "synthetic class bands do not fit in the covered bins");
  Require(noise_level >= 0 && event_amplitude > 0, ErrorCode::kInvalidArgument,
          "noise level must be >= 0 and event amplitude > 0");
}

std::pair<std::size_t, std::size_t> EventFrames(const SyntheticSpec& spec, std::size_t k) {
  const ExpertConfig& g = spec.segmentation;
  // Segment k sees input frames [k * stride, k * stride + min_frames).
  const std::size_t length = g.pool_stride;
  const std::size_t start = k * g.pool_stride + (g.min_frames() - length) / 2;
  return {start, start + length};
}

namespace {

// Signature value for class `c` at band offset `b` of `width` bins and
// event frame `j`.
double SignatureValue(std::size_t c, std::size_t b, std::size_t width, std::size_t j) {
  const double centre = (static_cast<double>(width) - 1.0) / 2.0;
  const double spectral = 1.0 - std::abs(static_cast<double>(b) - centre) / (centre + 1.0);
  const double period = static_cast<double>(c % 3) + 2.0;
  const double temporal =
      0.7 + 0.3 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / period);
  return spectral * temporal;
}

std::pair<std::size_t, std::size_t> ClassBand(const SyntheticSpec& spec, std::size_t c) {
  const std::size_t window = spec.covered_bins / spec.num_classes;
  const std::size_t width = std::max<std::size_t>(3, window / 3);
  const std::size_t first = c * window + (window - width) / 2;
  return {first, width};
}

}  // namespace

SyntheticDataset GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  SyntheticDataset data;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    data.class_names.push_back("class" + std::to_string(c));
  }
  const std::size_t frames = spec.frames();
  const std::size_t segments = spec.segments_per_bag;
  Rng rng(spec.seed);

  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.bags_per_class; ++i) {
      Bag bag;
      bag.label = static_cast<int>(c);
      bag.name = data.class_names[c] + "_" + std::to_string(i);
      bag.features.values = Tensor<float>({spec.bins, frames});
      if (spec.noise_level > 0) {
        for (float& v : bag.features.values.data()) {
          v = static_cast<float>(-spec.noise_level * std::log(1.0 - UniformUnit(rng)));
        }
      }

      // Sparse event positions: distinct, non-adjacent segments.
      const std::size_t events =
          spec.min_events + UniformIndex(rng, spec.max_events - spec.min_events + 1);
      bag.mask.assign(segments, 0);
      std::vector<std::size_t> candidates(segments);
      for (std::size_t k = 0; k < segments; ++k) candidates[k] = k;
      Shuffle(candidates.begin(), candidates.end(), rng);
      std::size_t placed = 0;
      for (std::size_t k : candidates) {
        if (placed == events) break;
        const bool left = k > 0 && bag.mask[k - 1];
        const bool right = k + 1 < segments && bag.mask[k + 1];
        if (left || right) continue;
        bag.mask[k] = 1;
        ++placed;
      }
      // Fall back to adjacent placement only when spacing is impossible.
      for (std::size_t k : candidates) {
        if (placed == events) break;
        if (!bag.mask[k]) {
          bag.mask[k] = 1;
          ++placed;
        }
      }

      const auto [band_first, band_width] = ClassBand(spec, c);
      for (std::size_t k = 0; k < segments; ++k) {
        if (!bag.mask[k]) continue;
        const auto [f0, f1] = EventFrames(spec, k);
        for (std::size_t f = f0; f < f1; ++f) {
          for (std::size_t b = 0; b < band_width; ++b) {
            const double value =
                spec.event_amplitude * SignatureValue(c, b, band_width, f - f0);
            bag.features.values(band_first + b, f) += static_cast<float>(value);
          }
        }
      }
      data.bags.push_back(std::move(bag));
    }
  }
  data.separability_accuracy = EventSeparability(data.bags, spec);
  return data;
}

double EventSeparability(std::span<const Bag> bags, const SyntheticSpec& spec) {
  const std::size_t bins = spec.bins;
  auto mean_event_features = [&](const Bag& bag) {
    std::vector<double> f(bins, 0.0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < bag.mask.size(); ++k) {
      if (!bag.mask[k]) continue;
      const auto [f0, f1] = EventFrames(spec, k);
      for (std::size_t t = f0; t < f1; ++t) {
        for (std::size_t b = 0; b < bins; ++b) f[b] += std::log1p(bag.features.values(b, t));
        ++count;
      }
    }
    for (double& v : f) v /= static_cast<double>(std::max<std::size_t>(count, 1));
    return f;
  };
  std::vector<std::vector<double>> features;
  std::map<int, std::pair<std::vector<double>, std::size_t>> centroids;
  for (const Bag& bag : bags) {
    features.push_back(mean_event_features(bag));
    auto& [sum, n] = centroids[bag.label];
    if (sum.empty()) sum.assign(bins, 0.0);
    for (std::size_t b = 0; b < bins; ++b) sum[b] += features.back()[b];
    ++n;
  }
  for (auto& [label, entry] : centroids) {
    for (double& v : entry.first) v /= static_cast<double>(entry.second);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    int best = -1;
    double best_d = 0.0;
    for (const auto& [label, entry] : centroids) {
      double d = 0.0;
      for (std::size_t b = 0; b < bins; ++b) {
        const double diff = features[i][b] - entry.first[b];
        d += diff * diff;
      }
      if (best < 0 || d < best_d) {
        best = label;
        best_d = d;
      }
    }
    if (best == bags[i].label) ++correct;
  }
  return bags.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(bags.size());
}

std::string MaskToString(std::span<const std::uint8_t> mask) {
  std::string s;
  for (std::uint8_t m : mask) s.push_back(m ? '1' : '0');
  return s;
}

std::vector<std::uint8_t> MaskFromString(const std::string& text) {
  std::vector<std::uint8_t> mask;
  for (char ch : text) {
    if (ch == '0' || ch == '1') {
      mask.push_back(ch == '1' ? 1 : 0);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      Fail(ErrorCode::kCorruptFile, "invalid character in mask file");
    }
  }
  return mask;
}

void WriteSyntheticDataset(const std::filesystem::path& dir, const SyntheticDataset& data) {
  const auto features_dir = dir / "features";
  std::filesystem::create_directories(features_dir);
  Manifest manifest;
  for (const Bag& bag : data.bags) {
    WriteFeatureCache(features_dir / (bag.name + ".feat"), bag.features);
    std::ofstream mask(features_dir / (bag.name + ".mask"));
    mask << MaskToString(bag.mask) << '\n';
    manifest.records.push_back(
        {"features/" + bag.name + ".feat", data.class_names[static_cast<std::size_t>(bag.label)], true});
  }
  WriteManifest(dir / "manifest.tsv", manifest);
}

MelSpectrogram LoadClipFeatures(const Manifest& manifest, const ManifestRecord& record,
                                const std::filesystem::path& features_dir) {
  const auto source = manifest.Resolve(record);
  if (!features_dir.empty()) {
    const auto cached = features_dir / (source.stem().string() + ".feat");
    if (std::filesystem::exists(cached)) return ReadFeatureCache(cached);
  }
  if (source.extension() == ".feat") return ReadFeatureCache(source);
  return ComputeMelSpectrogram(ReadWav(source));
}

std::vector<Bag> LoadBags(const Manifest& manifest, const std::filesystem::path& features_dir) {
  std::vector<Bag> bags;
  bags.reserve(manifest.records.size());
  for (const auto& record : manifest.records) {
    Bag bag;
    const auto source = manifest.Resolve(record);
    bag.name = source.stem().string();
    bag.label = manifest.LabelIndex(record.label);
    bag.features = LoadClipFeatures(manifest, record, features_dir);
    for (const auto& dir : {features_dir, source.parent_path()}) {
      if (dir.empty()) continue;
      const auto mask_path = dir / (bag.name + ".mask");
      if (std::filesystem::exists(mask_path)) {
        std::ifstream in(mask_path);
        std::stringstream ss;
        ss << in.rdbuf();
        bag.mask = MaskFromString(ss.str());
        break;
      }
    }
    bags.push_back(std::move(bag));
  }
  return bags;
}

std::string PaddingName(const Padding& padding) {
  switch (padding.mode) {
    case Padding::Mode::kNone: return "none";
    case Padding::Mode::kCenterToGlobal:
      return "center-to-" + std::to_string(padding.target_frames);
    case Padding::Mode::kTrailingToBatchMax: return "trailing-to-batch-max";
  }
  return "unknown";
}

MelSpectrogram ApplyPadding(const MelSpectrogram& spec, const Padding& padding,
                            std::size_t batch_max_frames) {
  switch (padding.mode) {
    case Padding::Mode::kNone: return spec;
    case Padding::Mode::kCenterToGlobal: return PadCenter(spec, padding.target_frames);
    case Padding::Mode::kTrailingToBatchMax: return PadTrailing(spec, batch_max_frames);
  }
  return spec;
}

BatchIterator::BatchIterator(std::span<const Bag> bags, std::vector<std::size_t> order,
                             std::size_t batch_size, Padding padding)
    : bags_(bags), order_(std::move(order)), batch_size_(batch_size), padding_(padding) {
  Require(batch_size_ >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  Require(!order_.empty(), ErrorCode::kEmpty, "batch iterator needs at least one bag");
  for (std::size_t i : order_) {
    Require(i < bags_.size(), ErrorCode::kInvalidArgument, "batch order index out of range");
  }
}

BatchIterator::BatchIterator(std::span<const Bag> bags, std::size_t batch_size, Padding padding)
    : BatchIterator(bags,
                    [&] {
                      std::vector<std::size_t> o(bags.size());
                      for (std::size_t i = 0; i < o.size(); ++i) o[i] = i;
                      return o;
                    }(),
                    batch_size, padding) {}

std::size_t BatchIterator::num_batches() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

bool BatchIterator::Next(Batch& batch) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  batch = Batch{};
  std::size_t max_frames = 0;
  for (std::size_t i = cursor_; i < end; ++i) {
    max_frames = std::max(max_frames, bags_[order_[i]].features.frames());
  }
  std::size_t total = 0, zeros = 0;
  for (std::size_t i = cursor_; i < end; ++i) {
    const Bag& bag = bags_[order_[i]];
    batch.indices.push_back(order_[i]);
    batch.features.push_back(ApplyPadding(bag.features, padding_, max_frames));
    const std::size_t padded = batch.features.back().frames();
    const std::size_t added = padded - bag.features.frames();
    batch.item_padding_fractions.push_back(static_cast<double>(added) / static_cast<double>(padded));
    total += padded;
    zeros += added;
  }
  batch.frames = padding_.mode == Padding::Mode::kNone ? 0 : batch.features.front().frames();
  batch.padding_fraction = static_cast<double>(zeros) / static_cast<double>(total);
  cursor_ = end;
  return true;
}

}  // namespace relnet
