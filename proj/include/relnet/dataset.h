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

#ifndef RELNET_DATASET_H_
#define RELNET_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relnet/features.h"
#include "relnet/network.h"

namespace relnet {

// A weakly-labelled clip. `mask` marks the segments that carry the labelled
// event; it is only known for synthetic data and empty otherwise.
struct Bag {
  std::string name;
  MelSpectrogram features;
  int label = -1;
  std::vector<std::uint8_t> mask;
};

struct ManifestRecord {
  std::string path;
  std::string label;
  bool verified = true;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::vector<std::string> vocabulary;  // sorted label names; index = class id
  std::filesystem::path base_dir;       // relative paths resolve against this

  int LabelIndex(const std::string& label) const;
  std::vector<int> Labels() const;
  Manifest Filter(bool verified) const;
  std::filesystem::path Resolve(const ManifestRecord& record) const;
};

// Delimited text (tab or comma, picked from the header line) with columns
// path, label and optionally verified. Unknown columns are ignored.
Manifest LoadManifest(const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path, const Manifest& manifest);

struct SplitFractions {
  double train = 0.9;
  double validation = 0.0;
  double test = 0.1;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Stratified by label, disjoint and deterministic under `seed`. Every class
// must be large enough to place at least one item in each non-empty part.
SplitIndices StratifiedSplit(std::span<const int> labels, const SplitFractions& fractions,
                             std::uint64_t seed);

struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t bags_per_class = 50;
  std::size_t segments_per_bag = 20;
  std::size_t min_events = 2;  // event segments per bag, drawn in [min, max]
  std::size_t max_events = 2;
  double noise_level = 1.0;      // mean background power
  double event_amplitude = 8.0;  // peak event power above background
  std::size_t bins = kMelBins;
  std::size_t covered_bins = 100;  // class bands tile [0, covered_bins)
  ExpertConfig segmentation;       // conv/pool geometry defining segments
  std::uint64_t seed = 7;

  std::size_t frames() const {
    return segmentation.min_frames() + (segments_per_bag - 1) * segmentation.pool_stride;
  }
  void Validate() const;
};

struct SyntheticDataset {
  std::vector<Bag> bags;
  std::vector<std::string> class_names;
  // Nearest-centroid accuracy on mean event-frame features, computed at
  // generation time.
  double separability_accuracy = 0.0;
};

// Band-limited tone bursts over exponential background noise. Class c's
// signature occupies Mel-band window c of [0, covered_bins) with a
// class-specific temporal envelope; event frames sit centred in the
// receptive field of their masked segment.
SyntheticDataset GenerateSynthetic(const SyntheticSpec& spec);

// Frames [first, last) of the signature burst for masked segment k.
std::pair<std::size_t, std::size_t> EventFrames(const SyntheticSpec& spec, std::size_t k);

// Nearest-centroid (linear) classifier accuracy on the mean event-frame
// log features of each bag.
double EventSeparability(std::span<const Bag> bags, const SyntheticSpec& spec);

std::string MaskToString(std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> MaskFromString(const std::string& text);

// Writes features/<name>.feat, features/<name>.mask and manifest.tsv.
void WriteSyntheticDataset(const std::filesystem::path& dir, const SyntheticDataset& data);

// Features for a manifest record: <features_dir>/<stem>.feat when present,
// the record itself when it is a .feat file, otherwise the WAV is decoded.
MelSpectrogram LoadClipFeatures(const Manifest& manifest, const ManifestRecord& record,
                                const std::filesystem::path& features_dir);

// Loads every record into a Bag; sidecar .mask files are picked up if present.
std::vector<Bag> LoadBags(const Manifest& manifest, const std::filesystem::path& features_dir);

struct Padding {
  enum class Mode { kNone, kCenterToGlobal, kTrailingToBatchMax };
  Mode mode = Mode::kNone;
  std::size_t target_frames = 0;  // kCenterToGlobal only

  static Padding None() { return {}; }
  static Padding CenterTo(std::size_t t) { return {Mode::kCenterToGlobal, t}; }
  static Padding BatchMax() { return {Mode::kTrailingToBatchMax, 0}; }
};

std::string PaddingName(const Padding& padding);

MelSpectrogram ApplyPadding(const MelSpectrogram& spec, const Padding& padding,
                            std::size_t batch_max_frames);

struct Batch {
  std::vector<std::size_t> indices;  // into the bag list
  std::vector<MelSpectrogram> features;
  std::size_t frames = 0;  // common length when padded
  double padding_fraction = 0.0;  // zero frames / total frames
  std::vector<double> item_padding_fractions;
};

// Iterates `order` in chunks of `batch_size`, padding each batch.
class BatchIterator {
 public:
  BatchIterator(std::span<const Bag> bags, std::vector<std::size_t> order,
                std::size_t batch_size, Padding padding);
  BatchIterator(std::span<const Bag> bags, std::size_t batch_size, Padding padding);

  bool Next(Batch& batch);
  std::size_t num_batches() const;
  void Reset() { cursor_ = 0; }

 private:
  std::span<const Bag> bags_;
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  Padding padding_;
  std::size_t cursor_ = 0;
};

}  // namespace relnet

#endif  // RELNET_DATASET_H_
