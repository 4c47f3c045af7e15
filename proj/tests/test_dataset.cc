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

#include <algorithm>
#include <fstream>
#include <set>
#include <vector>

#include "relnet/dataset.h"
#include "test_util.h"

namespace relnet {
namespace {

using testing::TempDir;

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInternal;
}

TEST(Manifest, ParsesTabsAndCommas) {
  TempDir dir;
  WriteText(dir / "a.tsv", "path\tlabel\tverified\nx.wav\tdog\t1\ny.wav\tcat\t0\n");
  const Manifest tsv = LoadManifest(dir / "a.tsv");
  ASSERT_EQ(tsv.records.size(), 2u);
  EXPECT_EQ(tsv.vocabulary, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(tsv.Labels(), (std::vector<int>{1, 0}));
  EXPECT_FALSE(tsv.records[1].verified);
  EXPECT_EQ(tsv.Filter(true).records.size(), 1u);
  EXPECT_EQ(tsv.Resolve(tsv.records[0]), dir.path() / "x.wav");

  WriteText(dir / "b.csv", "# comment\nlabel,path\ncat,z.wav\n");
  const Manifest csv = LoadManifest(dir / "b.csv");
  EXPECT_EQ(csv.records[0].path, "z.wav");
  EXPECT_TRUE(csv.records[0].verified);
}

TEST(Manifest, Errors) {
  TempDir dir;
  EXPECT_EQ(CodeOf([&] { LoadManifest(dir / "missing.tsv"); }), ErrorCode::kNotFound);
  WriteText(dir / "empty.tsv", "");
  EXPECT_EQ(CodeOf([&] { LoadManifest(dir / "empty.tsv"); }), ErrorCode::kEmpty);
  WriteText(dir / "header_only.tsv", "path\tlabel\n");
  EXPECT_EQ(CodeOf([&] { LoadManifest(dir / "header_only.tsv"); }), ErrorCode::kEmpty);
  WriteText(dir / "dup.tsv", "path\tlabel\na.wav\tx\na.wav\ty\n");
  EXPECT_EQ(CodeOf([&] { LoadManifest(dir / "dup.tsv"); }), ErrorCode::kDuplicate);
  WriteText(dir / "cols.tsv", "file\tclass\na.wav\tx\n");
  EXPECT_EQ(CodeOf([&] { LoadManifest(dir / "cols.tsv"); }), ErrorCode::kInvalidArgument);
  WriteText(dir / "short.tsv", "path\tlabel\na.wav\n");
  EXPECT_EQ(CodeOf([&] { LoadManifest(dir / "short.tsv"); }), ErrorCode::kCorruptFile);
}

TEST(Manifest, WriteThenLoad) {
  TempDir dir;
  Manifest m;
  m.records = {{"a.feat", "x", true}, {"b.feat", "y", false}};
  WriteManifest(dir / "m.tsv", m);
  const Manifest back = LoadManifest(dir / "m.tsv");
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[1].path, "b.feat");
  EXPECT_FALSE(back.records[1].verified);
}

TEST(Split, StratifiedAndDisjoint) {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) labels.insert(labels.end(), 50, c);
  const SplitIndices s = StratifiedSplit(labels, {0.7, 0.1, 0.2}, 5);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), labels.size());
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), labels.size());
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return labels[i] == c; }),
              10);
  }
  EXPECT_EQ(StratifiedSplit(labels, {0.7, 0.1, 0.2}, 5).test, s.test);
  EXPECT_NE(StratifiedSplit(labels, {0.7, 0.1, 0.2}, 6).test, s.test);
}

TEST(Split, Errors) {
  const std::vector<int> labels = {0, 0, 1, 1};
  EXPECT_THROW(StratifiedSplit(labels, {0.5, 0.1, 0.1}, 1), Error);
  EXPECT_THROW(StratifiedSplit(labels, {1.2, 0.0, -0.2}, 1), Error);
  const std::vector<int> tiny = {0, 1};
  EXPECT_THROW(StratifiedSplit(tiny, {0.8, 0.0, 0.2}, 1), Error);
}

TEST(Synthetic, BenchmarkShape) {
  SyntheticSpec spec;
  const SyntheticDataset d = GenerateSynthetic(spec);
  ASSERT_EQ(d.bags.size(), 200u);
  EXPECT_EQ(d.class_names.size(), 4u);
  const std::size_t frames = spec.frames();
  EXPECT_EQ(spec.segmentation.SegmentCount(frames), 20u);
  for (const Bag& b : d.bags) {
    EXPECT_EQ(b.features.frames(), frames);
    EXPECT_EQ(b.features.bins(), kMelBins);
    ASSERT_EQ(b.mask.size(), 20u);
    EXPECT_EQ(std::count(b.mask.begin(), b.mask.end(), 1), 2);
    for (float v : b.features.values.data()) ASSERT_GE(v, 0.0f);
  }
  EXPECT_GE(d.separability_accuracy, 0.95);
}

TEST(Synthetic, EventsAreSparseAndNonAdjacent) {
  SyntheticSpec spec = testing::SmallSynthetic();
  spec.min_events = 1;
  spec.max_events = 3;
  const SyntheticDataset d = GenerateSynthetic(spec);
  for (const Bag& b : d.bags) {
    const auto n = std::count(b.mask.begin(), b.mask.end(), 1);
    EXPECT_GE(n, 1);
    EXPECT_LE(n, 3);
    for (std::size_t k = 0; k + 1 < b.mask.size(); ++k) EXPECT_FALSE(b.mask[k] && b.mask[k + 1]);
  }
}

// Event energy sits in the class band and inside the segment's frames.
TEST(Synthetic, EventEnergyLandsInClassBand) {
  SyntheticSpec spec = testing::SmallSynthetic();
  spec.noise_level = 0.0;
  const SyntheticDataset d = GenerateSynthetic(spec);
  const std::size_t width = spec.covered_bins / spec.num_classes;
  for (const Bag& b : d.bags) {
    const auto c = static_cast<std::size_t>(b.label);
    double inside = 0.0, outside = 0.0;
    for (std::size_t bin = 0; bin < kMelBins; ++bin) {
      for (std::size_t t = 0; t < b.features.frames(); ++t) {
        const double v = b.features.values(bin, t);
        (bin >= c * width && bin < (c + 1) * width ? inside : outside) += v;
      }
    }
    EXPECT_GT(inside, 0.0);
    EXPECT_EQ(outside, 0.0);
    for (std::size_t k = 0; k < b.mask.size(); ++k) {
      if (!b.mask[k]) continue;
      const auto [f0, f1] = EventFrames(spec, k);
      EXPECT_GE(f0, spec.segmentation.SegmentStartFrame(k));
      EXPECT_LE(f1, spec.segmentation.SegmentStartFrame(k) + spec.segmentation.min_frames());
    }
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  const SyntheticDataset a = GenerateSynthetic(testing::SmallSynthetic(3));
  const SyntheticDataset b = GenerateSynthetic(testing::SmallSynthetic(3));
  const SyntheticDataset c = GenerateSynthetic(testing::SmallSynthetic(4));
  ASSERT_EQ(a.bags.size(), b.bags.size());
  for (std::size_t i = 0; i < a.bags.size(); ++i) {
    EXPECT_EQ(a.bags[i].features.values, b.bags[i].features.values);
    EXPECT_EQ(a.bags[i].mask, b.bags[i].mask);
  }
  EXPECT_FALSE(a.bags[0].features.values == c.bags[0].features.values);
}

TEST(Synthetic, InvalidSpecs) {
  SyntheticSpec spec = testing::SmallSynthetic();
  spec.max_events = spec.segments_per_bag;
  EXPECT_THROW(GenerateSynthetic(spec), Error);
  spec = testing::SmallSynthetic();
  spec.num_classes = 1;
  EXPECT_THROW(GenerateSynthetic(spec), Error);
}

TEST(Synthetic, PersistAndReload) {
  TempDir dir;
  const SyntheticDataset d = GenerateSynthetic(testing::SmallSynthetic());
  WriteSyntheticDataset(dir.path(), d);
  const Manifest m = LoadManifest(dir / "manifest.tsv");
  EXPECT_EQ(m.vocabulary, d.class_names);
  const std::vector<Bag> bags = LoadBags(m, dir / "features");
  ASSERT_EQ(bags.size(), d.bags.size());
  for (std::size_t i = 0; i < bags.size(); ++i) {
    EXPECT_EQ(bags[i].name, d.bags[i].name);
    EXPECT_EQ(bags[i].label, d.bags[i].label);
    EXPECT_EQ(bags[i].mask, d.bags[i].mask);
    EXPECT_EQ(bags[i].features.values, d.bags[i].features.values);
  }
}

TEST(Masks, StringRoundTrip) {
  const std::vector<std::uint8_t> mask = {0, 1, 0, 0, 1};
  EXPECT_EQ(MaskToString(mask), "01001");
  EXPECT_EQ(MaskFromString("01001\n"), mask);
  EXPECT_THROW(MaskFromString("01x"), Error);
}

std::vector<Bag> BagsOfLengths(const std::vector<std::size_t>& frames) {
  std::vector<Bag> bags;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Bag b;
    b.name = "b" + std::to_string(i);
    b.features = testing::RandomSpectrogram(4, frames[i], i + 1);
    b.label = static_cast<int>(i % 2);
    bags.push_back(std::move(b));
  }
  return bags;
}

TEST(Batches, SizesOfTwoHundredFifty) {
  const std::vector<Bag> bags = BagsOfLengths(std::vector<std::size_t>(250, 20));
  BatchIterator it(bags, 100, Padding::None());
  EXPECT_EQ(it.num_batches(), 3u);
  std::vector<std::size_t> sizes;
  Batch batch;
  while (it.Next(batch)) sizes.push_back(batch.indices.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{100, 100, 50}));
  it.Reset();
  EXPECT_TRUE(it.Next(batch));
}

TEST(Batches, EqualLengthsNeedNoPadding) {
  const std::vector<Bag> bags = BagsOfLengths({30, 30, 30});
  BatchIterator it(bags, 10, Padding::BatchMax());
  Batch batch;
  ASSERT_TRUE(it.Next(batch));
  EXPECT_EQ(batch.padding_fraction, 0.0);
  EXPECT_EQ(batch.frames, 30u);
}

TEST(Batches, BatchMaxPadsTrailing) {
  const std::vector<Bag> bags = BagsOfLengths({10, 30, 20});
  BatchIterator it(bags, 10, Padding::BatchMax());
  Batch batch;
  ASSERT_TRUE(it.Next(batch));
  EXPECT_EQ(batch.frames, 30u);
  for (const auto& f : batch.features) EXPECT_EQ(f.frames(), 30u);
  EXPECT_EQ(batch.features[0].values(0, 10), 0.0f);
  EXPECT_EQ(batch.features[0].values(0, 9), bags[0].features.values(0, 9));
  EXPECT_DOUBLE_EQ(batch.padding_fraction, 30.0 / 90.0);
  EXPECT_EQ(batch.item_padding_fractions, (std::vector<double>{20.0 / 30.0, 0.0, 10.0 / 30.0}));
}

TEST(Batches, GlobalPaddingFraction) {
  const std::vector<Bag> bags = BagsOfLengths({300});
  BatchIterator it(bags, 100, Padding::CenterTo(1200));
  Batch batch;
  ASSERT_TRUE(it.Next(batch));
  EXPECT_EQ(batch.frames, 1200u);
  EXPECT_DOUBLE_EQ(batch.padding_fraction, 0.75);
  EXPECT_EQ(batch.features[0].values(2, 450), bags[0].features.values(2, 0));
}

TEST(Batches, CustomOrderAndErrors) {
  const std::vector<Bag> bags = BagsOfLengths({20, 20, 20});
  BatchIterator it(bags, std::vector<std::size_t>{2, 0}, 1, Padding::None());
  Batch batch;
  ASSERT_TRUE(it.Next(batch));
  EXPECT_EQ(batch.indices, (std::vector<std::size_t>{2}));
  EXPECT_THROW(BatchIterator(bags, std::vector<std::size_t>{}, 1, Padding::None()), Error);
  EXPECT_THROW(BatchIterator(bags, std::vector<std::size_t>{5}, 1, Padding::None()), Error);
  EXPECT_THROW(BatchIterator(bags, 0, Padding::None()), Error);
}

TEST(Padding, Names) {
  EXPECT_EQ(PaddingName(Padding::None()), "none");
  EXPECT_EQ(PaddingName(Padding::CenterTo(1200)), "center-to-1200");
}

}  // namespace
}  // namespace relnet
