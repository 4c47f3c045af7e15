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

#ifndef RELNET_TESTS_TEST_UTIL_H_
#define RELNET_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <random>
#include <string>

#include "relnet/dataset.h"
#include "relnet/network.h"
#include "relnet/rng.h"
#include "relnet/trainer.h"

namespace relnet::testing {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("relnet_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// A narrow trunk that trains in seconds.
inline ExpertConfig SmallConfig(std::uint64_t seed = 1) {
  ExpertConfig c;
  c.features_low = 6;
  c.features_mid = 6;
  c.features_high = 4;
  c.hidden_units = 12;
  c.seed = seed;
  return c;
}

inline TrainConfig QuickTraining(std::uint64_t seed = 3) {
  TrainConfig t;
  t.batch_size = 16;
  t.patience = 8;
  t.min_delta = 0.0;
  t.max_epochs = 40;
  t.adam.learning_rate = 3e-3;
  t.seed = seed;
  return t;
}

inline SyntheticSpec SmallSynthetic(std::uint64_t seed = 11) {
  SyntheticSpec s;
  s.num_classes = 3;
  s.bags_per_class = 16;
  s.segments_per_bag = 8;
  s.segmentation = SmallConfig();
  s.seed = seed;
  return s;
}

inline MelSpectrogram RandomSpectrogram(std::size_t bins, std::size_t frames,
                                        std::uint64_t seed) {
  Rng rng(seed);
  MelSpectrogram spec;
  spec.values = Tensor<float>({bins, frames});
  for (float& v : spec.values.data()) v = static_cast<float>(3.0 * UniformUnit(rng));
  return spec;
}

}  // namespace relnet::testing

#endif  // RELNET_TESTS_TEST_UTIL_H_
