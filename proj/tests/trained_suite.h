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


// A small trained suite shared by the model-level tests; built once per
// process.

#ifndef RELNET_TESTS_TRAINED_SUITE_H_
#define RELNET_TESTS_TRAINED_SUITE_H_

#include <memory>
#include <vector>

#include "relnet/experiment.h"
#include "test_util.h"

namespace relnet::testing {

struct TrainedSuite {
  SyntheticDataset data;
  SplitIndices split;
  std::vector<Bag> train_bags;
  ModelSuite models;
  std::size_t pad_frames = 0;
};

inline TrainConfig SuiteTraining() {
  TrainConfig t = QuickTraining();
  t.max_epochs = 60;
  t.patience = 10;
  t.min_delta = 0.001;
  return t;
}

inline const TrainedSuite& SharedSuite() {
  static const TrainedSuite suite = [] {
    TrainedSuite s;
    SyntheticSpec spec = SmallSynthetic(5);
    spec.bags_per_class = 20;
    s.data = GenerateSynthetic(spec);
    std::vector<int> labels;
    for (const Bag& b : s.data.bags) labels.push_back(b.label);
    s.split = StratifiedSplit(labels, {0.75, 0.0, 0.25}, 77);
    for (std::size_t i : s.split.train) s.train_bags.push_back(s.data.bags[i]);
    s.pad_frames = 4 * spec.frames();

    const ExpertConfig cfg = SmallConfig(9);
    for (ExpertModel& e : TrainExperts(s.train_bags, s.data.class_names, cfg, SuiteTraining(), 1)) {
      s.models.experts.push_back(std::make_shared<const ExpertModel>(std::move(e)));
    }
    TrainConfig padded = SuiteTraining();
    padded.padding = Padding::CenterTo(s.pad_frames);
    s.models.convnet = TrainSegmentClassifier(s.train_bags, s.data.class_names, cfg, padded);
    s.models.relnet = TrainRelnet(s.train_bags, ExpertSet(s.models.experts), cfg, padded);
    return s;
  }();
  return suite;
}

}  // namespace relnet::testing

#endif  // RELNET_TESTS_TRAINED_SUITE_H_
