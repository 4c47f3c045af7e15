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

#ifndef RELNET_PLOT_H_
#define RELNET_PLOT_H_

#include <cstdint>
#include <span>
#include <string>

#include "relnet/relevance.h"

namespace relnet {

struct PlotCurve {
  std::string label;
  RelevanceProfile profile;
};

struct PlotOptions {
  std::string title;
  int width = 900;
  int height = 360;
  bool top_expert_labels = true;
  // Optional per-segment event mask of the first curve, drawn as shading.
  std::span<const std::uint8_t> mask;
};

// Step plot of R_max over time, one polyline per curve, with the top
// expert's name written above each run of segments it wins.
std::string RenderRelevanceSvg(std::span<const PlotCurve> curves, const PlotOptions& options);

}  // namespace relnet

#endif  // RELNET_PLOT_H_
