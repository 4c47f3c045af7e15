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

#include "relnet/plot.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace relnet {
namespace {

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Segment k spans [t_k, t_{k+1}); the last one reuses the previous width.
double SegmentEnd(const RelevanceProfile& p, std::size_t k) {
  if (k + 1 < p.segment_times.size()) return p.segment_times[k + 1];
  if (p.segment_times.size() >= 2) {
    return p.segment_times[k] + (p.segment_times[1] - p.segment_times[0]);
  }
  return p.segment_times[k] + 1.0;
}

}  // namespace

std::string RenderRelevanceSvg(std::span<const PlotCurve> curves, const PlotOptions& options) {
  Require(!curves.empty(), ErrorCode::kEmpty, "nothing to plot");
  for (const PlotCurve& c : curves) {
    Require(c.profile.segments() > 0 && c.profile.segment_times.size() == c.profile.segments(),
            ErrorCode::kInvalidArgument, "curve '" + c.label + "' has no segments");
  }
  const double left = 56, right = 16, top = options.title.empty() ? 16 : 36, bottom = 44;
  const double w = options.width - left - right;
  const double h = options.height - top - bottom;
  double t_max = 0.0;
  for (const PlotCurve& c : curves) {
    t_max = std::max(t_max, SegmentEnd(c.profile, c.profile.segments() - 1));
  }
  auto x = [&](double t) { return left + w * t / t_max; };
  auto y = [&](double r) { return top + h * (1.0 - std::clamp(r, 0.0, 1.0)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
     << options.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << Escape(options.title)
       << "</text>\n";
  }

  const RelevanceProfile& first = curves.front().profile;
  if (options.mask.size() == first.segments()) {
    for (std::size_t k = 0; k < first.segments(); ++k) {
      if (options.mask[k] == 0) continue;
      os << "<rect x=\"" << Num(x(first.segment_times[k])) << "\" y=\"" << top << "\" width=\""
         << Num(x(SegmentEnd(first, k)) - x(first.segment_times[k])) << "\" height=\"" << h
         << "\" fill=\"#f3d9a4\"/>\n";
    }
  }

  // Axes and ticks.
  os << "<g stroke=\"#444\" fill=\"none\">\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + h << "\" x2=\"" << left + w << "\" y2=\""
     << top + h << "\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + h
     << "\"/>\n</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double r = i / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << Num(y(r) + 4) << "\" text-anchor=\"end\">"
       << Num(r) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = t_max * i / 5.0;
    os << "<text x=\"" << Num(x(t)) << "\" y=\"" << top + h + 16
       << "\" text-anchor=\"middle\">" << Num(t) << "</text>\n";
  }
  os << "<text x=\"" << left + w / 2 << "\" y=\"" << options.height - 8
     << "\" text-anchor=\"middle\">time (s)</text>\n";
  os << "<text transform=\"translate(14," << top + h / 2
     << ") rotate(-90)\" text-anchor=\"middle\">relevance</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const RelevanceProfile& p = curves[c].profile;
    const char* color = kColors[c % std::size(kColors)];
    os << "<polyline class=\"curve\" data-label=\"" << Escape(curves[c].label)
       << "\" fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color << "\" points=\"";
    for (std::size_t k = 0; k < p.segments(); ++k) {
      os << Num(x(p.segment_times[k])) << ',' << Num(y(p.relevance[k])) << ' '
         << Num(x(SegmentEnd(p, k))) << ',' << Num(y(p.relevance[k])) << ' ';
    }
    os << "\"/>\n";
    if (options.top_expert_labels) {
      for (std::size_t k = 0; k < p.segments(); ++k) {
        if (k > 0 && p.top_expert[k] == p.top_expert[k - 1]) continue;
        os << "<text x=\"" << Num(x(p.segment_times[k]) + 2) << "\" y=\""
           << Num(y(p.relevance[k]) - 4) << "\" fill=\"" << color << "\" font-size=\"9\">"
           << Escape(p.expert_names.at(p.top_expert[k])) << "</text>\n";
      }
    }
    os << "<text x=\"" << left + w - 4 << "\" y=\"" << top + 14 + 14 * c
       << "\" text-anchor=\"end\" fill=\"" << color << "\">" << Escape(curves[c].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace relnet
