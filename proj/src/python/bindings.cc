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


// Python bindings: relevance, fusion, metrics, features, synthetic data and
// expert inference.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "relnet/dataset.h"
#include "relnet/error.h"
#include "relnet/expert.h"
#include "relnet/features.h"
#include "relnet/fusion.h"
#include "relnet/plot.h"
#include "relnet/relevance.h"

namespace py = pybind11;

namespace relnet {
namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

EntropyMode Mode(bool literal) { return literal ? EntropyMode::kLiteral : EntropyMode::kNormalized; }

std::vector<double> Column(const DoubleArray& a) {
  Require(a.ndim() == 1, ErrorCode::kShapeMismatch, "expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

ProbabilityMatrix Matrix(const DoubleArray& a) {
  Require(a.ndim() == 2, ErrorCode::kShapeMismatch, "expected a 2-D [experts, segments] array");
  ProbabilityMatrix m;
  m.values = Tensor<double>({static_cast<std::size_t>(a.shape(0)),
                             static_cast<std::size_t>(a.shape(1))});
  std::copy(a.data(), a.data() + a.size(), m.values.data().begin());
  m.segment_times.resize(m.segments());
  return m;
}

MelSpectrogram Spectrogram(const FloatArray& a) {
  Require(a.ndim() == 2, ErrorCode::kShapeMismatch, "expected a 2-D [bins, frames] array");
  MelSpectrogram spec;
  spec.values = Tensor<float>({static_cast<std::size_t>(a.shape(0)),
                               static_cast<std::size_t>(a.shape(1))});
  std::copy(a.data(), a.data() + a.size(), spec.values.data().begin());
  return spec;
}

FloatArray ToArray(const MelSpectrogram& spec) {
  FloatArray out({spec.bins(), spec.frames()});
  std::copy(spec.values.data().begin(), spec.values.data().end(), out.mutable_data());
  return out;
}

DoubleArray ToArray(const Tensor<double>& t) {
  DoubleArray out({t.dim(0), t.dim(1)});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

}  // namespace
}  // namespace relnet

PYBIND11_MODULE(_relnet, m) {
  using namespace relnet;
  m.doc() = "Entropy relevance, late fusion and expert inference for weakly labelled audio.";

  static py::exception<Error> error(m, "RelnetError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      instance.attr("code") = std::string(ErrorCodeName(e.code()));
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  m.def(
      "entropy", [](const DoubleArray& p, bool literal) { return Entropy(Column(p), Mode(literal)); },
      py::arg("p"), py::arg("literal") = false, "Entropy of one segment's expert outputs.");
  m.def(
      "relevance",
      [](const DoubleArray& p, bool literal) { return Relevance(Column(p), Mode(literal)); },
      py::arg("p"), py::arg("literal") = false, "R = 1 - H.");
  m.def(
      "weighted_relevance",
      [](const DoubleArray& p, bool literal) {
        return WeightedRelevance(Column(p), Mode(literal));
      },
      py::arg("p"), py::arg("literal") = false, "R_max = R * max P.");
  m.def(
      "relevance_profile",
      [](const DoubleArray& probs, bool literal) {
        const ProbabilityMatrix pm = Matrix(probs);
        const RelevanceProfile p =
            ComputeRelevanceProfile(pm, std::vector<std::string>(pm.experts()), Mode(literal));
        return py::make_tuple(p.relevance, p.top_expert);
      },
      py::arg("probs"), py::arg("literal") = false,
      "(R_max per segment, argmax expert per segment) for a [experts, segments] array.");

  m.def(
      "fuse",
      [](const DoubleArray& probs, const std::string& mode, std::optional<DoubleArray> relevance) {
        const std::vector<double> r = relevance ? Column(*relevance) : std::vector<double>{};
        const FusionResult f = Fuse(Matrix(probs), ParseFusionMode(mode), r);
        return py::make_tuple(f.scores, f.ranking);
      },
      py::arg("probs"), py::arg("mode"), py::arg("relevance") = py::none(),
      "Late fusion (MV, SUM, PROD or RV) of [experts, segments] outputs.");
  m.def(
      "rank_scores", [](const DoubleArray& s) { return RankScores(Column(s)); }, py::arg("scores"));
  m.def(
      "map_at3",
      [](const std::vector<std::vector<std::size_t>>& r, const std::vector<std::size_t>& t) {
        return MapAt3(r, t);
      },
      py::arg("rankings"), py::arg("truths"));
  m.def(
      "recall_at3",
      [](const std::vector<std::vector<std::size_t>>& r, const std::vector<std::size_t>& t) {
        return RecallAt3(r, t);
      },
      py::arg("rankings"), py::arg("truths"));

  m.def(
      "mel_spectrogram",
      [](const FloatArray& samples, int sample_rate) {
        Require(samples.ndim() == 1, ErrorCode::kShapeMismatch, "expected mono samples");
        AudioClip clip;
        clip.samples.assign(samples.data(), samples.data() + samples.size());
        clip.sample_rate = sample_rate;
        return ToArray(ComputeMelSpectrogram(Resample(clip)));
      },
      py::arg("samples"), py::arg("sample_rate") = kTargetSampleRate,
      "128-bin mel power spectrogram at 44.1 kHz, shape [bins, frames].");
  m.def(
      "pad_center",
      [](const FloatArray& spec, std::size_t frames) {
        return ToArray(PadCenter(Spectrogram(spec), frames));
      },
      py::arg("spec"), py::arg("frames"));

  m.def(
      "generate_synthetic",
      [](std::size_t num_classes, std::size_t bags_per_class, std::size_t segments_per_bag,
         std::uint64_t seed) {
        SyntheticSpec spec;
        spec.num_classes = num_classes;
        spec.bags_per_class = bags_per_class;
        spec.segments_per_bag = segments_per_bag;
        spec.seed = seed;
        const SyntheticDataset data = GenerateSynthetic(spec);
        py::list bags;
        for (const Bag& b : data.bags) {
          py::dict d;
          d["name"] = b.name;
          d["label"] = b.label;
          d["features"] = ToArray(b.features);
          d["mask"] = b.mask;
          bags.append(d);
        }
        return py::make_tuple(bags, data.class_names);
      },
      py::arg("num_classes") = 4, py::arg("bags_per_class") = 50,
      py::arg("segments_per_bag") = 20, py::arg("seed") = 7,
      "Seeded synthetic bags with per-segment event masks.");

  py::class_<ExpertModel, std::shared_ptr<ExpertModel>>(m, "Expert")
      .def(py::init([](int class_id, const std::string& class_name, std::size_t hidden_units,
                       std::uint64_t seed) {
             ExpertConfig c;
             c.hidden_units = hidden_units;
             c.seed = seed;
             return std::make_shared<ExpertModel>(c, class_id, class_name);
           }),
           py::arg("class_id"), py::arg("class_name"), py::arg("hidden_units") = 100,
           py::arg("seed") = 1, "An untrained expert.")
      .def_property_readonly("class_id", &ExpertModel::class_id)
      .def_property_readonly("class_name", &ExpertModel::class_name)
      .def_property_readonly("checksum", &ExpertModel::Checksum)
      .def_property_readonly("min_frames", [](const ExpertModel& e) { return e.config().min_frames(); })
      .def(
          "positive_prob",
          [](const ExpertModel& e, const FloatArray& spec) {
            return e.PositiveProb(Spectrogram(spec));
          },
          py::arg("spec"), "P(positive) for every segment.")
      .def("save", [](const ExpertModel& e, const std::filesystem::path& p) { SaveExpert(e, p); });

  m.def(
      "load_expert",
      [](const std::filesystem::path& p) { return std::make_shared<ExpertModel>(LoadExpert(p)); },
      py::arg("path"));
  m.def(
      "expert_probabilities",
      [](const FloatArray& spec, const std::vector<std::shared_ptr<ExpertModel>>& experts) {
        std::vector<const ExpertModel*> ptrs;
        for (const auto& e : experts) ptrs.push_back(e.get());
        return ToArray(ExpertProbabilities(Spectrogram(spec), ptrs).values);
      },
      py::arg("spec"), py::arg("experts"), "[experts, segments] positive probabilities.");

  m.def(
      "render_relevance_svg",
      [](const std::vector<std::tuple<std::string, std::vector<double>>>& curves,
         const std::string& title) {
        std::vector<PlotCurve> pc;
        for (const auto& [label, r] : curves) {
          RelevanceProfile p;
          p.relevance = r;
          p.top_expert.assign(r.size(), 0);
          p.expert_names = {label};
          for (std::size_t k = 0; k < r.size(); ++k) p.segment_times.push_back(static_cast<double>(k));
          pc.push_back({label, std::move(p)});
        }
        PlotOptions opt;
        opt.title = title;
        opt.top_expert_labels = false;
        return RenderRelevanceSvg(pc, opt);
      },
      py::arg("curves"), py::arg("title") = "", "SVG of (label, R_max per segment) curves.");
}
