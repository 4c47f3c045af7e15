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


// Acceptance run: one PASS/FAIL line per headline criterion, with runtimes.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grad_check.h"
#include "relnet/experiment.h"
#include "relnet/fusion.h"
#include "relnet/plot.h"
#include "relnet/relevance.h"
#include "relnet/rng.h"
#include "test_util.h"

namespace relnet {
namespace {

// High-precision references (mpmath, 40 digits).
constexpr double kOracleRMax_09_01_01 = 0.40833476794754845433;

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

// `elapsed` overrides the measured time for checks that evaluate work done
// earlier.
void Report(const std::string& name, const std::function<Outcome()>& check,
            double elapsed = -1.0) {
  const auto start = Clock::now();
  const Outcome o = check();
  const double seconds = elapsed >= 0.0 ? elapsed : Seconds(start);
  std::printf("%s  %-26s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds,
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

Outcome RelevanceSuite() {
  Rng rng(20260101);
  std::size_t violations = 0;
  double worst_perm = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(UniformUnit(rng) * 9);
    std::vector<double> p(n);
    for (double& v : p) v = UniformUnit(rng);
    const double h = Entropy(p);
    const double r_max = WeightedRelevance(p);
    const double max_p = *std::max_element(p.begin(), p.end());
    if (!(h >= 0.0 && h <= 1.0 && r_max >= 0.0 && r_max <= max_p)) ++violations;
    std::vector<double> q = p;
    std::shuffle(q.begin(), q.end(), rng);
    worst_perm = std::max(worst_perm, std::abs(WeightedRelevance(q) - r_max));
  }
  const double one_hot = WeightedRelevance(std::vector<double>{1.0, 0.0});
  const double uniform = WeightedRelevance(std::vector<double>{0.25, 0.25, 0.25, 0.25});
  const double peaked = WeightedRelevance(std::vector<double>{0.9, 0.1, 0.1});
  const bool ok = violations == 0 && worst_perm < 1e-12 && std::abs(one_hot - 1.0) < 1e-12 &&
                  std::abs(uniform) < 1e-12 && std::abs(peaked - kOracleRMax_09_01_01) < 1e-6;
  return {ok, Fmt("10^4 columns, %.0f bound violations, perm diff %.1e, [0.9,0.1,0.1] err %.1e",
                  static_cast<double>(violations), worst_perm,
                  std::abs(peaked - kOracleRMax_09_01_01))};
}

Outcome GradientCheck() {
  ExpertConfig cfg;
  cfg.features_low = 8;
  cfg.features_mid = 8;
  cfg.features_high = 4;
  cfg.hidden_units = 20;
  Trunk<double> trunk = Trunk<float>::Initialize(cfg, 2, 21).Cast<double>();
  Rng rng(4);
  for (double& v : trunk.head.weights.data()) v = Uniform(rng, -0.3, 0.3);
  const std::size_t params = trunk.ParameterCount();
  const auto spec = testing::RandomSpectrogram(kMelBins, 28, 8);
  const std::vector<double> weights = {0.3, 0.9, 0.05, 0.6};
  const auto r = testing::CheckTrunkGradient(trunk, spec.values, weights, 1);
  const bool ok = params <= 10000 && r.max_rel_error < 1e-4 && r.checked > 0.99 * params;
  return {ok, Fmt("%.0f params, %.0f checked, %.0f at ReLU kinks, max rel err %.2e",
                  static_cast<double>(params), static_cast<double>(r.checked),
                  static_cast<double>(r.skipped), r.max_rel_error)};
}

double PooledMean(const std::vector<RelevanceProfile>& profiles, const std::vector<Bag>& bags,
                  bool masked) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    for (std::size_t k = 0; k < profiles[j].segments(); ++k) {
      if ((bags[j].mask[k] != 0) == masked) {
        sum += profiles[j].relevance[k];
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

Outcome Localization(const BenchmarkResult& b, const std::vector<Bag>& test, double expert_seconds,
                     const std::filesystem::path& out) {
  const ExpertSet set(b.models.experts);
  std::vector<RelevanceProfile> profiles;
  for (const Bag& bag : test) profiles.push_back(ComputeRelevanceProfile(bag.features, set));
  const double event = PooledMean(profiles, test, true);
  const double background = PooledMean(profiles, test, false);
  if (!out.empty()) {
    const std::vector<PlotCurve> curves = {{test[0].name, profiles[0]}};
    PlotOptions opt;
    opt.title = "R_max, held-out bag " + test[0].name;
    opt.mask = test[0].mask;
    std::ofstream(out / "localization.svg") << RenderRelevanceSvg(curves, opt);
  }
  const bool ok = event >= 2.0 * background && expert_seconds < 600.0;
  return {ok, Fmt("event %.4f vs background %.4f (ratio %.2f), experts trained in %.0fs", event,
                  background, background > 0 ? event / background : INFINITY, expert_seconds)};
}

Outcome ContextAdaptivity(const BenchmarkResult& b, const std::vector<Bag>& test) {
  const std::size_t n = b.models.experts.size();
  std::size_t increased = 0;
  for (const Bag& bag : test) {
    const int c = bag.label;
    const std::vector<int> pair = {static_cast<int>((c + 1) % n), static_cast<int>((c + 2) % n)};
    const ExpertSet two = ExpertSet(b.models.experts).Subset(pair);
    const ExpertSet three = two.With(b.models.experts[c]);
    const double before = ComputeRelevanceProfile(bag.features, two).Mean(bag.mask, true);
    const double after = ComputeRelevanceProfile(bag.features, three).Mean(bag.mask, true);
    if (after > before) ++increased;
  }
  const double fraction = static_cast<double>(increased) / static_cast<double>(test.size());
  return {fraction >= 0.9, Fmt("event R_max rose on %.0f of %.0f held-out positive clips (%.1f%%)",
                               static_cast<double>(increased), static_cast<double>(test.size()),
                               100.0 * fraction)};
}

Outcome PaddedOrdering(const BenchmarkResult& b, const BenchmarkConfig& config,
                       double total_seconds) {
  const ModelScores& conv = b.report.Find(kConvnetName);
  const ModelScores& rel = b.report.Find(kRelnetName);
  const double conv_gap = conv.padded - conv.unpadded;
  const double rel_gap = rel.padded - rel.unpadded;
  const double fraction =
      PaddingSegmentFraction(config.model, config.data.frames(), config.pad_frames);
  const bool ok = fraction >= 0.6 && rel.padded > conv.padded &&
                  std::abs(rel_gap) < std::abs(conv_gap) && total_seconds < 1800.0;
  return {ok, Fmt("padding %.0f%%; padded MAP@3 RELNET %.3f vs CONVNET %.3f; ", 100.0 * fraction,
                  rel.padded, conv.padded) +
                  Fmt("|gap| RELNET %.3f vs CONVNET %.3f; end to end %.0fs", std::abs(rel_gap),
                      std::abs(conv_gap), total_seconds)};
}

// Relevance votes for the argmax expert, computed without the fusion code.
std::vector<double> RelevanceBranchScores(const ProbabilityMatrix& probs) {
  std::vector<double> score(probs.experts(), 0.0);
  for (std::size_t k = 0; k < probs.segments(); ++k) {
    std::size_t best = 0;
    double total = 0.0;
    for (std::size_t n = 0; n < probs.experts(); ++n) {
      total += probs.values(n, k);
      if (probs.values(n, k) > probs.values(best, k)) best = n;
    }
    if (total <= kColumnEpsilon) continue;
    double h = 0.0;
    for (std::size_t n = 0; n < probs.experts(); ++n) {
      const double p = probs.values(n, k) / total;
      if (p > 0.0) h -= p * std::log(p);
    }
    h = std::clamp(h / std::log(static_cast<double>(probs.experts())), 0.0, 1.0);
    score[best] += (1.0 - h) * probs.values(best, k);
  }
  return score;
}

Outcome FusionIdentities(const BenchmarkResult& b, const std::vector<Bag>& test) {
  Rng rng(99);
  std::size_t mv_mismatch = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(UniformUnit(rng) * 6);
    const std::size_t s = 1 + static_cast<std::size_t>(UniformUnit(rng) * 30);
    ProbabilityMatrix m;
    m.values = Tensor<double>({n, s});
    for (double& v : m.values.data()) v = UniformUnit(rng);
    const std::vector<double> ones(s, 1.0);
    if (Fuse(m, FusionMode::kRV, ones).ranking != Fuse(m, FusionMode::kMV).ranking) {
      ++mv_mismatch;
    }
  }
  const ExpertSet set(b.models.experts);
  std::size_t rv_mismatch = 0;
  double worst = 0.0;
  for (const Bag& bag : test) {
    const ProbabilityMatrix probs = ExpertProbabilities(bag.features, set);
    const RelevanceProfile profile = ComputeRelevanceProfile(probs, set.names());
    const FusionResult rv = Fuse(probs, FusionMode::kRV, profile.relevance);
    const std::vector<double> expected = RelevanceBranchScores(probs);
    for (std::size_t n = 0; n < expected.size(); ++n) {
      worst = std::max(worst, std::abs(expected[n] - rv.scores[n]));
    }
    if (RankScores(expected) != rv.ranking) ++rv_mismatch;
  }
  return {mv_mismatch == 0 && rv_mismatch == 0 && worst < 1e-9,
          Fmt("RV(R=1) vs MV: %.0f/1000 differ; RV vs relevance branch: %.0f/%.0f differ, max "
              "score diff %.1e",
              static_cast<double>(mv_mismatch), static_cast<double>(rv_mismatch),
              static_cast<double>(test.size()), worst)};
}

bool SameBits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

bool SameBits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool SameBits(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Outcome Determinism(const BenchmarkResult& b, const std::vector<Bag>& test) {
  // Two full runs of a reduced benchmark from the same seed.
  BenchmarkConfig small;
  small.data.num_classes = 3;
  small.data.bags_per_class = 12;
  small.data.segments_per_bag = 8;
  small.model = testing::SmallConfig(5);
  small.train = testing::QuickTraining(6);
  small.train.max_epochs = 12;
  small.data.segmentation = small.model;
  small.pad_frames = 2 * small.data.frames();
  small.seed = 31;
  const std::string first = RunSyntheticBenchmark(small).report.ToJson();
  const std::string second = RunSyntheticBenchmark(small).report.ToJson();
  const bool reports_equal = first == second;

  // Save and reload every model of the main run.
  testing::TempDir dir;
  std::vector<std::shared_ptr<const ExpertModel>> experts;
  for (const auto& e : b.models.experts) {
    const auto path = dir / (e->class_name() + ".expert");
    SaveExpert(*e, path);
    experts.push_back(std::make_shared<const ExpertModel>(LoadExpert(path)));
  }
  SaveClassifier(b.models.convnet, dir / "model.convnet");
  SaveRelnet(b.models.relnet, dir / "model.relnet");
  ModelSuite loaded{experts, LoadClassifier(dir / "model.convnet"),
                    LoadRelnet(dir / "model.relnet", experts)};
  std::size_t differing = 0;
  for (const Bag& bag : test) {
    bool same = true;
    for (std::size_t n = 0; n < experts.size(); ++n) {
      same &= SameBits(experts[n]->PositiveProb(bag.features),
                       b.models.experts[n]->PositiveProb(bag.features));
    }
    const auto c0 = b.models.convnet.Forward(bag.features);
    const auto c1 = loaded.convnet.Forward(bag.features);
    same &= SameBits(c0.clip.probs, c1.clip.probs) && SameBits(c0.segment_probs, c1.segment_probs);
    const auto r0 = b.models.relnet.Forward(bag.features);
    const auto r1 = loaded.relnet.Forward(bag.features);
    same &= SameBits(r0.clip.probs, r1.clip.probs) &&
            SameBits(r0.relevance.relevance, r1.relevance.relevance);
    if (!same) ++differing;
  }
  ExperimentReport again = RunExperiment(b.data.bags, b.split.test, loaded,
                                         b.report.pad_frames, b.report.metric);
  again.seed = b.report.seed;
  again.config_json = b.report.config_json;
  const bool report_equal = again.ToJson() == b.report.ToJson();
  return {reports_equal && differing == 0 && report_equal,
          std::string("same-seed reports ") + (reports_equal ? "identical" : "DIFFER") +
              "; reloaded inference " +
              (differing == 0 ? "bit-identical" : "differs on " + std::to_string(differing)) +
              " on " + std::to_string(test.size()) + " bags; reloaded report " +
              (report_equal ? "identical" : "DIFFERS")};
}

}  // namespace
}  // namespace relnet

int main(int argc, char** argv) {
  using namespace relnet;
  CLI::App app{"Acceptance run on the synthetic benchmark"};
  std::string out;
  std::uint64_t seed = 7;
  app.add_option("--out", out, "Directory for the report and relevance plot");
  app.add_option("--seed", seed, "Benchmark seed");
  CLI11_PARSE(app, argc, argv);
  const std::filesystem::path out_dir(out);
  if (!out.empty()) std::filesystem::create_directories(out_dir);

  Report("relevance_formula_suite", RelevanceSuite);
  Report("gradient_check", GradientCheck);

  BenchmarkConfig config = DeskBenchmark();
  config.seed = seed;
  Clock::time_point experts_start, experts_end;
  const auto start = Clock::now();
  const BenchmarkResult bench = RunSyntheticBenchmark(config, [&](const std::string& msg) {
    if (msg.rfind("training", 0) == 0 && msg.find("experts") != std::string::npos) {
      experts_start = Clock::now();
    } else if (msg == "training CONVNET") {
      experts_end = Clock::now();
    }
    std::fprintf(stderr, "[%7.1fs] %s\n", Seconds(start), msg.c_str());
  });
  const double total = Seconds(start);
  const double expert_seconds = std::chrono::duration<double>(experts_end - experts_start).count();
  std::fprintf(stderr, "%s", bench.report.ToTable().c_str());
  if (!out.empty()) std::ofstream(out_dir / "report.json") << bench.report.ToJson();

  std::vector<Bag> test;
  for (std::size_t i : bench.split.test) test.push_back(bench.data.bags[i]);

  Report(
      "event_localization",
      [&] { return Localization(bench, test, expert_seconds, out_dir); }, expert_seconds);
  Report("context_adaptivity", [&] { return ContextAdaptivity(bench, test); });
  Report("padded_ordering", [&] { return PaddedOrdering(bench, config, total); }, total);
  Report("fusion_identities", [&] { return FusionIdentities(bench, test); });
  Report("determinism_serialization", [&] { return Determinism(bench, test); });
  std::printf("%d criteria failed\n", failures);
  return failures;
}
