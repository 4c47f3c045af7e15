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

#include "relnet/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include "relnet/binary_io.h"
#include "relnet/error.h"

namespace relnet {
namespace {

constexpr double kPi = std::numbers::pi;

// Zero crossings of the sinc kernel on each side at full bandwidth.
constexpr int kSincZeroCrossings = 16;

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Blackman window over [-1, 1].
double Blackman(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  const double a = kPi * (u + 1.0);
  return 0.42 - 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a);
}

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& FftwPlanMutex() {
  static std::mutex mu;
  return mu;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard<std::mutex> lock(FftwPlanMutex());
    fftw_destroy_plan(plan);
  }
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

void BandSplit::Validate(std::size_t bins) const {
  Require(low > 0 && mid > 0 && high > 0, ErrorCode::kInvalidArgument,
          "band split counts must all be positive");
  Require(total() <= bins, ErrorCode::kInvalidArgument,
          "band split covers " + std::to_string(total()) + " bins but the spectrogram has " +
              std::to_string(bins));
}

AudioClip Resample(const AudioClip& clip, int target_rate) {
  Require(!clip.samples.empty(), ErrorCode::kEmpty, "resample: empty audio clip");
  Require(clip.sample_rate > 0 && target_rate > 0, ErrorCode::kInvalidArgument,
          "resample: sample rates must be positive");
  if (clip.sample_rate == target_rate) return clip;

  const long g = std::gcd(static_cast<long>(clip.sample_rate), static_cast<long>(target_rate));
  const long up = target_rate / g;
  const long down = clip.sample_rate / g;
  // Cutoff relative to the input Nyquist; below 1 when downsampling.
  const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const long half = static_cast<long>(std::ceil(kSincZeroCrossings / cutoff));
  const long taps = 2 * half;

  auto kernel = [&](double x) {
    return cutoff * Sinc(cutoff * x) * Blackman(x / static_cast<double>(half));
  };

  const long in_len = static_cast<long>(clip.samples.size());
  const long out_len = static_cast<long>((static_cast<__int128>(in_len) * up) / down);
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));

  // Polyphase table: one filter per output phase.
  const bool tabulate = up <= 8192;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (long phase = 0; phase < up; ++phase) {
      const double frac = static_cast<double>(phase) / static_cast<double>(up);
      for (long d = -half + 1; d <= half; ++d) {
        table[static_cast<std::size_t>(phase * taps + d + half - 1)] = kernel(frac - d);
      }
    }
  }

  for (long n = 0; n < out_len; ++n) {
    const __int128 pos = static_cast<__int128>(n) * down;
    const long base = static_cast<long>(pos / up);
    const long phase = static_cast<long>(pos % up);
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double acc = 0.0;
    for (long d = -half + 1; d <= half; ++d) {
      const long j = base + d;
      if (j < 0 || j >= in_len) continue;
      const double h = tabulate ? table[static_cast<std::size_t>(phase * taps + d + half - 1)]
                                : kernel(frac - d);
      acc += h * clip.samples[static_cast<std::size_t>(j)];
    }
    out.samples[static_cast<std::size_t>(n)] = static_cast<float>(acc);
  }
  return out;
}

Tensor<double> PowerSpectrogram(const AudioClip& clip, const StftOptions& options) {
  const std::size_t n = options.frame_length;
  Require(n >= 2 && options.hop_length >= 1, ErrorCode::kInvalidArgument,
          "stft: invalid frame/hop length");
  Require(clip.samples.size() >= n, ErrorCode::kInputTooShort,
          "clip has " + std::to_string(clip.samples.size()) +
              " samples; the minimum length is " + std::to_string(n) +
              " samples (one " + std::to_string(n) + "-sample frame)");
  const std::size_t frames = FrameCount(clip.samples.size(), n, options.hop_length);
  const std::size_t freqs = n / 2 + 1;

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * freqs)));
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard<std::mutex> lock(FftwPlanMutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  Require(plan != nullptr, ErrorCode::kInternal, "fftw planning failed");

  std::vector<double> window(n);
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  }

  Tensor<double> power({freqs, frames});
  for (std::size_t f = 0; f < frames; ++f) {
    const float* src = clip.samples.data() + f * options.hop_length;
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = window[i] * src[i];
    fftw_execute_dft_r2c(plan.get(), in.get(), out.get());
    for (std::size_t k = 0; k < freqs; ++k) {
      const double re = out.get()[k][0];
      const double im = out.get()[k][1];
      power(k, f) = re * re + im * im;
    }
  }
  return power;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor<double> MelFilterbank(int sample_rate, std::size_t frame_length, std::size_t bins) {
  Require(bins >= 1 && sample_rate > 0, ErrorCode::kInvalidArgument,
          "mel filterbank: invalid parameters");
  const std::size_t freqs = frame_length / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = HzToMel(nyquist);
  std::vector<double> edges(bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_max * static_cast<double>(i) / static_cast<double>(bins + 1));
  }
  Tensor<double> fb({bins, freqs});
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = edges[b];
    const double center = edges[b + 1];
    const double hi = edges[b + 2];
    for (std::size_t k = 0; k < freqs; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(frame_length);
      const double rise = (f - lo) / (center - lo);
      const double fall = (hi - f) / (hi - center);
      fb(b, k) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

MelSpectrogram ComputeMelSpectrogram(const AudioClip& clip, std::size_t bins) {
  Require(!clip.samples.empty(), ErrorCode::kEmpty, "mel spectrogram: empty audio clip");
  const AudioClip resampled =
      clip.sample_rate == kTargetSampleRate ? clip : Resample(clip, kTargetSampleRate);
  const Tensor<double> power = PowerSpectrogram(resampled);
  const Tensor<double> fb = MelFilterbank(kTargetSampleRate, kFrameLength, bins);
  const std::size_t frames = power.dim(1);
  const std::size_t freqs = power.dim(0);

  MelSpectrogram spec;
  spec.values = Tensor<float>({bins, frames});
  spec.frame_hop_seconds = static_cast<double>(kHopLength) / kTargetSampleRate;
  std::vector<double> acc(frames);
  for (std::size_t b = 0; b < bins; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < freqs; ++k) {
      const double w = fb(b, k);
      if (w == 0.0) continue;
      const double* p = power.row(k).data();
      for (std::size_t f = 0; f < frames; ++f) acc[f] += w * p[f];
    }
    for (std::size_t f = 0; f < frames; ++f) spec.values(b, f) = static_cast<float>(acc[f]);
  }
  return spec;
}

namespace {

MelSpectrogram PadAt(const MelSpectrogram& spec, std::size_t target, std::size_t left) {
  MelSpectrogram out;
  out.frame_hop_seconds = spec.frame_hop_seconds;
  out.values = Tensor<float>({spec.bins(), target});
  for (std::size_t b = 0; b < spec.bins(); ++b) {
    auto src = spec.values.row(b);
    std::copy(src.begin(), src.end(), out.values.row(b).begin() + static_cast<long>(left));
  }
  return out;
}

}  // namespace

MelSpectrogram PadCenter(const MelSpectrogram& spec, std::size_t target_frames) {
  Require(spec.frames() <= target_frames, ErrorCode::kInvalidArgument,
          "cannot pad " + std::to_string(spec.frames()) + " frames to " +
              std::to_string(target_frames) + "; truncate or choose a larger target");
  if (spec.frames() == target_frames) return spec;
  return PadAt(spec, target_frames, (target_frames - spec.frames()) / 2);
}

MelSpectrogram PadTrailing(const MelSpectrogram& spec, std::size_t target_frames) {
  Require(spec.frames() <= target_frames, ErrorCode::kInvalidArgument,
          "cannot pad " + std::to_string(spec.frames()) + " frames to " +
              std::to_string(target_frames));
  if (spec.frames() == target_frames) return spec;
  return PadAt(spec, target_frames, 0);
}

Bands SegmentBands(const MelSpectrogram& spec, const BandSplit& split) {
  split.Validate(spec.bins());
  const std::size_t frames = spec.frames();
  auto slice = [&](std::size_t first, std::size_t count) {
    Tensor<float> band({count, frames});
    for (std::size_t b = 0; b < count; ++b) {
      auto src = spec.values.row(first + b);
      std::copy(src.begin(), src.end(), band.row(b).begin());
    }
    return band;
  };
  return Bands{slice(0, split.low), slice(split.low, split.mid),
               slice(split.low + split.mid, split.high)};
}

Tensor<float> LogCompress(const Tensor<float>& values) {
  Tensor<float> out(values.shape());
  auto src = values.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::log1p(src[i]);
  return out;
}

AudioClip ReadWav(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  ByteReader r(bytes, "wav " + path.string());
  auto tag = [&](std::string_view expected) {
    auto b = r.Bytes(4);
    return std::equal(b.begin(), b.end(), expected.begin());
  };
  Require(tag("RIFF"), ErrorCode::kCorruptFile, path.string() + ": not a RIFF file");
  r.U32();
  Require(tag("WAVE"), ErrorCode::kCorruptFile, path.string() + ": not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    auto id = r.Bytes(4);
    const std::string chunk(id.begin(), id.end());
    const std::uint32_t size = r.U32();
    if (chunk == "fmt ") {
      auto body = r.Bytes(size);
      ByteReader f(body, "wav fmt chunk");
      const std::uint32_t fmt_channels = f.U32();
      format = static_cast<std::uint16_t>(fmt_channels & 0xFFFF);
      channels = static_cast<std::uint16_t>(fmt_channels >> 16);
      rate = f.U32();
      f.U32();  // byte rate
      bits = static_cast<std::uint16_t>(f.U32() >> 16);
      if (format == 0xFFFE && size >= 26) {
        f.U32();  // cbSize + valid bits
        f.U32();  // channel mask
        format = static_cast<std::uint16_t>(f.U32() & 0xFFFF);
      }
      have_fmt = true;
    } else if (chunk == "data") {
      Require(have_fmt, ErrorCode::kCorruptFile, path.string() + ": data before fmt chunk");
      Require(channels > 0 && rate > 0, ErrorCode::kCorruptFile,
              path.string() + ": invalid channel count or sample rate");
      const bool pcm16 = format == 1 && bits == 16;
      const bool float32 = format == 3 && bits == 32;
      Require(pcm16 || float32, ErrorCode::kInvalidArgument,
              path.string() + ": unsupported WAV encoding (need 16-bit PCM or 32-bit float)");
      const std::size_t width = bits / 8;
      const std::size_t frames = std::min<std::size_t>(size, r.remaining()) / (width * channels);
      auto data = r.Bytes(frames * width * channels);
      ByteReader d(data, "wav data");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          if (pcm16) {
            auto s = d.Bytes(2);
            const auto v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
            sum += v / 32768.0;
          } else {
            sum += d.F32();
          }
        }
        clip.samples[i] = static_cast<float>(sum / channels);
      }
      Require(!clip.samples.empty(), ErrorCode::kEmpty, path.string() + ": no audio samples");
      return clip;
    } else {
      r.Bytes(std::min<std::size_t>(size + (size & 1u), r.remaining()));
    }
  }
  Fail(ErrorCode::kCorruptFile, path.string() + ": missing data chunk");
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip, WavFormat format) {
  const bool pcm16 = format == WavFormat::kPcm16;
  const std::uint32_t width = pcm16 ? 2 : 4;
  const auto data_size = static_cast<std::uint32_t>(clip.samples.size() * width);
  ByteWriter w;
  w.Bytes("RIFF", 4);
  w.U32(36 + data_size);
  w.Bytes("WAVE", 4);
  w.Bytes("fmt ", 4);
  w.U32(16);
  w.U32((pcm16 ? 1u : 3u) | (1u << 16));
  w.U32(static_cast<std::uint32_t>(clip.sample_rate));
  w.U32(static_cast<std::uint32_t>(clip.sample_rate) * width);
  w.U32(width | ((width * 8) << 16));
  w.Bytes("data", 4);
  w.U32(data_size);
  for (float s : clip.samples) {
    if (pcm16) {
      const double scaled = std::round(std::clamp(static_cast<double>(s), -1.0, 1.0) * 32767.0);
      const auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled));
      const std::uint8_t lo = v & 0xFF, hi = v >> 8;
      w.Bytes(&lo, 1);
      w.Bytes(&hi, 1);
    } else {
      w.F32(s);
    }
  }
  WriteFileBytes(path, w.buffer());
}

void WriteFeatureCache(const std::filesystem::path& path, const MelSpectrogram& spec) {
  ByteWriter w;
  w.Bytes("RLNF", 4);
  w.U32(kFeatureCacheVersion);
  w.U32(static_cast<std::uint32_t>(spec.bins()));
  w.U32(static_cast<std::uint32_t>(spec.frames()));
  w.F64(spec.frame_hop_seconds);
  w.F32Array(spec.values.data());
  WriteFileBytes(path, w.buffer());
}

MelSpectrogram ReadFeatureCache(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  ByteReader r(bytes, "feature cache " + path.string());
  auto magic = r.Bytes(4);
  Require(std::memcmp(magic.data(), "RLNF", 4) == 0, ErrorCode::kCorruptFile,
          path.string() + ": not a feature cache file");
  const std::uint32_t version = r.U32();
  Require(version <= kFeatureCacheVersion, ErrorCode::kVersionMismatch,
          path.string() + ": feature cache version " + std::to_string(version) +
              " is newer than supported version " + std::to_string(kFeatureCacheVersion));
  const std::uint32_t bins = r.U32();
  const std::uint32_t frames = r.U32();
  Require(bins > 0 && frames > 0, ErrorCode::kCorruptFile, path.string() + ": empty feature matrix");
  MelSpectrogram spec;
  spec.frame_hop_seconds = r.F64();
  spec.values = Tensor<float>({bins, frames});
  r.F32Array(spec.values.data());
  Require(r.remaining() == 0, ErrorCode::kCorruptFile, path.string() + ": trailing bytes");
  return spec;
}

}  // namespace relnet
