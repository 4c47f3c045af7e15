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

// Audio front end: resampling, STFT, Mel projection, time-axis padding and
// frequency-band slicing, plus WAV and feature-cache file I/O.

#ifndef RELNET_FEATURES_H_
#define RELNET_FEATURES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "relnet/tensor.h"

namespace relnet {

inline constexpr int kTargetSampleRate = 44100;
inline constexpr std::size_t kMelBins = 128;
inline constexpr std::size_t kFrameLength = 2048;
inline constexpr std::size_t kHopLength = 1024;

struct AudioClip {
  std::vector<float> samples;  // mono, nominally in [-1, 1]
  int sample_rate = kTargetSampleRate;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Non-negative [bins x frames] matrix.
struct MelSpectrogram {
  Tensor<float> values;
  double frame_hop_seconds = static_cast<double>(kHopLength) / kTargetSampleRate;

  std::size_t bins() const { return values.dim(0); }
  std::size_t frames() const { return values.dim(1); }
};

// Contiguous Mel-bin bands starting at bin 0: low = [0, low), mid = [low,
// low + mid), high = [low + mid, low + mid + high). Bins above are unused.
struct BandSplit {
  std::size_t low = 20;
  std::size_t mid = 40;
  std::size_t high = 40;

  std::size_t total() const { return low + mid + high; }
  void Validate(std::size_t bins = kMelBins) const;

  // Covers all 128 bins.
  static BandSplit FullCoverage() { return {20, 40, 68}; }

  friend bool operator==(const BandSplit&, const BandSplit&) = default;
};

struct Bands {
  Tensor<float> low;
  Tensor<float> mid;
  Tensor<float> high;
};

// Windowed-sinc polyphase resampler. Output length is
// floor(len * target / source).
AudioClip Resample(const AudioClip& clip, int target_rate = kTargetSampleRate);

struct StftOptions {
  std::size_t frame_length = kFrameLength;
  std::size_t hop_length = kHopLength;
};

// Hann-windowed power spectrum |X|^2, [frame_length / 2 + 1 x frames].
Tensor<double> PowerSpectrogram(const AudioClip& clip, const StftOptions& options = {});

// Triangular filters on the HTK Mel scale spanning 0 Hz to Nyquist,
// [bins x frame_length / 2 + 1], unit peak height.
Tensor<double> MelFilterbank(int sample_rate, std::size_t frame_length,
                             std::size_t bins = kMelBins);

double HzToMel(double hz);
double MelToHz(double mel);

// Power spectrogram projected through the Mel filterbank. Clips at other
// rates are resampled to 44.1 kHz first.
MelSpectrogram ComputeMelSpectrogram(const AudioClip& clip,
                                     std::size_t bins = kMelBins);

inline std::size_t FrameCount(std::size_t samples, std::size_t frame = kFrameLength,
                              std::size_t hop = kHopLength) {
  return samples < frame ? 0 : (samples - frame) / hop + 1;
}

// Zero-pads both sides to `target_frames`; the left side gets
// floor((target - frames) / 2).
MelSpectrogram PadCenter(const MelSpectrogram& spec, std::size_t target_frames);

// Appends zero frames on the right.
MelSpectrogram PadTrailing(const MelSpectrogram& spec, std::size_t target_frames);

Bands SegmentBands(const MelSpectrogram& spec, const BandSplit& split);

// log(1 + x), applied elementwise before the network.
Tensor<float> LogCompress(const Tensor<float>& values);

enum class WavFormat { kPcm16, kFloat32 };

// Reads 16-bit PCM or 32-bit float WAV; multichannel input is averaged.
AudioClip ReadWav(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, const AudioClip& clip,
              WavFormat format = WavFormat::kPcm16);

// Feature cache record: magic "RLNF", u32 version, u32 bins, u32 frames,
// f64 hop seconds, then little-endian f32 values, row-major.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;
void WriteFeatureCache(const std::filesystem::path& path, const MelSpectrogram& spec);
MelSpectrogram ReadFeatureCache(const std::filesystem::path& path);

}  // namespace relnet

#endif  // RELNET_FEATURES_H_
