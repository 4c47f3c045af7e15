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

#include "relnet/model_io.h"

#include <cmath>
#include <cstring>

#include "json_util.h"
#include "relnet/binary_io.h"

namespace relnet {

void ExpertConfig::Validate() const {
  bands.Validate();
  Require(features_low >= 1 && features_mid >= 1 && features_high >= 1,
          ErrorCode::kInvalidArgument, "band feature counts must be >= 1");
  Require(conv_window >= 1, ErrorCode::kInvalidArgument, "conv window must be >= 1");
  Require(pool_window >= 1 && pool_stride >= 1, ErrorCode::kInvalidArgument,
          "pool window and stride must be >= 1");
  Require(hidden_units >= 1, ErrorCode::kInvalidArgument, "hidden units must be >= 1");
}

std::vector<std::uint8_t> EncodeModelFile(const ModelFile& file, std::string_view magic) {
  ByteWriter w;
  w.Bytes(magic.data(), 4);
  w.U32(file.version);
  w.Str(file.manifest);
  w.U32(static_cast<std::uint32_t>(file.blobs.size()));
  for (const NamedTensor& blob : file.blobs) {
    w.Str(blob.name);
    w.U32(static_cast<std::uint32_t>(blob.tensor.rank()));
    for (std::size_t d : blob.tensor.shape()) w.U32(static_cast<std::uint32_t>(d));
    w.F32Array(blob.tensor.data());
  }
  w.U32(Crc32(w.buffer()));
  return std::move(w.buffer());
}

std::uint32_t EncodedChecksum(std::span<const std::uint8_t> bytes) {
  Require(bytes.size() >= 4, ErrorCode::kCorruptFile, "model file too short");
  ByteReader r(bytes.subspan(bytes.size() - 4), "checksum");
  return r.U32();
}

ModelFile DecodeModelFile(std::span<const std::uint8_t> bytes, std::string_view magic,
                          std::uint32_t supported_version, const std::string& what) {
  Require(bytes.size() >= 12, ErrorCode::kCorruptFile, what + ": file truncated");
  Require(std::memcmp(bytes.data(), magic.data(), 4) == 0, ErrorCode::kCorruptFile,
          what + ": bad magic (not a " + std::string(magic) + " file)");
  ModelFile file;
  {
    ByteReader head(bytes.subspan(4, 4), what);
    file.version = head.U32();
  }
  if (file.version > supported_version) {
    Fail(ErrorCode::kVersionMismatch,
         what + ": file format version " + std::to_string(file.version) +
             " is newer than supported version " + std::to_string(supported_version));
  }
  const auto body = bytes.first(bytes.size() - 4);
  if (Crc32(body) != EncodedChecksum(bytes)) {
    Fail(ErrorCode::kCorruptFile, what + ": checksum mismatch (corrupt or truncated file)");
  }
  ByteReader r(body, what);
  r.Bytes(8);
  file.manifest = r.Str();
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor blob;
    blob.name = r.Str();
    const std::uint32_t rank = r.U32();
    Require(rank >= 1 && rank <= 8, ErrorCode::kCorruptFile, what + ": bad blob rank");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(r.U32());
      Require(shape.back() > 0, ErrorCode::kCorruptFile, what + ": zero blob dimension");
    }
    Require(ShapeSize(shape) * sizeof(float) <= r.remaining(), ErrorCode::kCorruptFile,
            what + ": blob '" + blob.name + "' exceeds file size");
    blob.tensor = Tensor<float>(shape);
    r.F32Array(blob.tensor.data());
    file.blobs.push_back(std::move(blob));
  }
  Require(r.remaining() == 0, ErrorCode::kCorruptFile, what + ": trailing bytes");
  return file;
}

void AppendTrunkBlobs(const Trunk<float>& trunk, const std::string& prefix,
                      std::vector<NamedTensor>& blobs) {
  trunk.ForEachParameter([&](const std::string& name, const Tensor<float>& p) {
    blobs.push_back({prefix + name, p});
  });
}

void ReadTrunkBlobs(const std::vector<NamedTensor>& blobs, const std::string& prefix,
                    Trunk<float>& trunk, const std::string& what) {
  trunk.ForEachParameter([&](const std::string& name, Tensor<float>& p) {
    const std::string full = prefix + name;
    for (const NamedTensor& blob : blobs) {
      if (blob.name != full) continue;
      Require(blob.tensor.shape() == p.shape(), ErrorCode::kCorruptFile,
              what + ": blob '" + full + "' has shape " + ShapeToString(blob.tensor.shape()) +
                  ", config expects " + ShapeToString(p.shape()));
      p = blob.tensor;
      return;
    }
    Fail(ErrorCode::kCorruptFile, what + ": missing parameter blob '" + full + "'");
  });
}

Json ConfigToJson(const ExpertConfig& c) {
  return Json{{"bands", {c.bands.low, c.bands.mid, c.bands.high}},
              {"features", {c.features_low, c.features_mid, c.features_high}},
              {"conv_window", c.conv_window},
              {"pool_window", c.pool_window},
              {"pool_stride", c.pool_stride},
              {"hidden_units", c.hidden_units},
              {"log_compress", c.log_compress},
              {"seed", c.seed}};
}

ExpertConfig ConfigFromJson(const Json& j) {
  const std::string what = "model config";
  ExpertConfig c;
  const auto bands = JsonGet<std::vector<std::size_t>>(j, "bands", what);
  const auto feats = JsonGet<std::vector<std::size_t>>(j, "features", what);
  Require(bands.size() == 3 && feats.size() == 3, ErrorCode::kCorruptFile,
          "model config: bands/features must have three entries");
  c.bands = {bands[0], bands[1], bands[2]};
  c.features_low = feats[0];
  c.features_mid = feats[1];
  c.features_high = feats[2];
  c.conv_window = JsonGet<std::size_t>(j, "conv_window", what);
  c.pool_window = JsonGet<std::size_t>(j, "pool_window", what);
  c.pool_stride = JsonGet<std::size_t>(j, "pool_stride", what);
  c.hidden_units = JsonGet<std::size_t>(j, "hidden_units", what);
  c.log_compress = JsonGet<bool>(j, "log_compress", what);
  c.seed = JsonGet<std::uint64_t>(j, "seed", what);
  try {
    c.Validate();
  } catch (const Error& e) {
    Fail(ErrorCode::kCorruptFile, std::string("model config invalid: ") + e.what());
  }
  return c;
}

Json MetadataToJson(const TrainingMetadata& m) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"trained", m.trained},
              {"epochs_run", m.epochs_run},
              {"best_epoch", m.best_epoch},
              {"best_validation_loss", num(m.best_validation_loss)},
              {"train_accuracy", num(m.train_accuracy)}};
}

TrainingMetadata MetadataFromJson(const Json& j) {
  TrainingMetadata m;
  const std::string what = "training metadata";
  m.trained = JsonGet<bool>(j, "trained", what);
  m.epochs_run = JsonGet<std::size_t>(j, "epochs_run", what);
  m.best_epoch = JsonGet<std::size_t>(j, "best_epoch", what);
  if (j.contains("best_validation_loss") && !j["best_validation_loss"].is_null()) {
    m.best_validation_loss = j["best_validation_loss"].get<double>();
  }
  if (j.contains("train_accuracy") && !j["train_accuracy"].is_null()) {
    m.train_accuracy = j["train_accuracy"].get<double>();
  }
  return m;
}

}  // namespace relnet
