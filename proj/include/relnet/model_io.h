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

// Container used by every model file:
//
//   magic[4] | u32 format version | str manifest (JSON text) |
//   u32 blob count | { str name | u32 rank | u32 dims[rank] | f32 data } ... |
//   u32 CRC32 of all preceding bytes
//
// Strings are u32-length-prefixed; all integers and floats little-endian.

#ifndef RELNET_MODEL_IO_H_
#define RELNET_MODEL_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relnet/network.h"
#include "relnet/tensor.h"

namespace relnet {

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

struct ModelFile {
  std::uint32_t version = 1;
  std::string manifest;  // JSON text
  std::vector<NamedTensor> blobs;
};

std::vector<std::uint8_t> EncodeModelFile(const ModelFile& file, std::string_view magic);

// Errors: kCorruptFile for bad magic, truncation or checksum mismatch;
// kVersionMismatch when the file is newer than `supported_version`.
ModelFile DecodeModelFile(std::span<const std::uint8_t> bytes, std::string_view magic,
                          std::uint32_t supported_version, const std::string& what);

// Trailing checksum of an encoded file.
std::uint32_t EncodedChecksum(std::span<const std::uint8_t> bytes);

void AppendTrunkBlobs(const Trunk<float>& trunk, const std::string& prefix,
                      std::vector<NamedTensor>& blobs);
// Fills a trunk (already shaped from its config) from named blobs.
void ReadTrunkBlobs(const std::vector<NamedTensor>& blobs, const std::string& prefix,
                    Trunk<float>& trunk, const std::string& what);

}  // namespace relnet

#endif  // RELNET_MODEL_IO_H_
