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

#ifndef RELNET_SRC_JSON_UTIL_H_
#define RELNET_SRC_JSON_UTIL_H_

#include <string>

#include "json.hpp"
#include "relnet/error.h"
#include "relnet/network.h"
#include "relnet/trainer.h"

namespace relnet {

using Json = nlohmann::json;

Json ConfigToJson(const ExpertConfig& config);
ExpertConfig ConfigFromJson(const Json& j);

Json MetadataToJson(const TrainingMetadata& meta);
TrainingMetadata MetadataFromJson(const Json& j);

inline Json ParseJson(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kCorruptFile, what + ": malformed manifest: " + e.what());
  }
}

template <typename T>
T JsonGet(const Json& j, const char* key, const std::string& what) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    Fail(ErrorCode::kCorruptFile, what + ": manifest field '" + key + "' missing or invalid");
  }
}

}  // namespace relnet

#endif  // RELNET_SRC_JSON_UTIL_H_
