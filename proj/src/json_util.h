// Copyright 2026 The aens Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AENS_SRC_JSON_UTIL_H_
#define AENS_SRC_JSON_UTIL_H_

#include <initializer_list>
#include <string>
#include <string_view>

#include "aens/errors.h"
#include "json.hpp"

namespace aens::json_util {

// Throws ConfigError if `j` is not an object or has keys outside `allowed`.
inline void require_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
  if (!j.is_object()) throw ConfigError(std::string(context) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::string_view key : allowed) known = known || key == item.key();
    if (!known) {
      throw ConfigError(std::string(context) + ": unknown key \"" + item.key() + "\"");
    }
  }
}

// Reads j[key] into `out` when present; type errors become ConfigError.
template <typename T>
void read_optional(const nlohmann::json& j, std::string_view key, T& out, std::string_view context) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(context) + "." + std::string(key) + ": " + e.what());
  }
}

template <typename T>
void read_required(const nlohmann::json& j, std::string_view key, T& out, std::string_view context) {
  if (!j.contains(std::string(key))) {
    throw ConfigError(std::string(context) + ": missing required key \"" + std::string(key) + "\"");
  }
  read_optional(j, key, out, context);
}

}  // namespace aens::json_util

#endif  // AENS_SRC_JSON_UTIL_H_
