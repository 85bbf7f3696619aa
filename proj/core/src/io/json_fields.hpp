// Copyright 2026 The DBSGen Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "dbsgen/error.hpp"
#include "json.hpp"

namespace dbsgen::io::detail {

using Json = nlohmann::json;

/// Applies a handler per key of a flat JSON object; unknown keys and type
/// errors become ConfigError naming the key.
class FieldTable {
 public:
  using Handler = std::function<void(const Json&)>;

  void add(const std::string& key, Handler handler) { handlers_[key] = std::move(handler); }

  void apply(const Json& object, const std::string& what) const {
    if (!object.is_object()) throw ConfigError(what + " must be a JSON object");
    for (const auto& [key, value] : object.items()) {
      auto it = handlers_.find(key);
      if (it == handlers_.end()) throw ConfigError("unknown " + what + " key \"" + key + "\"");
      try {
        it->second(value);
      } catch (const Json::exception& e) {
        throw ConfigError("bad value for " + what + " key \"" + key + "\": " + e.what());
      } catch (const ConfigError& e) {
        throw ConfigError("bad value for " + what + " key \"" + key + "\": " + e.what());
      }
    }
  }

 private:
  std::map<std::string, Handler> handlers_;
};

inline Json parse_json(const std::string& text, const std::string& what) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse " + what + ": " + e.what());
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
FieldTable::Handler number(T& field) {
  return [&field](const Json& v) {
    if (!v.is_number()) throw ConfigError("expected a number");
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
        throw ConfigError("expected a non-negative integer");
      }
    }
    field = v.get<T>();
  };
}

inline FieldTable::Handler boolean(bool& field) {
  return [&field](const Json& v) {
    if (!v.is_boolean()) throw ConfigError("expected true or false");
    field = v.get<bool>();
  };
}

}  // namespace dbsgen::io::detail
