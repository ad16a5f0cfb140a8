// Copyright 2026 The hoisynth Authors
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

#ifndef HOISYNTH_PIPELINE_TOML_H_
#define HOISYNTH_PIPELINE_TOML_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hoisynth::pipeline {

// Minimal TOML subset: `[section]` headers, `key = value` lines with
// double-quoted strings (\" \\ \n \t escapes), integers, floats,
// booleans, and `#` comments. Arrays, dotted keys, and nested tables are
// not supported. Top-level keys live in the "" section.
class TomlDoc {
 public:
  static TomlDoc parse(const std::string& text);
  static TomlDoc parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

  // Typed access; the get_* forms return the default when absent, the
  // require_* forms throw std::runtime_error. Integers coerce to double
  // and to u64 (when non-negative); nothing else coerces.
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::string require_string(const std::string& section,
                             const std::string& key) const;

 private:
  struct Value {
    enum class Kind { kString, kInt, kFloat, kBool };
    Kind kind = Kind::kString;
    std::string text;       // string payload
    std::int64_t integer = 0;
    double number = 0.0;
    bool boolean = false;
  };
  const Value* find(const std::string& section, const std::string& key) const;
  const Value& require(const std::string& section, const std::string& key,
                       Value::Kind kind) const;

  std::map<std::string, std::map<std::string, Value>> sections_;
};

}  // namespace hoisynth::pipeline

#endif  // HOISYNTH_PIPELINE_TOML_H_
