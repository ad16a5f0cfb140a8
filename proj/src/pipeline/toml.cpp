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

#include "hoisynth/pipeline/toml.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hoisynth::pipeline {
namespace {

std::string trim(const std::string& s) {
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  return s.substr(begin, end - begin);
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw std::runtime_error("toml line " + std::to_string(line) + ": " +
                           message);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (unsigned char c : key) {
    if (std::isalnum(c) == 0 && c != '_' && c != '-') return false;
  }
  return true;
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string parse_quoted(const std::string& raw, int line) {
  if (raw.size() < 2 || raw.back() != '"') {
    fail(line, "unterminated string: " + raw);
  }
  std::string out;
  for (size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\') {
      if (i + 2 >= raw.size()) fail(line, "dangling escape");
      ++i;
      switch (raw[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(line, std::string("unsupported escape \\") + raw[i]);
      }
    } else if (c == '"') {
      fail(line, "unescaped quote inside string");
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

TomlDoc TomlDoc::parse(const std::string& text) {
  TomlDoc doc;
  std::istringstream stream(text);
  std::string raw_line;
  std::string section;
  int line_no = 0;
  while (std::getline(stream, raw_line)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) {
        fail(line_no, "bad section name '" + section + "'");
      }
      doc.sections_[section];  // a section may legitimately stay empty
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
    auto& table = doc.sections_[section];
    if (table.count(key) != 0) {
      fail(line_no, "duplicate key '" + key + "'");
    }
    const std::string raw = trim(line.substr(eq + 1));
    if (raw.empty()) fail(line_no, "missing value for '" + key + "'");

    Value value;
    if (raw.front() == '"') {
      value.kind = Value::Kind::kString;
      value.text = parse_quoted(raw, line_no);
    } else if (raw == "true" || raw == "false") {
      value.kind = Value::Kind::kBool;
      value.boolean = raw == "true";
    } else if (raw.find_first_of(".eE") != std::string::npos &&
               raw.find_first_not_of("+-0123456789.eE") ==
                   std::string::npos) {
      value.kind = Value::Kind::kFloat;
      try {
        size_t used = 0;
        value.number = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
      } catch (const std::exception&) {
        fail(line_no, "bad float '" + raw + "'");
      }
    } else {
      const char* begin = raw.data();
      const char* end = raw.data() + raw.size();
      const auto [ptr, ec] = std::from_chars(begin, end, value.integer);
      if (ec != std::errc() || ptr != end) {
        fail(line_no, "unrecognized value '" + raw + "'");
      }
      value.kind = Value::Kind::kInt;
    }
    table.emplace(key, std::move(value));
  }
  return doc;
}

TomlDoc TomlDoc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

const TomlDoc::Value* TomlDoc::find(const std::string& section,
                                    const std::string& key) const {
  const auto sec = sections_.find(section);
  if (sec == sections_.end()) return nullptr;
  const auto it = sec->second.find(key);
  return it != sec->second.end() ? &it->second : nullptr;
}

const TomlDoc::Value& TomlDoc::require(const std::string& section,
                                       const std::string& key,
                                       Value::Kind kind) const {
  const Value* value = find(section, key);
  const std::string where =
      section.empty() ? key : section + "." + key;
  if (value == nullptr) {
    throw std::runtime_error("missing config key '" + where + "'");
  }
  if (value->kind != kind &&
      !(kind == Value::Kind::kFloat && value->kind == Value::Kind::kInt)) {
    throw std::runtime_error("config key '" + where + "' has the wrong type");
  }
  return *value;
}

bool TomlDoc::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::vector<std::string> TomlDoc::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, table] : sections_) out.push_back(name);
  return out;
}

std::vector<std::string> TomlDoc::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto sec = sections_.find(section);
  if (sec == sections_.end()) return out;
  for (const auto& [key, value] : sec->second) out.push_back(key);
  return out;
}

std::string TomlDoc::get_string(const std::string& section,
                                const std::string& key,
                                const std::string& fallback) const {
  return find(section, key) == nullptr
             ? fallback
             : require(section, key, Value::Kind::kString).text;
}

double TomlDoc::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
  const Value* value = find(section, key);
  if (value == nullptr) return fallback;
  const Value& v = require(section, key, Value::Kind::kFloat);
  return v.kind == Value::Kind::kInt ? static_cast<double>(v.integer)
                                     : v.number;
}

std::int64_t TomlDoc::get_int(const std::string& section,
                              const std::string& key,
                              std::int64_t fallback) const {
  return find(section, key) == nullptr
             ? fallback
             : require(section, key, Value::Kind::kInt).integer;
}

std::uint64_t TomlDoc::get_u64(const std::string& section,
                               const std::string& key,
                               std::uint64_t fallback) const {
  if (find(section, key) == nullptr) return fallback;
  const std::int64_t raw = require(section, key, Value::Kind::kInt).integer;
  if (raw < 0) {
    throw std::runtime_error("config key '" + section + "." + key +
                             "' must be non-negative");
  }
  return static_cast<std::uint64_t>(raw);
}

bool TomlDoc::get_bool(const std::string& section, const std::string& key,
                       bool fallback) const {
  return find(section, key) == nullptr
             ? fallback
             : require(section, key, Value::Kind::kBool).boolean;
}

std::string TomlDoc::require_string(const std::string& section,
                                    const std::string& key) const {
  return require(section, key, Value::Kind::kString).text;
}

}  // namespace hoisynth::pipeline
