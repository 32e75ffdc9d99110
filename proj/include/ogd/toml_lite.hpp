// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ogd::toml {

/// Minimal TOML reader covering the subset the config files use:
/// [section] headers, `key = value` lines, # comments, and scalar values
/// (integer, float, boolean, double-quoted string). No arrays, no nested or
/// inline tables, no multi-line strings. Keys are returned flattened as
/// "section.key".

struct Value {
  enum class Kind { Integer, Float, Boolean, String } kind = Kind::String;
  std::int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;

  double as_number() const {
    if (kind == Kind::Integer) return static_cast<double>(i);
    if (kind == Kind::Float) return f;
    throw std::invalid_argument("toml: value is not a number");
  }
};

using Table = std::map<std::string, Value>;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& why)
      : std::runtime_error(line > 0 ? "toml parse error at line " + std::to_string(line) + ": " + why
                                    : "toml: " + why) {}
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline Value parse_value(std::string_view raw, int line) {
  raw = trim(raw);
  if (raw.empty()) throw ParseError(line, "missing value");
  Value v;
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ParseError(line, "unterminated string");
    v.kind = Value::Kind::String;
    v.s = std::string(raw.substr(1, raw.size() - 2));
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = Value::Kind::Boolean;
    v.b = (raw == "true");
    return v;
  }
  const std::string text(raw);
  if (text.find_first_of(".eE") == std::string::npos) {
    try {
      std::size_t pos = 0;
      v.i = std::stoll(text, &pos);
      if (pos == text.size()) {
        v.kind = Value::Kind::Integer;
        return v;
      }
    } catch (...) {
    }
  }
  try {
    std::size_t pos = 0;
    v.f = std::stod(text, &pos);
    if (pos != text.size()) throw ParseError(line, "trailing characters after number");
    v.kind = Value::Kind::Float;
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (...) {
    throw ParseError(line, "cannot parse value '" + text + "'");
  }
}

}  // namespace detail

inline Table parse(std::string_view text) {
  Table out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    // strip comments outside strings
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(line_no, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    out[full] = detail::parse_value(line.substr(eq + 1), line_no);
  }
  return out;
}

inline Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace ogd::toml
