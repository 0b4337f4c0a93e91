#pragma once

// Reader for the TOML subset used by experiment configs: [section] headers,
// key = value pairs, strings, numbers, booleans and (nested, possibly
// multi-line) arrays, '#' comments. Values land in a JSON object keyed by
// section; the line of every key is kept for diagnostics.

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "hcalc/error.hpp"

namespace hcalc::cli {

using json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct ConfigDoc {
  json data = json::object();
  /// "section.key" -> 1-based line; "section" -> header line.
  std::map<std::string, int> lines;

  int line_of(const std::string& section, const std::string& key = "") const {
    auto it = lines.find(key.empty() ? section : section + "." + key);
    return it == lines.end() ? 0 : it->second;
  }
};

namespace detail {

class ValueParser {
 public:
  ValueParser(std::string_view text, int line) : s_(text), line_(line) {}

  json parse_all() {
    json v = value();
    skip_ws();
    if (i_ != s_.size()) fail("unexpected text after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(msg, line_); }

  void skip_ws() {
    while (i_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  json value() {
    skip_ws();
    if (i_ >= s_.size()) fail("missing value");
    const char c = s_[i_];
    if (c == '"') return string();
    if (c == '[') return array();
    if (s_.substr(i_, 4) == "true") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "false") {
      i_ += 5;
      return false;
    }
    return number();
  }

  json string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\n') fail("unterminated string");
      if (c == '\\') {
        if (i_ >= s_.size()) fail("unterminated string");
        const char e = s_[i_++];
        switch (e) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  json array() {
    ++i_;
    json arr = json::array();
    skip_ws();
    if (i_ < s_.size() && s_[i_] == ']') {
      ++i_;
      return arr;
    }
    for (;;) {
      arr.push_back(value());
      skip_ws();
      if (i_ >= s_.size()) fail("unterminated array");
      if (s_[i_] == ',') {
        ++i_;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ']') {
          ++i_;
          return arr;
        }
        continue;
      }
      if (s_[i_] == ']') {
        ++i_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json number() {
    std::size_t b = i_;
    if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' || s_[i_] == '_' ||
                              ((s_[i_] == '+' || s_[i_] == '-') && (s_[i_ - 1] == 'e' || s_[i_ - 1] == 'E'))))
      ++i_;
    std::string tok(s_.substr(b, i_ - b));
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (tok.find_first_of(".eE") == std::string::npos && tok != "inf" && tok != "nan") {
      long long iv = 0;
      auto [p, ec] = std::from_chars(first, last, iv);
      if (ec == std::errc() && p == last) return iv;
    }
    double dv = 0.0;
    auto [p, ec] = std::from_chars(first, last, dv);
    if (ec != std::errc() || p != last || !std::isfinite(dv)) fail("invalid value '" + tok + "'");
    return dv;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_;
};

inline int bracket_balance(std::string_view line) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '#') break;
    if (c == '"') in_str = true;
    else if (c == '[') ++depth;
    else if (c == ']') --depth;
  }
  return depth;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

}  // namespace detail

inline ConfigDoc parse_config(std::string_view text) {
  ConfigDoc doc;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      auto close = line.find(']');
      std::string_view rest = close == std::string_view::npos ? "" : detail::trim(line.substr(close + 1));
      if (close == std::string_view::npos || !(rest.empty() || rest.front() == '#'))
        throw ConfigError("malformed section header", lineno);
      const std::string name(detail::trim(line.substr(1, close - 1)));
      if (!detail::valid_name(name)) throw ConfigError("invalid section name '" + name + "'", lineno);
      if (doc.data.contains(name)) throw ConfigError("duplicate section [" + name + "]", lineno);
      doc.data[name] = json::object();
      doc.lines[name] = lineno;
      section = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key(detail::trim(line.substr(0, eq)));
    if (!detail::valid_name(key)) throw ConfigError("invalid key '" + key + "'", lineno);
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", lineno);
    std::string value(line.substr(eq + 1));
    const int start = lineno;
    int depth = detail::bracket_balance(value);
    while (depth > 0 && std::getline(in, raw)) {
      ++lineno;
      value += "\n" + raw;
      depth += detail::bracket_balance(raw);
    }
    if (depth != 0) throw ConfigError("unbalanced brackets", start);
    json& sec = doc.data[section];
    if (sec.contains(key)) throw ConfigError("duplicate key '" + key + "'", start);
    sec[key] = detail::ValueParser(value, start).parse_all();
    doc.lines[section + "." + key] = start;
  }
  return doc;
}

inline ConfigDoc load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace hcalc::cli
