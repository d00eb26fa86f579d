//
// Copyright 2026 The streamprune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "streamprune/error.hpp"
#include "streamprune/time.hpp"
#include "streamprune/trace_csv.hpp"

namespace streamprune {

/// Flat `key = value` configuration shared by every subcommand.
///
///   # comment
///   n_senders = 2000
///   base_latency = 210ms
///   label = "desk run"
///
/// Keys are case-sensitive; a repeated key is an error. Values may be
/// double-quoted. Integer values accept k/M/G suffixes (powers of 1000),
/// durations accept us/ms/s.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    csv_detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
      auto fail = [&](const std::string& why) {
        throw Error("config", "line " + std::to_string(line_no) + ": " + why);
      };
      line = trim(strip_comment(line));
      if (line.empty()) return;
      auto eq = line.find('=');
      if (eq == std::string_view::npos) fail("expected 'key = value'");
      auto key = trim(line.substr(0, eq));
      auto value = trim(line.substr(eq + 1));
      if (key.empty()) fail("empty key");
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      if (!cfg.values_.emplace(std::string(key), std::string(value)).second) {
        fail("duplicate key '" + std::string(key) + "'");
      }
    });
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    return parse(csv_detail::read_file(path, "config"));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Throws if any key is outside `allowed`.
  void require_known(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : values_) {
      if (!allowed.contains(k)) throw Error("config", "unknown key '" + k + "'");
    }
  }

  std::uint64_t get_count(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_count(it->second);
  }

  TimeUs get_duration(const std::string& key, TimeUs fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_duration(it->second);
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    double v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw Error("config", "key '" + key + "': invalid number '" + s + "'");
    }
    return v;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  /// "400", "231k", "2M", "1.5k" (must be integral after scaling).
  static std::uint64_t parse_count(std::string_view s) {
    auto fail = [&]() -> std::uint64_t {
      throw Error("config", "invalid count '" + std::string(s) + "'");
    };
    std::uint64_t scale = 1;
    std::string_view num = s;
    if (!num.empty()) {
      switch (num.back()) {
        case 'k': case 'K': scale = 1000; break;
        case 'M': scale = 1000000; break;
        case 'G': scale = 1000000000; break;
        default: break;
      }
      if (scale != 1) num.remove_suffix(1);
    }
    if (num.empty()) return fail();
    std::uint64_t whole = 0;
    auto dot = num.find('.');
    auto whole_part = num.substr(0, dot);
    if (!whole_part.empty()) {
      auto [p, ec] = std::from_chars(whole_part.data(), whole_part.data() + whole_part.size(), whole);
      if (ec != std::errc() || p != whole_part.data() + whole_part.size()) return fail();
    }
    std::uint64_t total = 0;
    if (__builtin_mul_overflow(whole, scale, &total)) return fail();
    if (dot != std::string_view::npos) {
      std::uint64_t place = scale;
      for (char c : num.substr(dot + 1)) {
        if (c < '0' || c > '9') return fail();
        if (place % 10 != 0) {
          if (c != '0') return fail();
          continue;
        }
        place /= 10;
        total += static_cast<std::uint64_t>(c - '0') * place;
      }
    }
    return total;
  }

 private:
  static std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace streamprune
