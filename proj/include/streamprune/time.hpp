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
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "streamprune/error.hpp"

namespace streamprune {

/// Microseconds since the trace epoch. Always non-negative; arithmetic that
/// would leave [0, INT64_MAX] throws instead of wrapping.
struct TimeUs {
  std::int64_t us = 0;

  constexpr TimeUs() = default;
  constexpr explicit TimeUs(std::int64_t v) : us(v) {}

  constexpr auto operator<=>(const TimeUs&) const = default;

  static constexpr TimeUs max() {
    return TimeUs{std::numeric_limits<std::int64_t>::max()};
  }
};

inline TimeUs checked_add(TimeUs a, TimeUs b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a.us, b.us, &out) || out < 0) {
    throw Error("time", "time overflow: " + std::to_string(a.us) + " + " +
                            std::to_string(b.us));
  }
  return TimeUs{out};
}

inline TimeUs checked_sub(TimeUs a, TimeUs b) {
  std::int64_t out = 0;
  if (__builtin_sub_overflow(a.us, b.us, &out) || out < 0) {
    throw Error("time", "time underflow: " + std::to_string(a.us) + " - " +
                            std::to_string(b.us));
  }
  return TimeUs{out};
}

/// Attacker-assumed per-message delay bounds, closed on both ends.
struct DelayWindow {
  TimeUs d_min;
  TimeUs d_max;

  DelayWindow() = default;
  DelayWindow(TimeUs lo, TimeUs hi) : d_min(lo), d_max(hi) {
    if (d_min.us < 0 || d_max.us < 0 || d_min > d_max) {
      throw Error("trace-model",
                  "invalid delay window [" + std::to_string(d_min.us) + ", " +
                      std::to_string(d_max.us) + "]");
    }
  }

  bool operator==(const DelayWindow&) const = default;

  /// True if `other` is contained in this window.
  bool contains(const DelayWindow& other) const {
    return d_min <= other.d_min && other.d_max <= d_max;
  }
};

/// Parses "250", "250us", "12ms", "3s" into exact microseconds. Fractional
/// values are accepted when they convert exactly ("1.5ms" = 1500us).
inline TimeUs parse_duration(std::string_view text) {
  auto fail = [&]() -> TimeUs {
    throw Error("time", "invalid duration '" + std::string(text) + "'");
  };
  std::string_view num = text;
  std::int64_t scale = 1;
  if (num.ends_with("us")) {
    num.remove_suffix(2);
  } else if (num.ends_with("ms")) {
    num.remove_suffix(2);
    scale = 1000;
  } else if (num.ends_with("s")) {
    num.remove_suffix(1);
    scale = 1000000;
  }
  if (num.empty()) return fail();

  std::string_view whole = num;
  std::string_view frac;
  if (auto dot = num.find('.'); dot != std::string_view::npos) {
    whole = num.substr(0, dot);
    frac = num.substr(dot + 1);
  }
  std::int64_t w = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc() || p != whole.data() + whole.size() || w < 0) return fail();
  } else if (frac.empty()) {
    return fail();
  }
  std::int64_t total = 0;
  if (__builtin_mul_overflow(w, scale, &total)) return fail();

  // Fraction digits: each must land on a whole microsecond.
  std::int64_t place = scale;
  for (char c : frac) {
    if (c < '0' || c > '9') return fail();
    int digit = c - '0';
    if (place % 10 != 0) {
      if (digit != 0) return fail();
      continue;
    }
    place /= 10;
    if (__builtin_add_overflow(total, digit * place, &total)) return fail();
  }
  return TimeUs{total};
}

}  // namespace streamprune
