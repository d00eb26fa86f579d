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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "streamprune/time.hpp"

namespace streamprune {

/// Closed interval of receive times a message sent at `send_time` may map to.
inline std::pair<TimeUs, TimeUs> message_window(TimeUs send_time, const DelayWindow& window) {
  return {checked_add(send_time, window.d_min), checked_add(send_time, window.d_max)};
}

/// Contiguous slice [lo, hi] of one receiver's sorted receive events.
struct WindowRange {
  std::uint32_t receiver = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool empty = true;

  static WindowRange make(std::uint32_t receiver, std::size_t lo, std::size_t hi_exclusive) {
    WindowRange r;
    r.receiver = receiver;
    if (lo < hi_exclusive) {
      r.lo = lo;
      r.hi = hi_exclusive - 1;
      r.empty = false;
    }
    return r;
  }

  std::size_t size() const { return empty ? 0 : hi - lo + 1; }
  bool operator==(const WindowRange&) const = default;
};

/// Maximum bipartite matching by augmenting paths (Kuhn). `adjacency[i]`
/// lists the right-hand vertices left vertex i may take.
class AugmentingMatcher {
 public:
  AugmentingMatcher(const std::vector<std::vector<std::size_t>>& adjacency,
                    std::size_t n_right)
      : adj_(adjacency), match_right_(n_right, kFree), seen_(n_right, 0) {}

  std::size_t solve() {
    std::size_t matched = 0;
    for (std::size_t u = 0; u < adj_.size(); ++u) {
      ++stamp_;
      if (augment(u)) ++matched;
    }
    return matched;
  }

 private:
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  bool augment(std::size_t u) {
    for (std::size_t v : adj_[u]) {
      if (seen_[v] == stamp_) continue;
      seen_[v] = stamp_;
      if (match_right_[v] == kFree || augment(match_right_[v])) {
        match_right_[v] = u;
        return true;
      }
    }
    return false;
  }

  const std::vector<std::vector<std::size_t>>& adj_;
  std::vector<std::size_t> match_right_;
  std::vector<std::uint64_t> seen_;
  std::uint64_t stamp_ = 0;
};

/// True if the ranges' lo and hi bounds are both non-decreasing (empty
/// ranges ignored).
inline bool ranges_monotone(std::span<const WindowRange> ranges) {
  const WindowRange* prev = nullptr;
  for (const auto& r : ranges) {
    if (r.empty) continue;
    if (prev && (r.lo < prev->lo || r.hi < prev->hi)) return false;
    prev = &r;
  }
  return true;
}

/// Does an injective assignment exist that maps message i to some event in
/// ranges[i]? One range per sent message, in send order.
///
/// With monotone ranges a single forward pointer decides it: each message
/// takes the earliest free event in its range. Non-monotone input falls back
/// to full bipartite matching.
inline bool candidate_feasible_greedy(std::span<const WindowRange> ranges) {
  for (const auto& r : ranges) {
    if (r.empty) return false;
  }
  if (!ranges_monotone(ranges)) {
    std::vector<std::vector<std::size_t>> adj(ranges.size());
    std::size_t n_right = 0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      for (std::size_t e = ranges[i].lo; e <= ranges[i].hi; ++e) adj[i].push_back(e);
      n_right = std::max(n_right, ranges[i].hi + 1);
    }
    return AugmentingMatcher(adj, n_right).solve() == ranges.size();
  }

  std::size_t next_free = 0;
  for (const auto& r : ranges) {
    std::size_t q = std::max(next_free, r.lo);
    if (q > r.hi) return false;
    next_free = q + 1;
  }
  return true;
}

/// Reference check for small instances: builds the full compatibility graph
/// between sent messages and received events by direct comparison and asks
/// whether a maximum matching saturates the sent side.
inline bool candidate_feasible_bruteforce(std::span<const TimeUs> sent,
                                          std::span<const TimeUs> received,
                                          const DelayWindow& window) {
  std::vector<std::vector<std::size_t>> adj(sent.size());
  for (std::size_t i = 0; i < sent.size(); ++i) {
    for (std::size_t j = 0; j < received.size(); ++j) {
      auto delay = received[j].us - sent[i].us;
      if (delay >= window.d_min.us && delay <= window.d_max.us) adj[i].push_back(j);
    }
  }
  return AugmentingMatcher(adj, received.size()).solve() == sent.size();
}

}  // namespace streamprune
