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
#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "streamprune/error.hpp"
#include "streamprune/time.hpp"

namespace streamprune {

enum class Direction { sender_anonymity, receiver_anonymity };

inline std::string_view to_string(Direction d) {
  return d == Direction::sender_anonymity ? "sender" : "receiver";
}

inline Direction parse_direction(std::string_view s) {
  if (s == "sender" || s == "sender_anonymity") return Direction::sender_anonymity;
  if (s == "receiver" || s == "receiver_anonymity") return Direction::receiver_anonymity;
  throw Error("trace-model", "unknown direction '" + std::string(s) + "'");
}

inline Direction flipped(Direction d) {
  return d == Direction::sender_anonymity ? Direction::receiver_anonymity
                                          : Direction::sender_anonymity;
}

/// One ground-truth message as seen by a white-box observer.
struct MessageRecord {
  std::uint64_t message_id = 0;
  std::string sender_id;
  std::string receiver_id;
  TimeUs send_time;
  TimeUs receive_time;
  // In-memory only; set by the flow simulator and not serialized.
  std::uint64_t stream_id = 0;

  bool operator==(const MessageRecord&) const = default;
};

struct Trace {
  std::vector<MessageRecord> records;
  Direction direction = Direction::sender_anonymity;
};

/// Canonical order: (send_time, message_id).
inline void sort_canonical(std::vector<MessageRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const MessageRecord& a, const MessageRecord& b) {
              return std::tie(a.send_time, a.message_id) <
                     std::tie(b.send_time, b.message_id);
            });
}

/// Checks every Trace invariant, throwing on the first violation found.
inline void validate(const Trace& trace) {
  std::vector<std::uint64_t> ids;
  ids.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (r.send_time.us < 0 || r.receive_time.us < 0) {
      throw Error("trace-model",
                  "negative timestamp in message " + std::to_string(r.message_id));
    }
    if (r.receive_time < r.send_time) {
      throw Error("trace-model", "receive_time < send_time in message " +
                                     std::to_string(r.message_id));
    }
    ids.push_back(r.message_id);
  }
  std::sort(ids.begin(), ids.end());
  if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end()) {
    throw Error("trace-model", "duplicate message_id " + std::to_string(*dup));
  }

  const bool by_sender = trace.direction == Direction::sender_anonymity;
  std::unordered_map<std::string_view, std::string_view> partner;
  for (const auto& r : trace.records) {
    std::string_view subject = by_sender ? r.sender_id : r.receiver_id;
    std::string_view other = by_sender ? r.receiver_id : r.sender_id;
    auto [it, inserted] = partner.emplace(subject, other);
    if (!inserted && it->second != other) {
      throw Error("trace-model",
                  by_sender ? "multiple receivers for sender " + std::string(subject)
                            : "multiple senders for receiver " + std::string(subject));
    }
  }
}

/// Exchanges the sender and receiver roles and mirrors the time axis, so that
/// receiver-direction analysis of `trace` becomes sender-direction analysis of
/// the result under the same window. A receive at T_R becomes a send at
/// (T_max - T_R); a send at T_S becomes a receive at (T_max - T_S), where
/// T_max is the latest receive time. Delays are preserved exactly.
inline std::pair<Trace, DelayWindow> swap_roles(const Trace& trace,
                                                const DelayWindow& window) {
  Trace out;
  out.direction = flipped(trace.direction);
  out.records.reserve(trace.records.size());

  TimeUs epoch{0};
  for (const auto& r : trace.records) epoch = std::max(epoch, r.receive_time);

  for (const auto& r : trace.records) {
    MessageRecord m;
    m.message_id = r.message_id;
    m.sender_id = r.receiver_id;
    m.receiver_id = r.sender_id;
    m.send_time = checked_sub(epoch, r.receive_time);
    m.receive_time = checked_sub(epoch, r.send_time);
    m.stream_id = r.stream_id;
    out.records.push_back(std::move(m));
  }
  sort_canonical(out.records);
  return {std::move(out), window};
}

/// Adds `delta` to every timestamp.
inline Trace shift_time(const Trace& trace, TimeUs delta) {
  Trace out = trace;
  for (auto& r : out.records) {
    r.send_time = checked_add(r.send_time, delta);
    r.receive_time = checked_add(r.receive_time, delta);
  }
  return out;
}

}  // namespace streamprune
