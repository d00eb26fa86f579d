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
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "streamprune/error.hpp"
#include "streamprune/matching.hpp"
#include "streamprune/time.hpp"
#include "streamprune/trace.hpp"

namespace streamprune {

namespace detail {

/// Dense ids for opaque string tokens, assigned in lexicographic order so
/// every downstream ordering is independent of input row order.
class Interner {
 public:
  Interner() = default;

  explicit Interner(std::vector<std::string> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
    lookup_.reserve(names_.size());
    for (std::uint32_t i = 0; i < names_.size(); ++i) lookup_.emplace(names_[i], i);
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::uint32_t i) const { return names_[i]; }

  std::optional<std::uint32_t> find(std::string_view s) const {
    auto it = lookup_.find(s);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t at(std::string_view s) const { return lookup_.at(s); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string_view, std::uint32_t> lookup_;
};

/// First index in [from, times.size()) with times[idx] >= value. Gallops
/// forward from `from`, so repeated queries with increasing values cost
/// O(log distance) each.
inline std::size_t gallop_lower_bound(std::span<const TimeUs> times, std::size_t from,
                                      TimeUs value) {
  const std::size_t n = times.size();
  if (from >= n || times[from] >= value) return from;
  std::size_t step = 1;
  std::size_t lo = from;  // times[lo] < value
  std::size_t hi = from + 1;
  while (hi < n && times[hi] < value) {
    lo = hi;
    step <<= 1;
    hi = lo + step;
  }
  hi = std::min(hi, n);
  auto it = std::lower_bound(times.begin() + static_cast<std::ptrdiff_t>(lo + 1),
                             times.begin() + static_cast<std::ptrdiff_t>(hi), value);
  return static_cast<std::size_t>(it - times.begin());
}

}  // namespace detail

/// Per-receiver receive events sorted by (receive_time, message_id), stored
/// contiguously (CSR layout).
class ReceiverIndex {
 public:
  ReceiverIndex() = default;

  explicit ReceiverIndex(const Trace& trace) {
    std::vector<std::string> names;
    names.reserve(trace.records.size());
    for (const auto& r : trace.records) names.push_back(r.receiver_id);
    names_ = detail::Interner(std::move(names));

    struct Event {
      std::uint32_t receiver;
      TimeUs time;
      std::uint64_t id;
    };
    std::vector<Event> events;
    events.reserve(trace.records.size());
    for (const auto& r : trace.records) {
      events.push_back({names_.at(r.receiver_id), r.receive_time, r.message_id});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return std::tie(a.receiver, a.time, a.id) < std::tie(b.receiver, b.time, b.id);
    });

    offsets_.assign(names_.size() + 1, 0);
    times_.reserve(events.size());
    ids_.reserve(events.size());
    for (const auto& e : events) {
      ++offsets_[e.receiver + 1];
      times_.push_back(e.time);
      ids_.push_back(e.id);
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  }

  std::size_t receiver_count() const { return names_.size(); }
  const std::string& name(std::uint32_t r) const { return names_.name(r); }
  std::optional<std::uint32_t> find(std::string_view id) const { return names_.find(id); }

  std::span<const TimeUs> times(std::uint32_t r) const {
    return {times_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const std::uint64_t> message_ids(std::uint32_t r) const {
    return {ids_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::size_t message_count(std::uint32_t r) const { return offsets_[r + 1] - offsets_[r]; }

 private:
  detail::Interner names_;
  std::vector<std::size_t> offsets_;
  std::vector<TimeUs> times_;
  std::vector<std::uint64_t> ids_;
};

/// Range of r's events whose receive time lies in the window of a message
/// sent at `send_time`.
inline WindowRange window_range(const ReceiverIndex& index, std::uint32_t r,
                                TimeUs send_time, const DelayWindow& window) {
  auto [lo_t, hi_t] = message_window(send_time, window);
  auto times = index.times(r);
  auto lo = std::lower_bound(times.begin(), times.end(), lo_t);
  auto hi = std::upper_bound(lo, times.end(), hi_t);
  return WindowRange::make(r, static_cast<std::size_t>(lo - times.begin()),
                           static_cast<std::size_t>(hi - times.begin()));
}

inline WindowRange window_range(const ReceiverIndex& index, std::string_view receiver,
                                const MessageRecord& m, const DelayWindow& window) {
  auto r = index.find(receiver);
  if (!r) throw Error("pruning-core", "unknown receiver " + std::string(receiver));
  return window_range(index, *r, m.send_time, window);
}

/// Message-level anonymity set: ids of every received message whose receive
/// time lies in the closed window of `m`. Sorted ascending.
inline std::vector<std::uint64_t> psi_mm(const ReceiverIndex& index, const MessageRecord& m,
                                         const DelayWindow& window) {
  std::vector<std::uint64_t> out;
  for (std::uint32_t r = 0; r < index.receiver_count(); ++r) {
    auto range = window_range(index, r, m.send_time, window);
    if (range.empty) continue;
    auto ids = index.message_ids(r);
    out.insert(out.end(), ids.begin() + static_cast<std::ptrdiff_t>(range.lo),
               ids.begin() + static_cast<std::ptrdiff_t>(range.hi + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Receivers of the messages in psi_mm(m). Sorted by id.
inline std::vector<std::string> psi_mr(const ReceiverIndex& index, const MessageRecord& m,
                                       const DelayWindow& window) {
  std::vector<std::string> out;
  for (std::uint32_t r = 0; r < index.receiver_count(); ++r) {
    if (!window_range(index, r, m.send_time, window).empty) out.push_back(index.name(r));
  }
  return out;
}

/// Final candidate set of one subject plus its size after each message.
struct AnonymityResult {
  std::string subject_id;
  std::vector<std::string> final_set;  // sorted
  std::vector<std::uint32_t> profile;  // profile[i]: candidates after i+1 messages

  std::size_t messages_observed() const { return profile.size(); }
  std::size_t set_size() const { return profile.empty() ? final_set.size() : profile.back(); }

  bool operator==(const AnonymityResult&) const = default;
};

/// Analysis view of a trace. Receiver-direction traces are mirrored with
/// swap_roles on construction, so the subjects are always the senders of the
/// internal trace and the candidates its receivers.
class Analyzer {
 public:
  explicit Analyzer(const Trace& trace) {
    if (trace.direction == Direction::receiver_anonymity) {
      build(swap_roles(trace, DelayWindow{}).first);
    } else {
      build(trace);
    }
  }

  const ReceiverIndex& receivers() const { return receivers_; }
  std::size_t subject_count() const { return subjects_.size(); }
  const std::string& subject_name(std::uint32_t s) const { return subjects_.name(s); }
  std::optional<std::uint32_t> find_subject(std::string_view id) const {
    return subjects_.find(id);
  }

  /// Send times of subject s, ordered by (send_time, message_id).
  std::span<const TimeUs> send_times(std::uint32_t s) const {
    return {send_times_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
  }

  /// Candidate id of the ground-truth counterpart of subject s.
  std::uint32_t true_counterpart(std::uint32_t s) const { return counterpart_[s]; }

  AnonymityResult analyze(std::uint32_t s, const DelayWindow& window) const {
    auto sends = send_times(s);
    AnonymityResult result;
    result.subject_id = subject_name(s);
    result.profile.reserve(sends.size());

    // Per-candidate state: receiver and the earliest event not yet consumed
    // by the greedy assignment.
    struct Candidate {
      std::uint32_t receiver;
      std::size_t next_free;
    };
    std::vector<Candidate> alive;

    // Only receivers inside the first message's window can ever qualify.
    auto [lo0, hi0] = message_window(sends.front(), window);
    for (std::uint32_t r = 0; r < receivers_.receiver_count(); ++r) {
      auto times = receivers_.times(r);
      auto q = detail::gallop_lower_bound(times, 0, lo0);
      if (q < times.size() && times[q] <= hi0) alive.push_back({r, q + 1});
    }
    result.profile.push_back(static_cast<std::uint32_t>(alive.size()));

    for (std::size_t i = 1; i < sends.size(); ++i) {
      if (alive.empty()) {
        result.profile.resize(sends.size(), 0);
        break;
      }
      auto [lo, hi] = message_window(sends[i], window);
      std::size_t kept = 0;
      for (auto& c : alive) {
        auto times = receivers_.times(c.receiver);
        auto q = detail::gallop_lower_bound(times, c.next_free, lo);
        if (q < times.size() && times[q] <= hi) {
          alive[kept++] = {c.receiver, q + 1};
        }
      }
      alive.resize(kept);
      result.profile.push_back(static_cast<std::uint32_t>(alive.size()));
    }

    result.final_set.reserve(alive.size());
    for (const auto& c : alive) result.final_set.push_back(receivers_.name(c.receiver));
    return result;
  }

 private:
  void build(const Trace& trace) {
    receivers_ = ReceiverIndex(trace);

    std::vector<std::string> names;
    names.reserve(trace.records.size());
    for (const auto& r : trace.records) names.push_back(r.sender_id);
    subjects_ = detail::Interner(std::move(names));

    struct Send {
      std::uint32_t subject;
      TimeUs time;
      std::uint64_t id;
    };
    std::vector<Send> sends;
    sends.reserve(trace.records.size());
    counterpart_.assign(subjects_.size(), 0);
    for (const auto& r : trace.records) {
      auto s = subjects_.at(r.sender_id);
      sends.push_back({s, r.send_time, r.message_id});
      counterpart_[s] = receivers_.find(r.receiver_id).value();
    }
    std::sort(sends.begin(), sends.end(), [](const Send& a, const Send& b) {
      return std::tie(a.subject, a.time, a.id) < std::tie(b.subject, b.time, b.id);
    });
    offsets_.assign(subjects_.size() + 1, 0);
    send_times_.reserve(sends.size());
    for (const auto& e : sends) {
      ++offsets_[e.subject + 1];
      send_times_.push_back(e.time);
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  }

  ReceiverIndex receivers_;
  detail::Interner subjects_;
  std::vector<std::size_t> offsets_;
  std::vector<TimeUs> send_times_;
  std::vector<std::uint32_t> counterpart_;
};

inline AnonymityResult subject_anonymity(const Analyzer& analyzer, std::string_view subject,
                                         const DelayWindow& window) {
  auto s = analyzer.find_subject(subject);
  if (!s) throw Error("pruning-core", "unknown subject " + std::string(subject));
  return analyzer.analyze(*s, window);
}

inline unsigned default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/// One result per subject, ordered by subject id. The output does not
/// depend on `workers`.
inline std::vector<AnonymityResult> analyze_all(const Analyzer& analyzer,
                                                const DelayWindow& window,
                                                unsigned workers = default_workers()) {
  const std::size_t n = analyzer.subject_count();
  std::vector<AnonymityResult> results(n);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::size_t first_error_subject = n;
  std::mutex error_mutex;

  auto work = [&] {
    for (std::size_t s = next++; s < n; s = next++) {
      try {
        results[s] = analyzer.analyze(static_cast<std::uint32_t>(s), window);
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (s < first_error_subject) {
          first_error_subject = s;
          first_error = std::make_exception_ptr(
              Error(e.module(), "subject " + analyzer.subject_name(static_cast<std::uint32_t>(s)) +
                                    ": " + e.what()));
        }
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

inline std::vector<AnonymityResult> analyze_all(const Trace& trace, const DelayWindow& window,
                                                unsigned workers = default_workers()) {
  return analyze_all(Analyzer(trace), window, workers);
}

}  // namespace streamprune
