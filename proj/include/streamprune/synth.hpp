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
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "streamprune/config.hpp"
#include "streamprune/error.hpp"
#include "streamprune/metrics.hpp"
#include "streamprune/pruning.hpp"
#include "streamprune/rng.hpp"
#include "streamprune/trace.hpp"

namespace streamprune {

/// Synthetic sender/receiver scenario. Defaults describe the base scenario:
/// 2000 senders starting within 60 s, 2,314 KB per stream at 10 Mbit/s,
/// 400 receivers, 210 ms latency.
struct ScenarioConfig {
  std::uint64_t n_senders = 2000;
  std::uint64_t n_receivers = 400;
  TimeUs start_span{60'000'000};
  std::uint64_t bytes_per_stream = 2'314'000;  // KB = 1000 bytes
  std::uint64_t data_rate = 10'000'000;        // bit/s
  std::uint64_t message_size = 514;            // bytes (one Tor cell)
  TimeUs base_latency{210'000};
  TimeUs jitter{0};                 // half-width of the uniform delay noise
  std::uint64_t length_stddev = 0;  // bytes
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& why) { throw Error("synth-gen", why); };
    if (n_senders < 1) fail("n_senders must be >= 1");
    if (n_receivers < 1) fail("n_receivers must be >= 1");
    if (message_size < 1) fail("message_size must be >= 1");
    if (data_rate < 1) fail("data_rate must be >= 1");
    if (bytes_per_stream < 1) fail("bytes_per_stream must be >= 1");
    if (start_span.us < 0 || base_latency.us < 0 || jitter.us < 0) fail("durations must be >= 0");
    if (jitter > base_latency) fail("jitter must not exceed base_latency");
  }

  /// Gap between consecutive messages of one stream, rounded to the nearest
  /// microsecond.
  TimeUs message_spacing() const {
    unsigned __int128 bits_us = static_cast<unsigned __int128>(message_size) * 8u * 1'000'000u;
    return TimeUs{static_cast<std::int64_t>((bits_us + data_rate / 2) / data_rate)};
  }

  /// Stream length in messages for a stream of `bytes`.
  std::uint64_t messages_for(std::uint64_t bytes) const {
    return (bytes + message_size - 1) / message_size;
  }

  /// Delay bounds every generated message respects.
  DelayWindow delay_bounds() const {
    return DelayWindow{TimeUs{base_latency.us - jitter.us}, TimeUs{base_latency.us + jitter.us}};
  }
};

inline const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys = {
      "n_senders",     "n_receivers", "start_span", "bytes_per_stream", "data_rate",
      "message_size",  "base_latency", "jitter",    "length_stddev",    "seed"};
  return keys;
}

inline ScenarioConfig scenario_from_config(const KeyValueConfig& kv, ScenarioConfig base = {}) {
  kv.require_known(scenario_keys());
  ScenarioConfig c = base;
  c.n_senders = kv.get_count("n_senders", c.n_senders);
  c.n_receivers = kv.get_count("n_receivers", c.n_receivers);
  c.start_span = kv.get_duration("start_span", c.start_span);
  c.bytes_per_stream = kv.get_count("bytes_per_stream", c.bytes_per_stream);
  c.data_rate = kv.get_count("data_rate", c.data_rate);
  c.message_size = kv.get_count("message_size", c.message_size);
  c.base_latency = kv.get_duration("base_latency", c.base_latency);
  c.jitter = kv.get_duration("jitter", c.jitter);
  c.length_stddev = kv.get_count("length_stddev", c.length_stddev);
  c.seed = kv.get_count("seed", c.seed);
  c.validate();
  return c;
}

inline std::map<std::string, std::string> scenario_echo(const ScenarioConfig& c) {
  return {{"n_senders", std::to_string(c.n_senders)},
          {"n_receivers", std::to_string(c.n_receivers)},
          {"start_span", std::to_string(c.start_span.us) + "us"},
          {"bytes_per_stream", std::to_string(c.bytes_per_stream)},
          {"data_rate", std::to_string(c.data_rate)},
          {"message_size", std::to_string(c.message_size)},
          {"base_latency", std::to_string(c.base_latency.us) + "us"},
          {"jitter", std::to_string(c.jitter.us) + "us"},
          {"length_stddev", std::to_string(c.length_stddev)},
          {"seed", std::to_string(c.seed)}};
}

namespace detail {
inline std::string padded_id(char prefix, std::uint64_t i, std::uint64_t count) {
  std::string digits = std::to_string(i);
  std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}
}  // namespace detail

/// Draws sender i's stream from substream (seed, i) only. Message ids are
/// (i << 32) | sequence, so one sender's records never depend on another's.
inline void generate_sender(const ScenarioConfig& c, std::uint64_t i,
                            std::vector<MessageRecord>& out) {
  Rng rng(c.seed, i);
  const TimeUs start{rng.uniform_int(0, c.start_span.us)};
  const auto receiver = static_cast<std::uint64_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(c.n_receivers) - 1));

  std::uint64_t bytes = c.bytes_per_stream;
  if (c.length_stddev > 0) {
    double draw = 0.0;
    // Truncated normal by rejection; the floor is one message.
    do {
      draw = std::round(rng.normal(static_cast<double>(c.bytes_per_stream),
                                   static_cast<double>(c.length_stddev)));
    } while (draw < static_cast<double>(c.message_size));
    bytes = static_cast<std::uint64_t>(draw);
  }
  const std::uint64_t n_messages = c.messages_for(bytes);
  if (n_messages >= (1ULL << 32)) throw Error("synth-gen", "stream too long");

  const TimeUs spacing = c.message_spacing();
  const std::string sender_id = detail::padded_id('s', i, c.n_senders);
  const std::string receiver_id = detail::padded_id('r', receiver, c.n_receivers);
  for (std::uint64_t k = 0; k < n_messages; ++k) {
    MessageRecord m;
    m.message_id = (i << 32) | k;
    m.sender_id = sender_id;
    m.receiver_id = receiver_id;
    m.send_time = checked_add(start, TimeUs{spacing.us * static_cast<std::int64_t>(k)});
    std::int64_t noise = c.jitter.us > 0 ? rng.uniform_int(-c.jitter.us, c.jitter.us) : 0;
    m.receive_time = checked_add(m.send_time, TimeUs{c.base_latency.us + noise});
    out.push_back(std::move(m));
  }
}

inline Trace generate(const ScenarioConfig& config) {
  config.validate();
  Trace trace;
  trace.direction = Direction::sender_anonymity;
  for (std::uint64_t i = 0; i < config.n_senders; ++i) generate_sender(config, i, trace.records);
  sort_canonical(trace.records);
  return trace;
}

// ---------------------------------------------------------------------------
// Parameter sweeps

enum class SweepParameter { length_stddev, n_receivers, jitter };

inline SweepParameter parse_sweep_parameter(std::string_view s) {
  if (s == "length_stddev") return SweepParameter::length_stddev;
  if (s == "n_receivers") return SweepParameter::n_receivers;
  if (s == "jitter") return SweepParameter::jitter;
  throw Error("synth-gen", "unsupported sweep parameter '" + std::string(s) +
                               "' (expected length_stddev, n_receivers or jitter)");
}

inline std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::length_stddev: return "length_stddev";
    case SweepParameter::n_receivers: return "n_receivers";
    case SweepParameter::jitter: return "jitter";
  }
  return "";
}

struct SweepSpec {
  SweepParameter parameter = SweepParameter::length_stddev;
  std::vector<std::int64_t> values;  // bytes, receiver count, or microseconds
  std::uint64_t replications = 1;
  ScenarioConfig base;

  ScenarioConfig config_for(std::int64_t value, std::uint64_t replication) const {
    ScenarioConfig c = base;
    switch (parameter) {
      case SweepParameter::length_stddev: c.length_stddev = static_cast<std::uint64_t>(value); break;
      case SweepParameter::n_receivers: c.n_receivers = static_cast<std::uint64_t>(value); break;
      case SweepParameter::jitter: c.jitter = TimeUs{value}; break;
    }
    // Replication r uses the same seed for every swept value, so values are
    // compared on common random numbers.
    c.seed = Rng::mix(base.seed + replication);
    return c;
  }
};

struct SweepRow {
  std::string parameter;
  std::int64_t value = 0;
  std::uint64_t replication = 0;
  double mean = 0.0;
  std::uint64_t median = 0;
  std::uint64_t p10 = 0;
  std::uint64_t p90 = 0;
};

/// Generates and analyzes every (value, replication) cell. The window must
/// bracket every delay the swept scenarios can produce.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const DelayWindow& window,
                                       unsigned workers = default_workers()) {
  if (spec.values.empty()) throw Error("synth-gen", "sweep needs at least one value");
  if (spec.replications < 1) throw Error("synth-gen", "replications must be >= 1");
  for (auto v : spec.values) {
    if (v < 0) throw Error("synth-gen", "sweep values must be non-negative");
    auto cfg = spec.config_for(v, 0);
    cfg.validate();
    if (!window.contains(cfg.delay_bounds())) {
      throw Error("synth-gen",
                  "analysis window [" + std::to_string(window.d_min.us) + ", " +
                      std::to_string(window.d_max.us) + "] does not bracket delays [" +
                      std::to_string(cfg.delay_bounds().d_min.us) + ", " +
                      std::to_string(cfg.delay_bounds().d_max.us) + "]");
    }
  }

  std::vector<SweepRow> rows;
  for (auto v : spec.values) {
    for (std::uint64_t rep = 0; rep < spec.replications; ++rep) {
      auto trace = generate(spec.config_for(v, rep));
      auto results = analyze_all(trace, window, workers);
      auto sizes = final_sizes(results);
      auto stats = summarize_sizes(sizes);
      SweepRow row;
      row.parameter = std::string(to_string(spec.parameter));
      row.value = v;
      row.replication = rep;
      row.mean = stats.mean;
      row.median = stats.median;
      row.p10 = percentile(sizes, 10);
      row.p90 = percentile(sizes, 90);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "parameter,value,replication,mean,median,p10,p90\n";
  for (const auto& r : rows) {
    out += r.parameter + "," + std::to_string(r.value) + "," + std::to_string(r.replication) + "," +
           detail::fmt_double(r.mean) + "," + std::to_string(r.median) + "," +
           std::to_string(r.p10) + "," + std::to_string(r.p90) + "\n";
  }
  return out;
}

}  // namespace streamprune
