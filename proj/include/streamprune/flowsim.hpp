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

// Abstract Tor-like flow simulation: weighted three-hop circuits, an
// exponential stream/cell user model and constant network latency. Cells
// travel exit -> client; the resulting trace is meant for receiver-direction
// analysis (candidate exits per stream).

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "streamprune/config.hpp"
#include "streamprune/error.hpp"
#include "streamprune/rng.hpp"
#include "streamprune/trace.hpp"
#include "streamprune/trace_csv.hpp"

namespace streamprune {

struct RelayRecord {
  std::string relay_id;
  std::uint64_t bandwidth_weight = 0;
  bool can_guard = false;
  bool can_exit = false;

  bool operator==(const RelayRecord&) const = default;
};

struct NetworkModel {
  std::vector<RelayRecord> relays;
  std::string epoch;

  bool operator==(const NetworkModel&) const = default;

  std::size_t exit_count() const {
    return static_cast<std::size_t>(std::count_if(
        relays.begin(), relays.end(), [](const RelayRecord& r) { return r.can_exit; }));
  }

  std::uint64_t total_bandwidth() const {
    std::uint64_t t = 0;
    for (const auto& r : relays) t += r.bandwidth_weight;
    return t;
  }
};

inline void validate(const NetworkModel& model) {
  auto fail = [](const std::string& why) { throw Error("flowsim", why); };
  if (model.relays.size() < 3) fail("network needs at least 3 relays");
  std::unordered_set<std::string_view> ids;
  std::size_t selectable = 0, guards = 0, exits = 0;
  for (const auto& r : model.relays) {
    if (r.relay_id.empty()) fail("empty relay_id");
    if (!ids.insert(r.relay_id).second) fail("duplicate relay_id " + r.relay_id);
    if (r.bandwidth_weight == 0) continue;
    ++selectable;
    guards += r.can_guard;
    exits += r.can_exit;
  }
  if (selectable == 0) fail("all bandwidth weights are zero");
  if (selectable < 3) fail("fewer than 3 relays with positive bandwidth");
  if (guards == 0) fail("no guard-capable relay with positive bandwidth");
  if (exits == 0) fail("no exit-capable relay with positive bandwidth");
}

inline constexpr std::string_view kNetworkCsvHeader = "relay_id,bandwidth_weight,can_guard,can_exit";

/// Network file: optional "# epoch=<label>" line, then the CSV header and one
/// row per relay. Flags are 0/1 (true/false also accepted).
inline NetworkModel parse_network_csv(std::string_view text) {
  using namespace csv_detail;
  NetworkModel model;
  bool saw_header = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fail = [&](const std::string& why) {
      throw Error("flowsim", "network line " + std::to_string(line_no) + ": " + why);
    };
    if (!saw_header) {
      if (line.starts_with("# epoch=")) {
        model.epoch = line.substr(8);
        return;
      }
      if (line != kNetworkCsvHeader) fail("header must be '" + std::string(kNetworkCsvHeader) + "'");
      saw_header = true;
      return;
    }
    std::array<std::string_view, 4> f;
    if (!split_fields(line, f)) fail("expected 4 fields");
    auto flag = [&](std::string_view s) {
      if (s == "1" || s == "true") return true;
      if (s == "0" || s == "false") return false;
      fail("bad flag '" + std::string(s) + "'");
      return false;
    };
    RelayRecord r;
    r.relay_id = f[0];
    if (!parse_u64(f[1], r.bandwidth_weight)) fail("bad bandwidth_weight");
    r.can_guard = flag(f[2]);
    r.can_exit = flag(f[3]);
    model.relays.push_back(std::move(r));
  });
  if (!saw_header) throw Error("flowsim", "network file missing header");
  validate(model);
  return model;
}

inline NetworkModel load_network_model(const std::filesystem::path& path) {
  return parse_network_csv(csv_detail::read_file(path, "flowsim"));
}

inline std::string format_network_csv(const NetworkModel& model) {
  std::string out;
  if (!model.epoch.empty()) out += "# epoch=" + model.epoch + "\n";
  out.append(kNetworkCsvHeader);
  out.push_back('\n');
  for (const auto& r : model.relays) {
    csv_detail::check_token(r.relay_id, "flowsim");
    out += r.relay_id + "," + std::to_string(r.bandwidth_weight) + "," + (r.can_guard ? "1" : "0") +
           "," + (r.can_exit ? "1" : "0") + "\n";
  }
  return out;
}

inline void save_network_model(const NetworkModel& model, const std::filesystem::path& path) {
  csv_detail::write_file(path, format_network_csv(model), "flowsim");
}

// ---------------------------------------------------------------------------
// Scaling

/// Exact non-negative rational, parsed from "2", "1.5" or "3/2".
struct Rational {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  static Rational parse(std::string_view s) {
    auto fail = [&]() -> Rational { throw Error("flowsim", "invalid factor '" + std::string(s) + "'"); };
    Rational r;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
      auto a = s.substr(0, slash), b = s.substr(slash + 1);
      if (!csv_detail::parse_u64(a, r.num) || !csv_detail::parse_u64(b, r.den) || r.den == 0) return fail();
      return r;
    }
    r.den = 1;
    auto dot = s.find('.');
    std::string digits(s.substr(0, dot));
    if (dot != std::string_view::npos) {
      auto frac = s.substr(dot + 1);
      if (frac.size() > 9) return fail();
      digits += frac;
      for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
    }
    if (!csv_detail::parse_u64(digits, r.num)) return fail();
    return r;
  }

  bool at_least_one() const { return num >= den; }

  /// round(v * num / den), halves rounded up.
  std::uint64_t scale_round(std::uint64_t v) const {
    unsigned __int128 p = static_cast<unsigned __int128>(v) * num;
    return static_cast<std::uint64_t>((p + den / 2) / den);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Multiplies every bandwidth weight by `factor`. Relays keep their ids and
/// flags; zero-weight (unselectable) relays stay at zero.
inline NetworkModel scale_vertical(const NetworkModel& model, Rational factor) {
  if (!factor.at_least_one()) throw Error("flowsim", "scale factor must be >= 1");
  NetworkModel out = model;
  for (auto& r : out.relays) {
    if (r.bandwidth_weight > 0) r.bandwidth_weight = std::max<std::uint64_t>(1, factor.scale_round(r.bandwidth_weight));
  }
  return out;
}

/// Adds relays until the network has round(factor * N) of them. New relays
/// are seeded with-replacement clones of existing ones. Sampling is
/// stratified by position class (guard/exit flags) with largest-remainder
/// apportionment, so each class grows by the same factor up to rounding.
inline NetworkModel scale_horizontal(const NetworkModel& model, Rational factor, std::uint64_t seed) {
  if (!factor.at_least_one()) throw Error("flowsim", "scale factor must be >= 1");
  NetworkModel out = model;
  const std::size_t n = model.relays.size();
  const std::uint64_t target = factor.scale_round(n);
  if (target <= n) return out;

  // Class index = can_guard * 2 + can_exit.
  std::array<std::vector<std::size_t>, 4> members;
  for (std::size_t i = 0; i < n; ++i) {
    members[model.relays[i].can_guard * 2 + model.relays[i].can_exit].push_back(i);
  }
  const std::uint64_t extra = target - n;
  std::array<std::uint64_t, 4> quota{};
  std::array<unsigned __int128, 4> remainder{};
  std::uint64_t assigned = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    // Share of `extra` proportional to class size: extra * |c| / n.
    unsigned __int128 p = static_cast<unsigned __int128>(extra) * members[c].size();
    quota[c] = static_cast<std::uint64_t>(p / n);
    remainder[c] = p % n;
    assigned += quota[c];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < extra; ++k) {
    if (members[order[k % 4]].empty()) continue;
    ++quota[order[k % 4]];
    ++assigned;
  }

  std::unordered_set<std::string> taken;
  for (const auto& r : model.relays) taken.insert(r.relay_id);
  Rng rng(seed, 0);
  std::uint64_t serial = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::uint64_t k = 0; k < quota[c]; ++k) {
      auto pick = members[c][static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(members[c].size()) - 1))];
      RelayRecord clone = model.relays[pick];
      do {
        clone.relay_id = model.relays[pick].relay_id + "_h" + std::to_string(serial++);
      } while (taken.contains(clone.relay_id));
      taken.insert(clone.relay_id);
      out.relays.push_back(std::move(clone));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Path selection

struct CircuitRecord {
  std::uint64_t client_id = 0;
  std::size_t guard = 0;  // indices into NetworkModel::relays
  std::size_t middle = 0;
  std::size_t exit = 0;
  TimeUs created_at;
  TimeUs dirty_at;  // no new streams attach at or after this time
};

/// Bandwidth-weighted relay selection with precomputed cumulative weights.
class PathSelector {
 public:
  explicit PathSelector(const NetworkModel& model) : model_(model) {
    validate(model);
    for (std::size_t i = 0; i < model.relays.size(); ++i) {
      const auto& r = model.relays[i];
      if (r.bandwidth_weight == 0) continue;
      add(all_, i, r.bandwidth_weight);
      if (r.can_guard) add(guards_, i, r.bandwidth_weight);
      if (r.can_exit) add(exits_, i, r.bandwidth_weight);
    }
  }

  /// Exit by weight among exit-capable relays, then guard among
  /// guard-capable, then middle among all; a draw that repeats an earlier
  /// hop is rejected and redrawn.
  CircuitRecord select(Rng& rng) const {
    constexpr int kMaxAttempts = 10000;
    CircuitRecord c;
    c.exit = draw(exits_, rng);
    for (int a = 0;; ++a) {
      if (a == kMaxAttempts) throw Error("flowsim", "cannot find a guard distinct from the exit");
      c.guard = draw(guards_, rng);
      if (c.guard != c.exit) break;
    }
    for (int a = 0;; ++a) {
      if (a == kMaxAttempts) throw Error("flowsim", "cannot find a distinct middle relay");
      c.middle = draw(all_, rng);
      if (c.middle != c.exit && c.middle != c.guard) break;
    }
    return c;
  }

  const NetworkModel& model() const { return model_; }

 private:
  struct Pool {
    std::vector<std::size_t> relay;
    std::vector<std::uint64_t> cumulative;
  };

  static void add(Pool& p, std::size_t i, std::uint64_t w) {
    p.relay.push_back(i);
    p.cumulative.push_back((p.cumulative.empty() ? 0 : p.cumulative.back()) + w);
  }

  static std::size_t draw(const Pool& p, Rng& rng) {
    auto x = static_cast<std::uint64_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(p.cumulative.back()) - 1));
    auto it = std::upper_bound(p.cumulative.begin(), p.cumulative.end(), x);
    return p.relay[static_cast<std::size_t>(it - p.cumulative.begin())];
  }

  const NetworkModel& model_;
  Pool all_, guards_, exits_;
};

inline CircuitRecord select_path(const NetworkModel& model, Rng& rng) {
  return PathSelector(model).select(rng);
}

// ---------------------------------------------------------------------------
// Simulation

struct SimConfig {
  std::uint64_t n_clients = 100;
  TimeUs sim_duration{60'000'000};
  TimeUs circuit_lifetime{600'000'000};
  TimeUs stream_interarrival_mean{20'000'000};
  double cells_log_mu = 4.0;  // log-normal cells-per-stream
  double cells_log_sigma = 1.0;
  TimeUs cell_interval_mean{5'000};
  TimeUs network_latency{100'000};
  std::uint64_t max_cells = 50'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& why) { throw Error("flowsim", why); };
    if (n_clients < 1) fail("n_clients must be >= 1");
    if (sim_duration.us <= 0 || circuit_lifetime.us <= 0 || stream_interarrival_mean.us <= 0 ||
        cell_interval_mean.us <= 0 || network_latency.us <= 0) {
      fail("all durations must be > 0");
    }
    if (!(cells_log_sigma >= 0.0) || !std::isfinite(cells_log_mu)) fail("invalid cells-per-stream parameters");
  }
};

inline const std::set<std::string>& sim_keys() {
  static const std::set<std::string> keys = {
      "n_clients",         "sim_duration",       "circuit_lifetime", "stream_interarrival_mean",
      "cells_log_mu",      "cells_log_sigma",    "cell_interval_mean", "network_latency",
      "max_cells",         "seed"};
  return keys;
}

inline SimConfig sim_from_config(const KeyValueConfig& kv, SimConfig c = {}) {
  kv.require_known(sim_keys());
  c.n_clients = kv.get_count("n_clients", c.n_clients);
  c.sim_duration = kv.get_duration("sim_duration", c.sim_duration);
  c.circuit_lifetime = kv.get_duration("circuit_lifetime", c.circuit_lifetime);
  c.stream_interarrival_mean = kv.get_duration("stream_interarrival_mean", c.stream_interarrival_mean);
  c.cells_log_mu = kv.get_double("cells_log_mu", c.cells_log_mu);
  c.cells_log_sigma = kv.get_double("cells_log_sigma", c.cells_log_sigma);
  c.cell_interval_mean = kv.get_duration("cell_interval_mean", c.cell_interval_mean);
  c.network_latency = kv.get_duration("network_latency", c.network_latency);
  c.max_cells = kv.get_count("max_cells", c.max_cells);
  c.seed = kv.get_count("seed", c.seed);
  c.validate();
  return c;
}

inline std::map<std::string, std::string> sim_echo(const SimConfig& c) {
  return {{"n_clients", std::to_string(c.n_clients)},
          {"sim_duration", std::to_string(c.sim_duration.us) + "us"},
          {"circuit_lifetime", std::to_string(c.circuit_lifetime.us) + "us"},
          {"stream_interarrival_mean", std::to_string(c.stream_interarrival_mean.us) + "us"},
          {"cells_log_mu", std::to_string(c.cells_log_mu)},
          {"cells_log_sigma", std::to_string(c.cells_log_sigma)},
          {"cell_interval_mean", std::to_string(c.cell_interval_mean.us) + "us"},
          {"network_latency", std::to_string(c.network_latency.us) + "us"},
          {"max_cells", std::to_string(c.max_cells)},
          {"seed", std::to_string(c.seed)}};
}

struct SimulationOutput {
  Trace trace;  // sender = exit relay, receiver = client, stream_id set
  std::vector<CircuitRecord> circuits;
};

namespace detail {
inline std::string client_name(std::uint64_t c, std::uint64_t n) {
  std::string digits = std::to_string(c);
  std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  return "c" + std::string(width - std::min(width, digits.size()), '0') + digits;
}
}  // namespace detail

/// Runs the client model. Client c draws only from substream (seed, c).
/// Circuit k of a client is built at k * circuit_lifetime and takes new
/// streams until the next one is built; open streams keep using it.
inline SimulationOutput simulate(const NetworkModel& model, const SimConfig& config) {
  config.validate();
  PathSelector selector(model);
  SimulationOutput out;
  out.trace.direction = Direction::receiver_anonymity;

  struct Cell {
    TimeUs send;
    std::uint64_t stream;
    std::uint64_t seq;
    std::size_t exit;
    std::uint64_t client;
  };
  std::vector<Cell> cells;

  for (std::uint64_t client = 0; client < config.n_clients; ++client) {
    Rng rng(config.seed, client);
    std::int64_t current_circuit = -1;
    CircuitRecord circuit;
    std::uint64_t local_stream = 0;

    double t = rng.exponential(static_cast<double>(config.stream_interarrival_mean.us));
    while (t < static_cast<double>(config.sim_duration.us)) {
      const TimeUs start{static_cast<std::int64_t>(t)};
      const std::int64_t k = start.us / config.circuit_lifetime.us;
      if (k != current_circuit) {
        circuit = selector.select(rng);
        circuit.client_id = client;
        circuit.created_at = TimeUs{k * config.circuit_lifetime.us};
        circuit.dirty_at = checked_add(circuit.created_at, config.circuit_lifetime);
        out.circuits.push_back(circuit);
        current_circuit = k;
      }

      const double drawn = std::round(rng.lognormal(config.cells_log_mu, config.cells_log_sigma));
      const auto n_cells = static_cast<std::uint64_t>(std::clamp(drawn, 1.0, 1e12));
      if (cells.size() + n_cells > config.max_cells) {
        throw Error("flowsim", "cell cap of " + std::to_string(config.max_cells) + " exceeded");
      }
      const std::uint64_t stream = (client << 32) | local_stream++;
      double cell_t = static_cast<double>(start.us);
      for (std::uint64_t seq = 0; seq < n_cells; ++seq) {
        if (seq > 0) cell_t += rng.exponential(static_cast<double>(config.cell_interval_mean.us));
        cells.push_back({TimeUs{static_cast<std::int64_t>(cell_t)}, stream, seq, circuit.exit, client});
      }
      t += rng.exponential(static_cast<double>(config.stream_interarrival_mean.us));
    }
  }

  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.send, a.stream, a.seq) < std::tie(b.send, b.stream, b.seq);
  });
  out.trace.records.reserve(cells.size());
  std::uint64_t id = 0;
  for (const auto& c : cells) {
    MessageRecord m;
    m.message_id = ++id;
    m.sender_id = model.relays[c.exit].relay_id;
    m.receiver_id = detail::client_name(c.client, config.n_clients);
    m.send_time = c.send;
    m.receive_time = checked_add(c.send, config.network_latency);
    m.stream_id = c.stream;
    out.trace.records.push_back(std::move(m));
  }
  return out;
}

/// Gives every stream its own pseudo-receiver "<client>#<local stream>", so
/// each stream is a separate subject in receiver-direction analysis.
inline Trace map_streams_to_receivers(const Trace& trace) {
  Trace out = trace;
  out.direction = Direction::receiver_anonymity;
  for (auto& r : out.records) {
    r.receiver_id = r.receiver_id + "#" + std::to_string(r.stream_id & 0xffffffffULL);
  }
  validate(out);
  return out;
}

}  // namespace streamprune
