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

// streamprune command-line entry point.
//
//   generate  synthetic sender/receiver trace
//   simulate  flow simulation over a relay network
//   scale     vertical/horizontal network scaling
//   analyze   per-subject anonymity sets and pruning profiles
//   report    summary, CDF and stream-length bucket reports
//   sweep     single-parameter scenario sweep (generate + analyze)
//
// Every run writes a JSON manifest next to its main output.

#include <sys/resource.h>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamprune.hpp"

namespace fs = std::filesystem;
namespace sp = streamprune;
using json = nlohmann::ordered_json;

namespace {

std::uint64_t peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<std::uint64_t>(usage.ru_maxrss);
}

class Manifest {
 public:
  explicit Manifest(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["software_version"] = sp::kVersion;
  }

  json& operator[](const char* key) { return doc_[key]; }

  void write(const fs::path& path) {
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    doc_["wall_time_s"] = elapsed.count();
    doc_["peak_rss_kb"] = peak_rss_kb();
    sp::csv_detail::write_file(path, doc_.dump(2) + "\n", "cli");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path(const std::string& explicit_path, const fs::path& main_output) {
  if (!explicit_path.empty()) return explicit_path;
  return main_output.string() + ".manifest.json";
}

sp::DelayWindow window_from(const std::string& dmin, const std::string& dmax) {
  return sp::DelayWindow{sp::parse_duration(dmin), sp::parse_duration(dmax)};
}

json window_json(const sp::DelayWindow& w) {
  return {{"d_min_us", w.d_min.us}, {"d_max_us", w.d_max.us}};
}

/// Parses "8G", "512M", "1048576" (bytes, powers of 1024).
std::uint64_t parse_bytes(const std::string& s) {
  if (s.empty()) throw sp::Error("cli", "empty memory size");
  std::uint64_t scale = 1;
  std::string num = s;
  switch (num.back()) {
    case 'K': case 'k': scale = 1ULL << 10; break;
    case 'M': case 'm': scale = 1ULL << 20; break;
    case 'G': case 'g': scale = 1ULL << 30; break;
    default: break;
  }
  if (scale != 1) num.pop_back();
  std::uint64_t v = 0;
  if (!sp::csv_detail::parse_u64(num, v)) throw sp::Error("cli", "invalid memory size '" + s + "'");
  return v * scale;
}

// Rough in-memory footprint of a loaded and indexed trace: the record
// vector, its strings, and the analysis indexes.
std::uint64_t estimate_trace_bytes(std::uintmax_t file_bytes, std::size_t rows) {
  return file_bytes * 2 + static_cast<std::uint64_t>(rows) * (sizeof(sp::MessageRecord) + 64);
}

void check_memory_cap(std::uint64_t cap, std::uint64_t estimate, const char* what) {
  if (cap != 0 && estimate > cap) {
    throw sp::Error("cli", std::string(what) + " needs an estimated " + std::to_string(estimate >> 20) +
                               " MiB, above --max-memory " + std::to_string(cap >> 20) + " MiB");
  }
}

json config_json(const std::map<std::string, std::string>& echo) {
  json j = json::object();
  for (const auto& [k, v] : echo) j[k] = v;
  return j;
}

std::vector<std::int64_t> parse_sweep_values(sp::SweepParameter p, const std::string& list) {
  std::vector<std::int64_t> out;
  std::string_view rest = list;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto item = rest.substr(0, comma);
    if (p == sp::SweepParameter::jitter) {
      out.push_back(sp::parse_duration(item).us);
    } else {
      out.push_back(static_cast<std::int64_t>(sp::KeyValueConfig::parse_count(item)));
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streamprune: anonymity sets of message streams under intersection attacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sp::kVersion);

  std::string manifest_out;
  app.add_option("--manifest", manifest_out, "Manifest JSON path (default: <output>.manifest.json)");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic sender/receiver trace");
  std::string gen_config, gen_out = "trace.csv";
  std::uint64_t gen_seed = 0;
  gen->add_option("--config", gen_config, "Scenario config file (key = value)")->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output trace CSV")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a relay network and emit a per-stream trace");
  std::string sim_network, sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  bool sim_raw = false;
  sim->add_option("--network", sim_network, "Network model CSV")->required()->check(CLI::ExistingFile);
  sim->add_option("--config", sim_config, "Simulation config file")->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed, "Random seed")->required();
  sim->add_option("--out", sim_out, "Output trace CSV")->required();
  sim->add_flag("--raw", sim_raw, "Keep client ids as receivers instead of per-stream pseudo-receivers");

  // scale
  auto* scl = app.add_subcommand("scale", "Scale a network model vertically or horizontally");
  std::string scl_network, scl_mode, scl_factor, scl_out;
  std::uint64_t scl_seed = 0;
  scl->add_option("--network", scl_network, "Network model CSV")->required()->check(CLI::ExistingFile);
  scl->add_option("--mode", scl_mode, "vertical or horizontal")
      ->required()
      ->check(CLI::IsMember({"vertical", "horizontal"}));
  scl->add_option("--factor", scl_factor, "Scale factor >= 1 (e.g. 2, 1.5, 3/2)")->required();
  scl->add_option("--seed", scl_seed, "Random seed (horizontal only)");
  scl->add_option("--out", scl_out, "Output network CSV")->required();

  // analyze
  auto* ana = app.add_subcommand("analyze", "Compute per-subject anonymity sets");
  std::string ana_trace, ana_dmin, ana_dmax, ana_direction = "sender", ana_out, ana_members, ana_max_mem;
  unsigned ana_workers = sp::default_workers();
  ana->add_option("--trace", ana_trace, "Input trace CSV")->required()->check(CLI::ExistingFile);
  ana->add_option("--dmin", ana_dmin, "Minimum delay (us/ms/s suffix)")->required();
  ana->add_option("--dmax", ana_dmax, "Maximum delay (us/ms/s suffix)")->required();
  ana->add_option("--direction", ana_direction, "sender or receiver")
      ->check(CLI::IsMember({"sender", "receiver"}));
  ana->add_option("--out", ana_out, "Result CSV")->required();
  ana->add_option("--members", ana_members, "Also write final-set members to this CSV");
  ana->add_option("--workers", ana_workers, "Worker threads")->check(CLI::PositiveNumber);
  ana->add_option("--max-memory", ana_max_mem, "Abort if the estimated footprint exceeds this (e.g. 8G)");

  // report
  auto* rep = app.add_subcommand("report", "Summary statistics, CDF and length buckets");
  std::string rep_results, rep_trace, rep_direction = "sender", rep_out_dir;
  rep->add_option("--results", rep_results, "Result CSV from analyze")->required()->check(CLI::ExistingFile);
  rep->add_option("--trace", rep_trace, "Trace the results came from")->required()->check(CLI::ExistingFile);
  rep->add_option("--direction", rep_direction, "sender or receiver")
      ->check(CLI::IsMember({"sender", "receiver"}));
  rep->add_option("--out-dir", rep_out_dir, "Output directory")->required();

  // sweep
  auto* swp = app.add_subcommand("sweep", "Vary one scenario parameter and analyze each run");
  std::string swp_param, swp_values, swp_config, swp_out, swp_dmin, swp_dmax;
  std::uint64_t swp_seed = 0, swp_reps = 1;
  unsigned swp_workers = sp::default_workers();
  swp->add_option("--param", swp_param, "length_stddev, n_receivers or jitter")
      ->required()
      ->check(CLI::IsMember({"length_stddev", "n_receivers", "jitter"}));
  swp->add_option("--values", swp_values, "Comma-separated values (k/M suffixes; durations for jitter)")
      ->required();
  swp->add_option("--seed", swp_seed, "Random seed")->required();
  swp->add_option("--config", swp_config, "Base scenario config")->check(CLI::ExistingFile);
  swp->add_option("--replications", swp_reps, "Replications per value")->check(CLI::PositiveNumber);
  swp->add_option("--dmin", swp_dmin, "Minimum delay (default base_latency - 100ms)");
  swp->add_option("--dmax", swp_dmax, "Maximum delay (default base_latency + 100ms)");
  swp->add_option("--workers", swp_workers, "Worker threads")->check(CLI::PositiveNumber);
  swp->add_option("--out", swp_out, "Sweep CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      Manifest m("generate");
      sp::KeyValueConfig kv = gen_config.empty() ? sp::KeyValueConfig{} : sp::KeyValueConfig::load(gen_config);
      kv.set("seed", std::to_string(gen_seed));
      auto cfg = sp::scenario_from_config(kv);
      auto trace = sp::generate(cfg);
      sp::write_trace_csv(trace, gen_out);
      m["config"] = config_json(sp::scenario_echo(cfg));
      m["seed"] = gen_seed;
      m["inputs"] = {{"config", gen_config}};
      m["outputs"] = {{"trace", gen_out}};
      m["records"] = trace.records.size();
      m.write(manifest_path(manifest_out, gen_out));
    } else if (*sim) {
      Manifest m("simulate");
      sp::KeyValueConfig kv = sim_config.empty() ? sp::KeyValueConfig{} : sp::KeyValueConfig::load(sim_config);
      kv.set("seed", std::to_string(sim_seed));
      auto cfg = sp::sim_from_config(kv);
      auto model = sp::load_network_model(sim_network);
      auto result = sp::simulate(model, cfg);
      auto trace = sim_raw ? std::move(result.trace) : sp::map_streams_to_receivers(result.trace);
      sp::write_trace_csv(trace, sim_out);
      m["config"] = config_json(sp::sim_echo(cfg));
      m["seed"] = sim_seed;
      m["inputs"] = {{"network", sim_network}, {"config", sim_config}};
      m["outputs"] = {{"trace", sim_out}};
      m["records"] = trace.records.size();
      m["circuits"] = result.circuits.size();
      m["direction"] = sim_raw ? "none (raw client ids)" : "receiver";
      m.write(manifest_path(manifest_out, sim_out));
    } else if (*scl) {
      Manifest m("scale");
      auto model = sp::load_network_model(scl_network);
      auto factor = sp::Rational::parse(scl_factor);
      auto scaled = scl_mode == "vertical" ? sp::scale_vertical(model, factor)
                                           : sp::scale_horizontal(model, factor, scl_seed);
      sp::save_network_model(scaled, scl_out);
      m["config"] = {{"mode", scl_mode}, {"factor", scl_factor}};
      m["seed"] = scl_seed;
      m["inputs"] = {{"network", scl_network}};
      m["outputs"] = {{"network", scl_out}};
      m["relays_before"] = model.relays.size();
      m["relays_after"] = scaled.relays.size();
      m["exits_before"] = model.exit_count();
      m["exits_after"] = scaled.exit_count();
      m.write(manifest_path(manifest_out, scl_out));
    } else if (*ana) {
      Manifest m("analyze");
      auto window = window_from(ana_dmin, ana_dmax);
      auto direction = sp::parse_direction(ana_direction);
      std::uint64_t cap = ana_max_mem.empty() ? 0 : parse_bytes(ana_max_mem);
      auto file_bytes = fs::file_size(ana_trace);
      check_memory_cap(cap, estimate_trace_bytes(file_bytes, file_bytes / 24), "trace");
      auto trace = sp::load_trace_csv(ana_trace, direction);
      check_memory_cap(cap, estimate_trace_bytes(file_bytes, trace.records.size()), "trace");
      auto results = sp::analyze_all(sp::Analyzer(trace), window, ana_workers);
      sp::csv_detail::write_file(ana_out, sp::format_results_csv(results), "pruning-core");
      if (!ana_members.empty()) {
        sp::csv_detail::write_file(ana_members, sp::format_members_csv(results), "pruning-core");
      }
      m["config"] = {{"window", window_json(window)}, {"direction", ana_direction}, {"workers", ana_workers}};
      m["seed"] = nullptr;
      m["inputs"] = {{"trace", ana_trace}};
      m["outputs"] = {{"results", ana_out}, {"members", ana_members}};
      m["subjects"] = results.size();
      m["records"] = trace.records.size();
      m.write(manifest_path(manifest_out, ana_out));
    } else if (*rep) {
      Manifest m("report");
      auto results = sp::load_results_csv(rep_results);
      auto trace = sp::load_trace_csv(rep_trace, sp::parse_direction(rep_direction));
      fs::create_directories(rep_out_dir);
      auto summary = sp::summarize(results);
      fs::path dir = rep_out_dir;
      sp::csv_detail::write_file(dir / "summary.csv", sp::format_summary_csv(summary), "metrics-report");
      sp::csv_detail::write_file(dir / "cdf.csv", sp::format_cdf_csv(sp::cdf(results)), "metrics-report");
      sp::csv_detail::write_file(dir / "length_buckets.csv",
                                 sp::format_buckets_csv(sp::bucket_by_length(results, trace)),
                                 "metrics-report");
      json meta = {{"software_version", sp::kVersion},
                   {"results", rep_results},
                   {"trace", rep_trace},
                   {"direction", rep_direction},
                   {"stddev", sp::kStddevConvention},
                   {"median", sp::kMedianConvention},
                   {"length_buckets", "10 equal-count buckets by message count, ties by subject id"}};
      // Window and seed live in the analyze manifest, when it sits next to the results.
      if (fs::path am = rep_results + ".manifest.json"; fs::exists(am)) {
        auto prior = json::parse(sp::csv_detail::read_file(am, "metrics-report"), nullptr, false);
        if (!prior.is_discarded()) meta["analysis"] = {{"config", prior["config"]}, {"seed", prior["seed"]}};
      }
      sp::csv_detail::write_file(dir / "metadata.json", meta.dump(2) + "\n", "metrics-report");
      m["config"] = {{"direction", rep_direction}};
      m["seed"] = nullptr;
      m["inputs"] = {{"results", rep_results}, {"trace", rep_trace}};
      m["outputs"] = {{"dir", rep_out_dir}};
      m.write(manifest_out.empty() ? dir / "manifest.json" : fs::path(manifest_out));
    } else if (*swp) {
      Manifest m("sweep");
      sp::SweepSpec spec;
      spec.parameter = sp::parse_sweep_parameter(swp_param);
      spec.values = parse_sweep_values(spec.parameter, swp_values);
      spec.replications = swp_reps;
      sp::KeyValueConfig kv = swp_config.empty() ? sp::KeyValueConfig{} : sp::KeyValueConfig::load(swp_config);
      kv.set("seed", std::to_string(swp_seed));
      spec.base = sp::scenario_from_config(kv);
      const sp::TimeUs margin{100'000};
      sp::DelayWindow window{
          swp_dmin.empty() ? sp::checked_sub(spec.base.base_latency, margin) : sp::parse_duration(swp_dmin),
          swp_dmax.empty() ? sp::checked_add(spec.base.base_latency, margin) : sp::parse_duration(swp_dmax)};
      auto rows = sp::run_sweep(spec, window, swp_workers);
      std::string csv = sp::format_sweep_csv(rows);
      fs::path out = swp_out.empty() ? fs::path("sweep_" + swp_param + ".csv") : fs::path(swp_out);
      sp::csv_detail::write_file(out, csv, "synth-gen");
      m["config"] = {{"base", config_json(sp::scenario_echo(spec.base))},
                     {"parameter", swp_param},
                     {"values", spec.values},
                     {"replications", swp_reps},
                     {"window", window_json(window)},
                     {"workers", swp_workers}};
      m["seed"] = swp_seed;
      m["inputs"] = {{"config", swp_config}};
      m["outputs"] = {{"sweep", out.string()}};
      m.write(manifest_path(manifest_out, out));
    }
  } catch (const sp::Error& e) {
    std::cerr << "error: " << e.module() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: cli: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
