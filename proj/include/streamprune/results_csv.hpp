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

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamprune/pruning.hpp"
#include "streamprune/trace_csv.hpp"

namespace streamprune {

inline constexpr std::string_view kResultsCsvHeader =
    "subject_id,final_set_size,messages_observed,profile";
inline constexpr std::string_view kMembersCsvHeader = "subject_id,candidate_id";

inline std::string format_results_csv(std::span<const AnonymityResult> results) {
  using csv_detail::append_u64;
  std::string out;
  out.append(kResultsCsvHeader);
  out.push_back('\n');
  for (const auto& r : results) {
    out.append(r.subject_id);
    out.push_back(',');
    append_u64(out, r.set_size());
    out.push_back(',');
    append_u64(out, r.messages_observed());
    out.push_back(',');
    for (std::size_t i = 0; i < r.profile.size(); ++i) {
      if (i) out.push_back(';');
      append_u64(out, r.profile[i]);
    }
    out.push_back('\n');
  }
  return out;
}

/// One row per (subject, candidate). Can be very large.
inline std::string format_members_csv(std::span<const AnonymityResult> results) {
  std::string out;
  out.append(kMembersCsvHeader);
  out.push_back('\n');
  for (const auto& r : results) {
    for (const auto& c : r.final_set) {
      out.append(r.subject_id);
      out.push_back(',');
      out.append(c);
      out.push_back('\n');
    }
  }
  return out;
}

/// Reads a results CSV back. Candidate members are not part of this file, so
/// final_set stays empty; set_size() reports the stored size.
inline std::vector<AnonymityResult> parse_results_csv(std::string_view text) {
  using namespace csv_detail;
  std::vector<AnonymityResult> out;
  bool saw_header = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fail = [&](const std::string& why) {
      throw Error("metrics-report", "results line " + std::to_string(line_no) + ": " + why);
    };
    if (!saw_header) {
      if (line != kResultsCsvHeader) fail("unexpected header");
      saw_header = true;
      return;
    }
    std::array<std::string_view, 4> f;
    if (!split_fields(line, f)) fail("expected 4 fields");
    AnonymityResult r;
    r.subject_id = f[0];
    std::uint64_t size = 0, observed = 0;
    if (!parse_u64(f[1], size) || !parse_u64(f[2], observed)) fail("bad count");
    std::string_view prof = f[3];
    while (!prof.empty()) {
      auto semi = prof.find(';');
      std::uint64_t v = 0;
      if (!parse_u64(prof.substr(0, semi), v)) fail("bad profile entry");
      r.profile.push_back(static_cast<std::uint32_t>(v));
      if (semi == std::string_view::npos) break;
      prof.remove_prefix(semi + 1);
    }
    if (r.profile.size() != observed || (observed && r.profile.back() != size)) {
      fail("profile inconsistent with counts");
    }
    out.push_back(std::move(r));
  });
  if (!saw_header) throw Error("metrics-report", "results file missing header");
  return out;
}

inline std::vector<AnonymityResult> load_results_csv(const std::filesystem::path& path) {
  return parse_results_csv(csv_detail::read_file(path, "metrics-report"));
}

}  // namespace streamprune
