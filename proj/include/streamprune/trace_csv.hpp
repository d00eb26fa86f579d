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
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "streamprune/error.hpp"
#include "streamprune/trace.hpp"

namespace streamprune {

inline constexpr std::string_view kTraceCsvHeader =
    "message_id,sender_id,receiver_id,send_time_us,receive_time_us";

namespace csv_detail {

inline std::string read_file(const std::filesystem::path& path, const char* module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(module, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data,
                       const char* module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(module, "cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(module, "write failed for '" + path.string() + "'");
}

/// Calls fn(line_number, line) for every line, stripping a trailing '\r'.
/// A final newline does not produce an empty trailing line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (line.ends_with('\r')) line.remove_suffix(1);
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

/// Splits on ',' into exactly N fields; returns false on a count mismatch.
template <std::size_t N>
bool split_fields(std::string_view line, std::array<std::string_view, N>& out) {
  std::size_t i = 0;
  while (true) {
    auto comma = line.find(',');
    if (i == N) return false;
    out[i++] = line.substr(0, comma);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return i == N;
}

inline bool parse_u64(std::string_view s, std::uint64_t& v) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

inline void append_u64(std::string& out, std::uint64_t v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

inline void check_token(std::string_view id, const char* module) {
  if (id.empty() || id.find_first_of(",\r\n") != std::string_view::npos) {
    throw Error(module, "id '" + std::string(id) + "' is empty or contains a separator");
  }
}

}  // namespace csv_detail

/// Parses trace CSV text. Rows may come in any order; the result is in
/// canonical order and has been validated for `direction`.
inline Trace parse_trace_csv(std::string_view text, Direction direction) {
  using namespace csv_detail;
  Trace trace;
  trace.direction = direction;
  bool saw_header = false;
  constexpr auto kMaxTime =
      static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fail = [&](const std::string& why) {
      throw Error("trace-model", "line " + std::to_string(line_no) + ": " + why);
    };
    if (!saw_header) {
      if (line != kTraceCsvHeader) fail("header must be '" + std::string(kTraceCsvHeader) + "'");
      saw_header = true;
      return;
    }
    if (line.empty()) fail("empty row");
    std::array<std::string_view, 5> f;
    if (!split_fields(line, f)) fail("expected 5 fields");
    MessageRecord r;
    std::uint64_t send = 0, recv = 0;
    if (!parse_u64(f[0], r.message_id)) fail("bad message_id '" + std::string(f[0]) + "'");
    if (f[1].empty()) fail("empty sender_id");
    if (f[2].empty()) fail("empty receiver_id");
    if (!parse_u64(f[3], send) || send > kMaxTime) fail("bad send_time_us '" + std::string(f[3]) + "'");
    if (!parse_u64(f[4], recv) || recv > kMaxTime) fail("bad receive_time_us '" + std::string(f[4]) + "'");
    r.sender_id = f[1];
    r.receiver_id = f[2];
    r.send_time = TimeUs{static_cast<std::int64_t>(send)};
    r.receive_time = TimeUs{static_cast<std::int64_t>(recv)};
    trace.records.push_back(std::move(r));
  });
  if (!saw_header) throw Error("trace-model", "missing header row");

  validate(trace);
  sort_canonical(trace.records);
  return trace;
}

inline Trace load_trace_csv(const std::filesystem::path& path, Direction direction) {
  return parse_trace_csv(csv_detail::read_file(path, "trace-model"), direction);
}

/// Serializes in canonical (send_time, message_id) order.
inline std::string format_trace_csv(const Trace& trace) {
  using namespace csv_detail;
  std::vector<const MessageRecord*> order;
  order.reserve(trace.records.size());
  for (const auto& r : trace.records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const MessageRecord* a, const MessageRecord* b) {
    return std::tie(a->send_time, a->message_id) < std::tie(b->send_time, b->message_id);
  });

  std::string out;
  out.reserve(64 + trace.records.size() * 40);
  out.append(kTraceCsvHeader);
  out.push_back('\n');
  for (const auto* r : order) {
    check_token(r->sender_id, "trace-model");
    check_token(r->receiver_id, "trace-model");
    append_u64(out, r->message_id);
    out.push_back(',');
    out.append(r->sender_id);
    out.push_back(',');
    out.append(r->receiver_id);
    out.push_back(',');
    append_u64(out, static_cast<std::uint64_t>(r->send_time.us));
    out.push_back(',');
    append_u64(out, static_cast<std::uint64_t>(r->receive_time.us));
    out.push_back('\n');
  }
  return out;
}

inline void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  csv_detail::write_file(path, format_trace_csv(trace), "trace-model");
}

}  // namespace streamprune
