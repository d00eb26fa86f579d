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
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "streamprune/error.hpp"
#include "streamprune/pruning.hpp"
#include "streamprune/trace.hpp"

namespace streamprune {

// Conventions: standard deviation is the population form; the median of an
// even-length list is the lower of the two middle values.
inline constexpr const char* kStddevConvention = "population";
inline constexpr const char* kMedianConvention = "lower-middle";

struct SummaryStats {
  std::size_t n_subjects = 0;
  std::size_t fully_deanonymized = 0;  // subjects with A = 1
  double mean = 0.0;
  std::uint64_t median = 0;
  double stddev = 0.0;
};

inline SummaryStats summarize_sizes(std::vector<std::uint64_t> sizes) {
  if (sizes.empty()) throw Error("metrics-report", "cannot summarize an empty result set");
  std::sort(sizes.begin(), sizes.end());
  SummaryStats s;
  s.n_subjects = sizes.size();
  s.fully_deanonymized = static_cast<std::size_t>(std::count(sizes.begin(), sizes.end(), 1u));
  double sum = 0.0;
  for (auto v : sizes) sum += static_cast<double>(v);
  s.mean = sum / static_cast<double>(sizes.size());
  double sq = 0.0;
  for (auto v : sizes) sq += (static_cast<double>(v) - s.mean) * (static_cast<double>(v) - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(sizes.size()));
  s.median = sizes[(sizes.size() - 1) / 2];
  return s;
}

inline std::vector<std::uint64_t> final_sizes(std::span<const AnonymityResult> results) {
  std::vector<std::uint64_t> sizes;
  sizes.reserve(results.size());
  for (const auto& r : results) sizes.push_back(r.set_size());
  return sizes;
}

inline SummaryStats summarize(std::span<const AnonymityResult> results) {
  return summarize_sizes(final_sizes(results));
}

/// Nearest-rank percentile, p in [0, 100].
inline std::uint64_t percentile(std::vector<std::uint64_t> values, double p) {
  if (values.empty()) throw Error("metrics-report", "percentile of empty input");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

/// Empirical CDF: (set size, fraction of subjects with size <= it).
using CdfSeries = std::vector<std::pair<std::uint64_t, double>>;

inline CdfSeries cdf_of_sizes(std::vector<std::uint64_t> sizes) {
  CdfSeries out;
  if (sizes.empty()) return out;
  std::sort(sizes.begin(), sizes.end());
  const auto n = static_cast<double>(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i + 1 < sizes.size() && sizes[i + 1] == sizes[i]) continue;
    out.emplace_back(sizes[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

inline CdfSeries cdf(std::span<const AnonymityResult> results) {
  return cdf_of_sizes(final_sizes(results));
}

struct LengthBucket {
  unsigned lower_percentile = 0;  // bucket covers [lower, lower + 10)
  std::size_t n_subjects = 0;
  std::optional<SummaryStats> stats;  // empty when the bucket has no subjects
  CdfSeries cdf;
};

struct LengthBucketReport {
  std::vector<LengthBucket> buckets;  // always 10
};

/// Ranks subjects by message count (ties by subject id) and splits them into
/// ten equal-count buckets. Message counts come from `trace`, using the
/// trace's direction to decide which id is the subject.
inline LengthBucketReport bucket_by_length(std::span<const AnonymityResult> results,
                                           const Trace& trace) {
  const bool by_sender = trace.direction == Direction::sender_anonymity;
  std::unordered_map<std::string_view, std::uint64_t> counts;
  for (const auto& r : trace.records) ++counts[by_sender ? r.sender_id : r.receiver_id];

  struct Row {
    std::uint64_t length;
    const std::string* id;
    std::uint64_t size;
  };
  std::vector<Row> rows;
  rows.reserve(results.size());
  for (const auto& r : results) {
    auto it = counts.find(r.subject_id);
    if (it == counts.end()) {
      throw Error("metrics-report", "subject " + r.subject_id + " does not appear in the trace");
    }
    rows.push_back({it->second, &r.subject_id, r.set_size()});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.length, *a.id) < std::tie(b.length, *b.id);
  });

  LengthBucketReport report;
  const std::size_t n = rows.size();
  for (unsigned b = 0; b < 10; ++b) {
    LengthBucket bucket;
    bucket.lower_percentile = b * 10;
    std::size_t begin = n * b / 10;
    std::size_t end = n * (b + 1) / 10;
    std::vector<std::uint64_t> sizes;
    for (std::size_t i = begin; i < end; ++i) sizes.push_back(rows[i].size);
    bucket.n_subjects = sizes.size();
    if (!sizes.empty()) bucket.stats = summarize_sizes(sizes);
    bucket.cdf = cdf_of_sizes(std::move(sizes));
    report.buckets.push_back(std::move(bucket));
  }
  return report;
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace detail

inline std::string format_summary_csv(const SummaryStats& s) {
  std::string out = "n_subjects,fully_deanonymized,mean,median,stddev\n";
  out += std::to_string(s.n_subjects) + "," + std::to_string(s.fully_deanonymized) + "," +
         detail::fmt_double(s.mean) + "," + std::to_string(s.median) + "," +
         detail::fmt_double(s.stddev) + "\n";
  return out;
}

inline std::string format_cdf_csv(const CdfSeries& series) {
  std::string out = "set_size,cumulative_fraction\n";
  for (const auto& [size, frac] : series) {
    out += std::to_string(size) + "," + detail::fmt_double(frac) + "\n";
  }
  return out;
}

/// Long format: one row per (bucket, CDF point), with the bucket summary
/// repeated on each row.
inline std::string format_buckets_csv(const LengthBucketReport& report) {
  std::string out =
      "bucket,n_subjects,fully_deanonymized,mean,median,stddev,set_size,cumulative_fraction\n";
  for (const auto& b : report.buckets) {
    std::string label = std::to_string(b.lower_percentile) + "-" + std::to_string(b.lower_percentile + 10);
    std::string head = label + "," + std::to_string(b.n_subjects) + ",";
    if (b.stats) {
      head += std::to_string(b.stats->fully_deanonymized) + "," + detail::fmt_double(b.stats->mean) +
              "," + std::to_string(b.stats->median) + "," + detail::fmt_double(b.stats->stddev) + ",";
    } else {
      head += ",,,,";
    }
    if (b.cdf.empty()) {
      out += head + ",\n";
      continue;
    }
    for (const auto& [size, frac] : b.cdf) {
      out += head + std::to_string(size) + "," + detail::fmt_double(frac) + "\n";
    }
  }
  return out;
}

}  // namespace streamprune
