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

#include "streamprune/pruning.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "streamprune.hpp"

namespace streamprune {
namespace {

const DelayWindow kWindow{TimeUs{10}, TimeUs{20}};

Trace make_trace(std::initializer_list<MessageRecord> recs) {
  Trace t;
  t.records = recs;
  sort_canonical(t.records);
  validate(t);
  return t;
}

MessageRecord probe(TimeUs send) { return {999, "P", "Q", send, send}; }

TEST(PsiMmTest, ClosedLowerBoundIncluded) {
  auto t = make_trace({{1, "A", "X", TimeUs{0}, TimeUs{10}}});
  ReceiverIndex idx(t);
  EXPECT_EQ(psi_mm(idx, probe(TimeUs{0}), kWindow), (std::vector<std::uint64_t>{1}));
}

TEST(PsiMmTest, JustPastUpperBoundExcluded) {
  auto t = make_trace({{1, "A", "X", TimeUs{0}, TimeUs{21}}, {2, "B", "Y", TimeUs{0}, TimeUs{20}}});
  ReceiverIndex idx(t);
  EXPECT_EQ(psi_mm(idx, probe(TimeUs{0}), kWindow), (std::vector<std::uint64_t>{2}));
}

TEST(PsiMmTest, ScatteredMessagesMatchLinearScan) {
  auto t = make_trace({{1, "A", "X", TimeUs{0}, TimeUs{3}},
                       {2, "B", "Y", TimeUs{0}, TimeUs{12}},
                       {3, "C", "X", TimeUs{5}, TimeUs{15}},
                       {4, "D", "Z", TimeUs{10}, TimeUs{19}},
                       {5, "E", "Y", TimeUs{20}, TimeUs{40}}});
  ReceiverIndex idx(t);
  EXPECT_EQ(psi_mm(idx, probe(TimeUs{0}), kWindow), (std::vector<std::uint64_t>{2, 3, 4}));
}

TEST(PsiMrTest, SetSemantics) {
  auto t = make_trace({{1, "A", "X", TimeUs{0}, TimeUs{12}},
                       {2, "B", "X", TimeUs{0}, TimeUs{14}},
                       {3, "C", "Y", TimeUs{0}, TimeUs{16}}});
  ReceiverIndex idx(t);
  EXPECT_TRUE(psi_mr(idx, probe(TimeUs{100}), kWindow).empty());
  EXPECT_EQ(psi_mr(idx, probe(TimeUs{0}), DelayWindow{TimeUs{11}, TimeUs{15}}),
            (std::vector<std::string>{"X"}));
  EXPECT_EQ(psi_mr(idx, probe(TimeUs{0}), kWindow), (std::vector<std::string>{"X", "Y"}));
}

TEST(WindowRangeTest, HandCheckedCases) {
  auto t = make_trace({{1, "A", "R", TimeUs{0}, TimeUs{12}}, {2, "A", "R", TimeUs{100}, TimeUs{115}}});
  ReceiverIndex idx(t);
  auto r = window_range(idx, "R", probe(TimeUs{0}), kWindow);
  EXPECT_FALSE(r.empty);
  EXPECT_EQ(r.lo, 0u);
  EXPECT_EQ(r.hi, 0u);
  EXPECT_TRUE(window_range(idx, "R", probe(TimeUs{200}), kWindow).empty);
  EXPECT_THROW(window_range(idx, "nope", probe(TimeUs{0}), kWindow), Error);
}

TEST(WindowRangeTest, MatchesLinearScanOnRandomInputs) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> n(1, 12);
  std::uniform_int_distribution<std::int64_t> t(0, 100), dlo(0, 20), dw(0, 20);
  for (int trial = 0; trial < 10000; ++trial) {
    Trace trace;
    int k = n(gen);
    for (int i = 0; i < k; ++i) {
      auto s = t(gen);
      trace.records.push_back({static_cast<std::uint64_t>(i), "S" + std::to_string(i), "R", TimeUs{s},
                               TimeUs{s + t(gen)}});
    }
    trace.records.push_back({1000, "Z", "Other", TimeUs{0}, TimeUs{50}});
    ReceiverIndex idx(trace);
    auto r = *idx.find("R");
    auto lo = dlo(gen);
    DelayWindow w{TimeUs{lo}, TimeUs{lo + dw(gen)}};
    TimeUs send{t(gen)};

    auto times = idx.times(r);
    std::size_t first = times.size(), last = 0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (testing::in_window(send, times[j], w)) {
        first = std::min(first, j);
        last = j + 1;
      }
    }
    auto got = window_range(idx, r, send, w);
    if (first >= last) {
      ASSERT_TRUE(got.empty) << trial;
    } else {
      ASSERT_FALSE(got.empty) << trial;
      ASSERT_EQ(got.lo, first);
      ASSERT_EQ(got.hi, last - 1);
    }
  }
}

TEST(ReceiverIndexTest, TiesOrderedByMessageId) {
  auto t = make_trace({{7, "A", "R", TimeUs{0}, TimeUs{10}},
                       {3, "B", "R", TimeUs{1}, TimeUs{10}},
                       {5, "C", "R", TimeUs{2}, TimeUs{4}}});
  ReceiverIndex idx(t);
  auto ids = idx.message_ids(0);
  EXPECT_EQ(std::vector<std::uint64_t>(ids.begin(), ids.end()), (std::vector<std::uint64_t>{5, 3, 7}));
  EXPECT_EQ(idx.message_count(0), 3u);
}

TEST(GallopTest, AgreesWithLowerBound) {
  std::vector<TimeUs> v;
  for (int i = 0; i < 200; ++i) v.push_back(TimeUs{i / 3});
  for (std::size_t from = 0; from <= v.size(); from += 7) {
    for (std::int64_t x = -1; x < 70; ++x) {
      auto expect = std::max<std::size_t>(
          from, static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), TimeUs{x}) - v.begin()));
      ASSERT_EQ(detail::gallop_lower_bound(v, from, TimeUs{x}), expect);
    }
  }
}

TEST(SubjectAnonymityTest, SymmetricPairIsConfusable) {
  auto t = make_trace({{1, "A", "X", TimeUs{0}, TimeUs{15}}, {2, "B", "Y", TimeUs{0}, TimeUs{15}}});
  Analyzer an(t);
  auto a = subject_anonymity(an, "A", kWindow);
  EXPECT_EQ(a.final_set, (std::vector<std::string>{"X", "Y"}));
  EXPECT_EQ(a.profile, (std::vector<std::uint32_t>{2}));
  EXPECT_THROW(subject_anonymity(an, "nobody", kWindow), Error);
}

// A sender with more messages than any other receiver ever gets keeps only
// its own receiver.
TEST(SubjectAnonymityTest, LongestSenderIsDeanonymized) {
  Trace t;
  std::uint64_t id = 0;
  for (int i = 0; i < 6; ++i) {
    t.records.push_back({++id, "long", "X", TimeUs{i * 2}, TimeUs{i * 2 + 15}});
  }
  for (int i = 0; i < 3; ++i) {
    t.records.push_back({++id, "short1", "Y", TimeUs{i * 2}, TimeUs{i * 2 + 15}});
    t.records.push_back({++id, "short2", "Z", TimeUs{i * 2 + 1}, TimeUs{i * 2 + 16}});
  }
  sort_canonical(t.records);
  auto r = subject_anonymity(Analyzer(t), "long", kWindow);
  EXPECT_EQ(r.final_set, (std::vector<std::string>{"X"}));
  EXPECT_EQ(r.set_size(), 1u);
  EXPECT_EQ(r.profile.front(), 3u);
}

TEST(SubjectAnonymityTest, RandomTracesMatchBruteForce) {
  std::mt19937_64 gen(2024);
  testing::RandomTraceSpec spec{.max_senders = 20, .max_receivers = 5, .max_messages = 6,
                                .time_span = 80, .delays = kWindow};
  for (int trial = 0; trial < 150; ++trial) {
    auto t = testing::random_trace(gen, spec);
    Analyzer an(t);
    for (std::uint32_t s = 0; s < an.subject_count(); ++s) {
      auto got = an.analyze(s, kWindow);
      auto want = testing::brute_force_sender(t, got.subject_id, kWindow);
      ASSERT_EQ(got.final_set, want.final_set) << "trial " << trial << " " << got.subject_id;
      ASSERT_EQ(got.profile, want.profile) << "trial " << trial << " " << got.subject_id;
    }
  }
}

TEST(AnalyzeAllTest, SingleSenderSingleReceiver) {
  auto t = make_trace({{1, "A", "X", TimeUs{0}, TimeUs{15}}, {2, "A", "X", TimeUs{3}, TimeUs{17}}});
  auto res = analyze_all(t, kWindow, 1);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].final_set, (std::vector<std::string>{"X"}));
  EXPECT_EQ(res[0].profile, (std::vector<std::uint32_t>{1, 1}));
}

// Two clusters separated by more than the window can bridge: no candidate
// ever crosses from one cluster to the other.
TEST(AnalyzeAllTest, DisjointClustersStaySeparate) {
  std::mt19937_64 gen(8);
  testing::RandomTraceSpec spec{.max_senders = 6, .max_receivers = 3, .max_messages = 4,
                                .time_span = 30, .delays = kWindow};
  for (int trial = 0; trial < 100; ++trial) {
    auto a = testing::random_trace(gen, spec);
    auto b = testing::random_trace(gen, spec);
    Trace t = a;
    for (auto r : b.records) {
      r.message_id += 1000;
      r.sender_id = "late" + r.sender_id;
      r.receiver_id = "late" + r.receiver_id;
      r.send_time.us += 10000;
      r.receive_time.us += 10000;
      t.records.push_back(r);
    }
    sort_canonical(t.records);
    for (const auto& res : analyze_all(t, kWindow, 2)) {
      bool late = res.subject_id.starts_with("late");
      for (const auto& c : res.final_set) ASSERT_EQ(c.starts_with("late"), late);
      ASSERT_EQ(res, testing::brute_force_sender(t, res.subject_id, kWindow));
    }
  }
}

TEST(AnalyzeAllTest, WorkerCountDoesNotChangeOutput) {
  ScenarioConfig c;
  c.n_senders = 120;
  c.n_receivers = 15;
  c.start_span = TimeUs{2'000'000};
  c.bytes_per_stream = 40'000;
  c.length_stddev = 20'000;
  c.jitter = TimeUs{50'000};
  c.seed = 4;
  auto t = generate(c);
  DelayWindow w{TimeUs{110'000}, TimeUs{310'000}};
  auto one = format_results_csv(analyze_all(t, w, 1));
  EXPECT_EQ(format_results_csv(analyze_all(t, w, 4)), one);
  EXPECT_EQ(format_results_csv(analyze_all(t, w, 7)), one);
}

TEST(AnalyzeAllTest, EmptyTraceGivesNoResults) {
  EXPECT_TRUE(analyze_all(Trace{}, kWindow, 3).empty());
}

// ---------------------------------------------------------------------------
// Invariants over generated traces.

class PruningPropertyTest : public ::testing::Test {
 protected:
  std::mt19937_64 gen{77};
  testing::RandomTraceSpec spec{.max_senders = 10, .max_receivers = 5, .max_messages = 6,
                                .time_span = 60, .delays = kWindow};
};

TEST_F(PruningPropertyTest, SoundnessAndCap) {
  for (int trial = 0; trial < 500; ++trial) {
    auto t = testing::random_trace(gen, spec);
    Analyzer an(t);
    for (std::uint32_t s = 0; s < an.subject_count(); ++s) {
      auto r = an.analyze(s, kWindow);
      auto truth = an.receivers().name(an.true_counterpart(s));
      ASSERT_TRUE(std::binary_search(r.final_set.begin(), r.final_set.end(), truth));
      ASSERT_GE(r.set_size(), 1u);
      ASSERT_LE(r.set_size(), an.receivers().receiver_count());
      ASSERT_EQ(r.set_size(), r.final_set.size());
      ASSERT_TRUE(std::is_sorted(r.profile.rbegin(), r.profile.rend()));
    }
  }
}

TEST_F(PruningPropertyTest, FinalSetWithinIntersectionOfMessageSets) {
  for (int trial = 0; trial < 300; ++trial) {
    auto t = testing::random_trace(gen, spec);
    ReceiverIndex idx(t);
    for (const auto& res : analyze_all(t, kWindow, 1)) {
      std::set<std::string> inter;
      bool first = true;
      for (const auto& m : t.records) {
        if (m.sender_id != res.subject_id) continue;
        auto mr = psi_mr(idx, m, kWindow);
        std::set<std::string> cur(mr.begin(), mr.end());
        if (first) {
          inter = cur;
          first = false;
        } else {
          std::set<std::string> keep;
          std::set_intersection(inter.begin(), inter.end(), cur.begin(), cur.end(),
                                std::inserter(keep, keep.end()));
          inter = keep;
        }
      }
      for (const auto& c : res.final_set) ASSERT_TRUE(inter.contains(c));
    }
  }
}

TEST_F(PruningPropertyTest, WiderWindowNeverShrinksSets) {
  std::uniform_int_distribution<std::int64_t> grow(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = testing::random_trace(gen, spec);
    DelayWindow wide{TimeUs{kWindow.d_min.us - grow(gen)}, TimeUs{kWindow.d_max.us + grow(gen)}};
    auto narrow = analyze_all(t, kWindow, 1);
    auto broad = analyze_all(t, wide, 1);
    for (std::size_t i = 0; i < narrow.size(); ++i) {
      ASSERT_TRUE(std::includes(broad[i].final_set.begin(), broad[i].final_set.end(),
                                narrow[i].final_set.begin(), narrow[i].final_set.end()));
    }
  }
}

TEST_F(PruningPropertyTest, AppendingOwnMessageNeverGrowsSet) {
  std::uniform_int_distribution<std::int64_t> delay(kWindow.d_min.us, kWindow.d_max.us);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = testing::random_trace(gen, spec);
    Analyzer before(t);
    std::uint32_t s = static_cast<std::uint32_t>(gen() % before.subject_count());
    auto subject = before.subject_name(s);
    auto truth = before.receivers().name(before.true_counterpart(s));
    auto base = before.analyze(s, kWindow);

    Trace extended = t;
    TimeUs last{0};
    for (const auto& r : t.records) {
      if (r.sender_id == subject) last = std::max(last, r.send_time);
    }
    TimeUs send{last.us + static_cast<std::int64_t>(gen() % 10)};
    extended.records.push_back({5000, subject, truth, send, TimeUs{send.us + delay(gen)}});
    sort_canonical(extended.records);
    auto after = subject_anonymity(Analyzer(extended), subject, kWindow);
    ASSERT_TRUE(std::includes(base.final_set.begin(), base.final_set.end(), after.final_set.begin(),
                              after.final_set.end()))
        << trial;
  }
}

TEST_F(PruningPropertyTest, TimeShiftInvariance) {
  for (int trial = 0; trial < 300; ++trial) {
    auto t = testing::random_trace(gen, spec);
    auto shifted = shift_time(t, TimeUs{static_cast<std::int64_t>(gen() % 1'000'000'000)});
    ASSERT_EQ(analyze_all(shifted, kWindow, 1), analyze_all(t, kWindow, 1));
  }
}

}  // namespace
}  // namespace streamprune
