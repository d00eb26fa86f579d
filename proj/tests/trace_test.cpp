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

#include <filesystem>
#include <random>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.hpp"
#include "streamprune.hpp"

namespace streamprune {
namespace {

using ::testing::HasSubstr;

const std::string kHeader = "message_id,sender_id,receiver_id,send_time_us,receive_time_us\n";

std::string error_of(const std::string& csv, Direction d = Direction::sender_anonymity) {
  try {
    parse_trace_csv(csv, d);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(TraceCsvTest, ParsesTwoRecords) {
  auto t = parse_trace_csv(kHeader + "1,A,X,0,210000\n2,A,X,411,210411\n",
                           Direction::sender_anonymity);
  ASSERT_EQ(t.records.size(), 2u);
  EXPECT_EQ(t.records[0].sender_id, "A");
  EXPECT_EQ(t.records[1].receiver_id, "X");
  EXPECT_EQ(t.records[1].send_time.us, 411);
  EXPECT_EQ(t.records[1].receive_time.us, 210411);
}

TEST(TraceCsvTest, AcceptsArbitraryRowOrder) {
  auto t = parse_trace_csv(kHeader + "2,A,X,411,210411\n1,A,X,0,210000\n",
                           Direction::sender_anonymity);
  EXPECT_EQ(t.records[0].message_id, 1u);
}

TEST(TraceCsvTest, RejectsMultipleReceiversPerSender) {
  EXPECT_THAT(error_of(kHeader + "1,A,X,0,10\n2,A,Y,5,15\n"),
              HasSubstr("multiple receivers for sender A"));
  // Fine in the other direction: X and Y each hear only from A.
  EXPECT_NO_THROW(parse_trace_csv(kHeader + "1,A,X,0,10\n2,A,Y,5,15\n",
                                  Direction::receiver_anonymity));
  EXPECT_THAT(error_of(kHeader + "1,A,X,0,10\n2,B,X,5,15\n", Direction::receiver_anonymity),
              HasSubstr("multiple senders for receiver X"));
}

TEST(TraceCsvTest, ReportsLineNumberOfMalformedRow) {
  EXPECT_THAT(error_of(kHeader + "1,A,X,0,10\n2,A,X,oops,15\n"), HasSubstr("line 3"));
  EXPECT_THAT(error_of(kHeader + "1,A,X,0\n"), HasSubstr("line 2"));
  EXPECT_THAT(error_of(kHeader + "1,A,X,0,10,7\n"), HasSubstr("expected 5 fields"));
  EXPECT_THAT(error_of(kHeader + "1,,X,0,10\n"), HasSubstr("empty sender_id"));
  EXPECT_THAT(error_of(kHeader + "1,A,X,-1,10\n"), HasSubstr("send_time_us"));
}

TEST(TraceCsvTest, RejectsBadHeader) {
  EXPECT_THAT(error_of("id,s,r,ts,tr\n1,A,X,0,10\n"), HasSubstr("header"));
  EXPECT_THAT(error_of(""), HasSubstr("missing header"));
}

TEST(TraceCsvTest, RejectsDuplicateIdAndTimeTravel) {
  EXPECT_THAT(error_of(kHeader + "1,A,X,0,10\n1,A,X,5,15\n"), HasSubstr("duplicate message_id 1"));
  EXPECT_THAT(error_of(kHeader + "1,A,X,10,5\n"), HasSubstr("receive_time < send_time"));
}

TEST(TraceCsvTest, TimeBeyondInt64IsRejected) {
  EXPECT_THAT(error_of(kHeader + "1,A,X,0,9223372036854775808\n"), HasSubstr("receive_time_us"));
}

TEST(TraceCsvTest, EmptyTraceWritesHeaderOnly) {
  EXPECT_EQ(format_trace_csv(Trace{}), kHeader);
}

TEST(TraceCsvTest, WritesInSendTimeOrderWithIdTieBreak) {
  Trace t;
  t.records = {{5, "B", "Y", TimeUs{20}, TimeUs{30}},
               {9, "A", "X", TimeUs{10}, TimeUs{25}},
               {3, "A", "X", TimeUs{10}, TimeUs{21}}};
  EXPECT_EQ(format_trace_csv(t), kHeader + "3,A,X,10,21\n9,A,X,10,25\n5,B,Y,20,30\n");
}

TEST(TraceCsvTest, CrlfLineEndingsAccepted) {
  auto t = parse_trace_csv(
      "message_id,sender_id,receiver_id,send_time_us,receive_time_us\r\n1,A,X,0,10\r\n",
      Direction::sender_anonymity);
  EXPECT_EQ(t.records.size(), 1u);
}

TEST(TraceCsvTest, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "streamprune_trace_roundtrip.csv";
  auto text = kHeader + "1,A,X,0,210000\n2,A,X,411,210411\n";
  write_trace_csv(parse_trace_csv(text, Direction::sender_anonymity), path);
  EXPECT_EQ(format_trace_csv(load_trace_csv(path, Direction::sender_anonymity)), text);
  std::filesystem::remove(path);
  EXPECT_THROW(load_trace_csv(path, Direction::sender_anonymity), Error);
}

// Property: canonical text -> parse -> format is the identity on bytes, and
// so is format -> parse -> format for any valid trace.
TEST(TraceCsvTest, RoundTripIsIdentityOnRandomTraces) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 300; ++i) {
    auto t = testing::random_trace(gen, {.max_senders = 8, .max_messages = 6, .time_span = 1000});
    std::shuffle(t.records.begin(), t.records.end(), gen);
    auto text = format_trace_csv(t);
    ASSERT_EQ(format_trace_csv(parse_trace_csv(text, Direction::sender_anonymity)), text);
  }
}

TEST(SwapRolesTest, SingleRecordMirrorsTimeAxis) {
  Trace t;
  t.records = {{1, "A", "X", TimeUs{0}, TimeUs{15}}};
  DelayWindow w{TimeUs{10}, TimeUs{20}};
  auto [s, w2] = swap_roles(t, w);
  ASSERT_EQ(s.records.size(), 1u);
  EXPECT_EQ(s.records[0].sender_id, "X");
  EXPECT_EQ(s.records[0].receiver_id, "A");
  EXPECT_EQ(s.records[0].send_time.us, 0);
  EXPECT_EQ(s.records[0].receive_time.us, 15);
  EXPECT_EQ(w2, w);
  EXPECT_EQ(s.direction, Direction::receiver_anonymity);
}

TEST(SwapRolesTest, PreservesDelaysAndIsValid) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 100; ++i) {
    auto t = testing::random_trace(gen, {});
    auto [s, w] = swap_roles(t, DelayWindow{TimeUs{10}, TimeUs{20}});
    std::map<std::uint64_t, std::int64_t> delay;
    for (const auto& r : t.records) delay[r.message_id] = r.receive_time.us - r.send_time.us;
    for (const auto& r : s.records) {
      ASSERT_EQ(r.receive_time.us - r.send_time.us, delay.at(r.message_id));
      ASSERT_GE(r.send_time.us, 0);
    }
    // Senders of t become receivers of s; each still has one counterpart.
    EXPECT_NO_THROW(validate(s));
  }
}

// Applying the swap twice shifts time but leaves every result unchanged.
TEST(SwapRolesTest, DoubleSwapPreservesAnonymity) {
  std::mt19937_64 gen(11);
  DelayWindow w{TimeUs{10}, TimeUs{20}};
  for (int i = 0; i < 200; ++i) {
    auto t = testing::random_trace(gen, {.max_senders = 6, .max_receivers = 4, .max_messages = 5});
    auto once = swap_roles(t, w);
    auto twice = swap_roles(once.first, once.second);
    ASSERT_EQ(twice.first.direction, t.direction);
    ASSERT_EQ(analyze_all(twice.first, twice.second, 1), analyze_all(t, w, 1)) << "trace " << i;
  }
}

Trace receiver_trace(std::initializer_list<MessageRecord> recs) {
  Trace t;
  t.direction = Direction::receiver_anonymity;
  t.records = recs;
  sort_canonical(t.records);
  validate(t);
  return t;
}

TEST(SwapRolesTest, ThreeSendersOneReceiverMatchesDirectEnumeration) {
  // R hears from B at 12 and 19, so candidate send times are [-8, 2] and
  // [-1, 9]. C (1, 7) fits both; A has only one send (2) inside either.
  DelayWindow w{TimeUs{10}, TimeUs{20}};
  auto t = receiver_trace({{1, "B", "R", TimeUs{0}, TimeUs{12}},
                           {2, "B", "R", TimeUs{4}, TimeUs{19}},
                           {3, "A", "Q", TimeUs{2}, TimeUs{15}},
                           {4, "C", "P", TimeUs{1}, TimeUs{14}},
                           {5, "C", "P", TimeUs{7}, TimeUs{17}},
                           {6, "A", "Q", TimeUs{30}, TimeUs{45}}});
  auto results = analyze_all(t, w, 1);
  ASSERT_EQ(results.size(), 3u);  // subjects P, Q, R
  for (const auto& r : results) {
    EXPECT_EQ(r.final_set, testing::brute_force_receiver_set(t, r.subject_id, w)) << r.subject_id;
  }
  EXPECT_EQ(results[2].subject_id, "R");
  EXPECT_EQ(results[2].final_set, (std::vector<std::string>{"B", "C"}));
}

// Exhaustive oracle: random receiver-direction traces with <= 6 messages.
TEST(SwapRolesTest, ReceiverDirectionMatchesBruteForce) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> n_msgs(1, 6), n_send(1, 3), n_recv(1, 3);
  std::uniform_int_distribution<std::int64_t> ts(0, 30), d(8, 22);
  DelayWindow w{TimeUs{8}, TimeUs{22}};
  for (int trial = 0; trial < 2000; ++trial) {
    int receivers = n_recv(gen), senders = n_send(gen);
    std::vector<int> owner(static_cast<std::size_t>(receivers));
    for (auto& o : owner) o = std::uniform_int_distribution<int>(0, senders - 1)(gen);
    Trace t;
    t.direction = Direction::receiver_anonymity;
    int k = n_msgs(gen);
    for (int i = 0; i < k; ++i) {
      int r = std::uniform_int_distribution<int>(0, receivers - 1)(gen);
      MessageRecord m{static_cast<std::uint64_t>(i + 1), "S" + std::to_string(owner[static_cast<std::size_t>(r)]),
                      "R" + std::to_string(r), TimeUs{ts(gen)}, TimeUs{0}};
      m.receive_time = TimeUs{m.send_time.us + d(gen)};
      t.records.push_back(m);
    }
    sort_canonical(t.records);
    for (const auto& res : analyze_all(t, w, 1)) {
      ASSERT_EQ(res.final_set, testing::brute_force_receiver_set(t, res.subject_id, w))
          << "trial " << trial << " subject " << res.subject_id;
    }
  }
}

}  // namespace
}  // namespace streamprune
