#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include "pot/sequencer.hpp"
#include "sim_sequencer.hpp"

namespace pot {
namespace {

using testing::linear;
using testing::reference_order;
using testing::Script;
using testing::simulate;
using testing::Slot;

struct TwoThreads {
  Sequencer seq;
  ThreadId main = seq.register_main();
  ThreadId t = seq.spawn(main, std::nullopt);
  ThreadId u = seq.spawn(main, std::nullopt);
  TwoThreads() { seq.detach_main(); }
};

TEST(Sequencer, RoundRobinOfTwoThreads) {
  TwoThreads s;
  // Requests arrive u-first; the assignment ignores arrival order.
  EXPECT_EQ(s.seq.get_seq_no(s.u), 2U);  // d
  EXPECT_EQ(s.seq.get_seq_no(s.t), 1U);  // a
  EXPECT_EQ(s.seq.get_seq_no(s.t), 3U);  // b
  EXPECT_EQ(s.seq.get_seq_no(s.u), 4U);  // e
  EXPECT_EQ(s.seq.get_seq_no(s.t), 5U);  // c
  EXPECT_EQ(s.seq.get_seq_no(s.u), 6U);  // f
}

TEST(Sequencer, SpawnedChildJoinsTheNextRound) {
  TwoThreads s;
  EXPECT_EQ(s.seq.get_seq_no(s.t), 1U);  // a
  EXPECT_EQ(s.seq.get_seq_no(s.u), 2U);  // d
  const SeqNo b = s.seq.get_seq_no(s.t);
  EXPECT_EQ(b, 3U);
  const ThreadId v = s.seq.spawn(s.t, b);
  EXPECT_EQ(s.seq.get_seq_no(s.u), 4U);  // e
  EXPECT_EQ(s.seq.get_seq_no(v), 5U);    // g
  EXPECT_EQ(s.seq.get_seq_no(s.t), 6U);  // c
  EXPECT_EQ(s.seq.get_seq_no(s.u), 7U);  // f
  EXPECT_EQ(s.seq.get_seq_no(v), 8U);    // h
  const auto order = s.seq.post_order();
  ASSERT_EQ(order.size(), 4U);
  EXPECT_EQ(order[0], v);
  EXPECT_EQ(order[1], s.t);
  EXPECT_EQ(order[2], s.u);
}

TEST(Sequencer, StopConsumesTheNextSlot) {
  TwoThreads s;
  EXPECT_EQ(s.seq.get_seq_no(s.t), 1U);  // a
  EXPECT_EQ(s.seq.get_seq_no(s.u), 2U);  // d
  EXPECT_EQ(s.seq.get_seq_no(s.t), 3U);  // b
  EXPECT_EQ(s.seq.get_seq_no(s.u), 4U);  // e
  EXPECT_EQ(s.seq.stop(s.t), std::optional<SeqNo>(5));
  EXPECT_EQ(s.seq.get_seq_no(s.u), 6U);  // f
  EXPECT_EQ(s.seq.get_seq_no(s.u), 7U);
  EXPECT_TRUE(s.seq.is_stopped(s.t));
  const auto events = s.seq.lifecycle_events();
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().kind, LifecycleEvent::Kind::stop);
  EXPECT_EQ(events.back().sn, 5U);
  EXPECT_EQ(events.back().round, 3U);
}

TEST(Sequencer, WorkedExamplesThroughTheReference) {
  // The reference itself must reproduce the worked examples before it is
  // trusted as a fuzz oracle.
  auto labels = [](const std::vector<Slot>& slots) {
    std::string s;
    for (const auto& x : slots) {
      if (x.label != "stop") s += x.label;
    }
    return s;
  };
  EXPECT_EQ(labels(reference_order({linear({"a", "b", "c"}), linear({"d", "e", "f"})})),
            "adbecf");
  auto t = linear({"a", "b", "c"});
  t->txns[1].child = linear({"g", "h"});
  EXPECT_EQ(labels(reference_order({t, linear({"d", "e", "f"})})), "adbegcfh");
  EXPECT_EQ(labels(reference_order({linear({"a", "b"}), linear({"d", "e", "f"})})), "adbef");
}

TEST(Sequencer, SingleThreadIsTheIdentity) {
  Sequencer seq;
  const ThreadId main = seq.register_main();
  const ThreadId t = seq.spawn(main, std::nullopt);
  seq.detach_main();
  for (SeqNo k = 1; k <= 100; ++k) EXPECT_EQ(seq.get_seq_no(t), k);
}

TEST(Sequencer, ConcurrentRequestsFollowRoundRobin) {
  constexpr std::uint32_t kThreads = 4;
  constexpr std::uint32_t kRequests = 2000;
  Sequencer seq;
  const ThreadId main = seq.register_main();
  std::vector<ThreadId> ids;
  for (std::uint32_t k = 0; k < kThreads; ++k) ids.push_back(seq.spawn(main, std::nullopt));
  seq.detach_main();
  std::vector<std::vector<SeqNo>> got(kThreads);
  std::vector<std::thread> workers;
  for (std::uint32_t k = 0; k < kThreads; ++k) {
    workers.emplace_back([&, k] {
      for (std::uint32_t r = 0; r < kRequests; ++r) {
        got[k].push_back(seq.get_seq_no(ids[k]));
        if (r % 64 == 0) std::this_thread::yield();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (std::uint32_t k = 0; k < kThreads; ++k) {
    for (std::uint32_t r = 0; r < kRequests; ++r) {
      ASSERT_EQ(got[k][r], static_cast<SeqNo>(r) * kThreads + k + 1);
    }
  }
}

TEST(Sequencer, FuzzedArrivalsMatchTheReference) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto roots = testing::random_forest(rng);
    const auto expected = reference_order(roots);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto got = simulate(roots, rng());
      // Equality also shows gap-freedom: simulate() returns {} on a gap.
      ASSERT_EQ(got, expected) << "trial " << trial << " schedule " << s;
    }
  }
}

TEST(Sequencer, RoundMembersFollowPostOrder) {
  TwoThreads s;
  s.seq.get_seq_no(s.t);
  s.seq.get_seq_no(s.u);
  const SeqNo b = s.seq.get_seq_no(s.t);
  const ThreadId v = s.seq.spawn(s.t, b);
  EXPECT_EQ(s.seq.round_members(2), (std::vector<ThreadId>{s.t, s.u}));
  EXPECT_EQ(s.seq.round_members(3), (std::vector<ThreadId>{v, s.t, s.u}));
  const auto post = s.seq.post_order();
  for (std::uint64_t r = 1; r <= 4; ++r) {
    const auto members = s.seq.round_members(r);
    // Members appear as a subsequence of the full post-order.
    std::size_t pos = 0;
    for (auto m : members) {
      while (pos < post.size() && post[pos] != m) ++pos;
      ASSERT_LT(pos, post.size());
    }
  }
}

TEST(Sequencer, Errors) {
  TwoThreads s;
  EXPECT_THROW(s.seq.get_seq_no(ThreadId{99}), SequencerError);
  EXPECT_THROW(s.seq.stop(ThreadId{99}), SequencerError);
  s.seq.get_seq_no(s.t);
  s.seq.stop(s.t);
  EXPECT_THROW(s.seq.stop(s.t), SequencerError);
  EXPECT_THROW(s.seq.get_seq_no(s.t), SequencerError);
  EXPECT_THROW(s.seq.register_main(), SequencerError);
  EXPECT_THROW(s.seq.spawn(s.u, std::nullopt), ContractViolation);
}

TEST(Sequencer, SpawnMustNameTheCurrentTransaction) {
  TwoThreads s;
  s.seq.get_seq_no(s.t);
  EXPECT_THROW(s.seq.spawn(s.t, 2), ContractViolation);
}

ReplayOrder order_of(std::vector<ReplayEntry> entries) {
  ReplayOrder o;
  o.entries = std::move(entries);
  o.hang_timeout = std::chrono::milliseconds(50);
  return o;
}

TEST(SequencerReplay, PositionsComeFromTheOrder) {
  Sequencer seq(order_of({{ThreadId{2}, "y1"}, {ThreadId{1}, "x1"}, {ThreadId{2}, "y2"}}));
  const ThreadId main = seq.register_main();
  const ThreadId x = seq.spawn(main, std::nullopt);
  const ThreadId y = seq.spawn(main, std::nullopt);
  seq.detach_main();
  EXPECT_EQ(seq.get_seq_no(x, "x1"), 2U);
  EXPECT_EQ(seq.get_seq_no(y, "y1"), 1U);
  EXPECT_EQ(seq.get_seq_no(y, "y2"), 3U);
  EXPECT_EQ(seq.stop(x), std::nullopt);
}

TEST(SequencerReplay, DivergenceIsAHang) {
  Sequencer seq(order_of({{ThreadId{1}, "x1"}}));
  const ThreadId main = seq.register_main();
  const ThreadId x = seq.spawn(main, std::nullopt);
  seq.detach_main();
  EXPECT_THROW(seq.get_seq_no(x, "other"), HangReport);
  Sequencer seq2(order_of({{ThreadId{1}, "x1"}}));
  const ThreadId m2 = seq2.register_main();
  const ThreadId x2 = seq2.spawn(m2, std::nullopt);
  seq2.detach_main();
  EXPECT_EQ(seq2.get_seq_no(x2, "x1"), 1U);
  EXPECT_THROW(seq2.get_seq_no(x2, "x2"), HangReport);
}

TEST(SequencerReplay, MissingTransactionIsReportedAfterTheTimeout) {
  Sequencer seq(order_of({{ThreadId{1}, "x1"}, {ThreadId{2}, "gone"}, {ThreadId{1}, "x2"}}));
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_FALSE(seq.check_progress(1, t0));
  EXPECT_FALSE(seq.check_progress(1, t0 + std::chrono::milliseconds(10)));
  const auto report = seq.check_progress(1, t0 + std::chrono::milliseconds(60));
  ASSERT_TRUE(report);
  EXPECT_EQ(report->stuck_at(), 2U);
  EXPECT_EQ(report->label(), "gone");
  EXPECT_EQ(report->thread(), std::optional<ThreadId>(ThreadId{2}));
  // Progress resets the clock.
  EXPECT_FALSE(seq.check_progress(2, t0 + std::chrono::milliseconds(70)));
}

TEST(SequencerReplay, EmptyOrderNeverHangs) {
  Sequencer seq(order_of({}));
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_FALSE(seq.check_progress(0, t0));
  EXPECT_FALSE(seq.check_progress(0, t0 + std::chrono::seconds(10)));
}

TEST(SequencerReplay, OrderFileRoundTrip) {
  const ReplayOrder o = order_of({{ThreadId{3}, "t3.1"}, {ThreadId{1}, "a b"}});
  std::stringstream buf;
  o.write(buf);
  EXPECT_EQ(buf.str(), "3\tt3.1\n1\ta b\n");
  const ReplayOrder back = ReplayOrder::parse(buf);
  EXPECT_EQ(back.entries, o.entries);
  std::stringstream bad("x\tlabel\n");
  EXPECT_THROW(ReplayOrder::parse(bad), std::invalid_argument);
  std::stringstream notab("12\n");
  EXPECT_THROW(ReplayOrder::parse(notab), std::invalid_argument);
}

TEST(Sequencer, RoundRobinHangTimeout) {
  Sequencer seq;
  seq.set_hang_timeout(std::chrono::milliseconds(20));
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_FALSE(seq.check_progress(4, t0));
  const auto report = seq.check_progress(4, t0 + std::chrono::milliseconds(25));
  ASSERT_TRUE(report);
  EXPECT_EQ(report->stuck_at(), 5U);
}

}  // namespace
}  // namespace pot
