#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>
#include <vector>

#include "dlsched/core.hpp"

using namespace dlsched;

TEST(BytesPerFrame, TenMegabitFiveMillisecond) { EXPECT_EQ(bytes_per_frame(10'000'000, 5'000), 6250); }

TEST(BytesPerFrame, ExactDivision) { EXPECT_EQ(bytes_per_frame(8'000'000, 1'000), 1000); }

TEST(BytesPerFrame, SubByteFloorsToZero) { EXPECT_EQ(bytes_per_frame(1, 1), 0); }

TEST(BytesPerFrame, RejectsNonPositive) {
  EXPECT_THROW(bytes_per_frame(0, 5000), std::invalid_argument);
  EXPECT_THROW(bytes_per_frame(10, 0), std::invalid_argument);
  EXPECT_THROW(bytes_per_frame(-1, 5000), std::invalid_argument);
}

TEST(BytesPerFrame, MatchesFloorOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto rate = std::uniform_int_distribution<BitRate>(1, 2'000'000'000)(rng);
    const auto dur = std::uniform_int_distribution<Micros>(1, 100'000)(rng);
    const long double exact = static_cast<long double>(rate) * dur / 8.0L / 1e6L;
    const Bytes got = bytes_per_frame(rate, dur);
    EXPECT_LE(static_cast<long double>(got), exact);
    EXPECT_GT(static_cast<long double>(got + 1), exact);
  }
}

TEST(RateToFrameBytes, ZeroRateAllowed) { EXPECT_EQ(rate_to_frame_bytes(0, 5000), 0); }

TEST(ServiceClass, PriorityIsStrictTotalOrder) {
  for (auto a : kAllClasses)
    for (auto b : kAllClasses) {
      const int n = higher_priority(a, b) + higher_priority(b, a);
      EXPECT_EQ(n, a == b ? 0 : 1);
    }
  EXPECT_TRUE(higher_priority(ServiceClass::UGS, ServiceClass::ERT_VR));
  EXPECT_TRUE(higher_priority(ServiceClass::NRT_VR, ServiceClass::BE));
}

TEST(ServiceClass, SortingIsDeterministic) {
  std::mt19937_64 rng(3);
  std::vector<ServiceClass> v;
  for (int i = 0; i < 200; ++i) v.push_back(kAllClasses[rng() % kNumClasses]);
  auto a = v;
  auto b = v;
  std::shuffle(b.begin(), b.end(), rng);
  auto cmp = [](ServiceClass x, ServiceClass y) { return higher_priority(x, y); };
  std::sort(a.begin(), a.end(), cmp);
  std::sort(b.begin(), b.end(), cmp);
  EXPECT_EQ(a, b);
}

TEST(ServiceClass, NamesRoundTrip) {
  for (auto c : kAllClasses) EXPECT_EQ(parse_service_class(to_string(c)), c);
  EXPECT_EQ(parse_service_class("ert_vr"), ServiceClass::ERT_VR);
  EXPECT_EQ(parse_service_class("nrt"), ServiceClass::NRT_VR);
  EXPECT_FALSE(parse_service_class("gold").has_value());
}

TEST(ServiceClass, DcsAndTgsPartition) {
  EXPECT_TRUE(is_dcs(ServiceClass::UGS));
  EXPECT_TRUE(is_dcs(ServiceClass::RT_VR));
  EXPECT_TRUE(is_tgs(ServiceClass::NRT_VR));
  EXPECT_TRUE(is_tgs(ServiceClass::BE));
  for (auto c : kAllClasses) EXPECT_NE(is_dcs(c), is_tgs(c));
}

namespace {
QosProfile basic_qos() {
  QosProfile q;
  q.max_sustained_rate = 1'000'000;
  q.min_reserved_rate = 100'000;
  q.max_latency = 20'000;
  q.packet_size = 100;
  return q;
}
}  // namespace

TEST(QosProfile, Validation) {
  auto q = basic_qos();
  EXPECT_NO_THROW(q.validate());
  q.min_reserved_rate = 2'000'000;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = basic_qos();
  q.max_latency = 0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = basic_qos();
  q.packet_size = 0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(ConnectionState, CapacityAndOverflow) {
  ConnectionState c(1, ServiceClass::BE, basic_qos(), 2);
  EXPECT_TRUE(c.enqueue({1, 0, 10}));
  EXPECT_TRUE(c.enqueue({1, 1, 20}));
  EXPECT_TRUE(c.full());
  EXPECT_FALSE(c.enqueue({1, 2, 30}));
  EXPECT_EQ(c.backlog_bytes(), 30);
  EXPECT_EQ(c.pop_front().size, 10);
  EXPECT_EQ(c.backlog_bytes(), 20);
}

TEST(ConnectionState, RejectsBadInput) {
  EXPECT_THROW(ConnectionState(0, ServiceClass::BE, basic_qos()), std::invalid_argument);
  ConnectionState c(1, ServiceClass::BE, basic_qos());
  EXPECT_THROW(c.enqueue({2, 0, 10}), std::invalid_argument);
  EXPECT_THROW(c.enqueue({1, 0, 0}), std::invalid_argument);
  EXPECT_THROW(c.pop_front(), std::logic_error);
  EXPECT_THROW((void)c.front(), std::logic_error);
}

TEST(ConnectionState, BacklogMatchesBruteForceUnderRandomOps) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = 1 + rng() % 20;
    ConnectionState c(5, ServiceClass::NRT_VR, basic_qos(), cap);
    std::deque<Bytes> mirror;
    for (int op = 0; op < 500; ++op) {
      if (rng() % 3 != 0) {
        const Bytes sz = 1 + static_cast<Bytes>(rng() % 1500);
        const bool ok = c.enqueue({5, op, sz});
        EXPECT_EQ(ok, mirror.size() < cap);
        if (ok) mirror.push_back(sz);
      } else if (!mirror.empty()) {
        EXPECT_EQ(c.pop_front().size, mirror.front());
        mirror.pop_front();
      }
      const Bytes brute = std::accumulate(mirror.begin(), mirror.end(), Bytes{0});
      ASSERT_EQ(c.backlog_bytes(), brute);
      Bytes from_queue = 0;
      for (const auto& p : c.queue()) from_queue += p.size;
      ASSERT_EQ(from_queue, brute);
    }
  }
}

TEST(FrameBudget, ClockArithmetic) {
  const auto f = FrameBudget::at(3, 5000, 6250);
  EXPECT_EQ(f.now, 15000);
  EXPECT_EQ(f.end(), 20000);
  EXPECT_EQ(f.decision_time(), 20000);
  EXPECT_EQ(f.total_bytes, 6250);
}

TEST(GrantMap, Basics) {
  GrantMap g;
  EXPECT_EQ(g.get(4), 0);
  g.set(4, 100);
  g.add(4, 20);
  g.add(2, 5);
  EXPECT_EQ(g.get(4), 120);
  EXPECT_EQ(g.total(), 125);
  EXPECT_THROW(g.set(1, -1), std::invalid_argument);
}

TEST(GrantMap, EqualityTreatsMissingAsZero) {
  GrantMap a, b;
  a.set(1, 10);
  a.set(2, 0);
  b.set(1, 10);
  EXPECT_EQ(a, b);
  b.set(3, 1);
  EXPECT_FALSE(a == b);
}
