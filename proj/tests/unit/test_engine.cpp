#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "dlsched/engine.hpp"
#include "support/generators.hpp"

using namespace dlsched;
using testgen::qos_for;

namespace {

ConnectionSpec spec(Cid cid, ServiceClass cls, BitRate max_rate, BitRate min_rate, Micros zeta, Bytes packet,
                    TrafficModel t) {
  ConnectionSpec s;
  s.cid = cid;
  s.ms = 1;
  s.cls = cls;
  s.qos = qos_for(cls, max_rate, min_rate, zeta, packet);
  t.seed_stream = cid;
  s.traffic = t;
  return s;
}

Scenario mixed_scenario(std::int64_t frames, BitRate load_scale = 1) {
  Scenario s;
  s.num_frames = frames;
  s.seed = 5;
  Cid cid = 1;
  for (int i = 0; i < 3; ++i) {
    s.connections.push_back(spec(cid++, ServiceClass::UGS, 256'000, 256'000, 20'000, 160,
                                 {TrafficKind::CBR, 256'000 * load_scale}));
    s.connections.push_back(spec(cid++, ServiceClass::ERT_VR, 512'000, 256'000, 40'000, 160,
                                 {TrafficKind::ON_OFF, 200'000 * load_scale}));
    s.connections.push_back(spec(cid++, ServiceClass::RT_VR, 768'000, 384'000, 60'000, 240,
                                 {TrafficKind::ON_OFF, 300'000 * load_scale}));
    s.connections.push_back(spec(cid++, ServiceClass::NRT_VR, 1'000'000, 192'000, 1'000'000, 120,
                                 {TrafficKind::POISSON, 400'000 * load_scale}));
    s.connections.push_back(spec(cid++, ServiceClass::BE, 1'000'000, 0, 2'000'000, 120,
                                 {TrafficKind::POISSON, 600'000 * load_scale}));
  }
  return s;
}

}  // namespace

TEST(ServeGrants, WholePacketsOnly) {
  std::vector<ConnectionState> conns;
  conns.push_back(testgen::make_conn(1, ServiceClass::BE, qos_for(ServiceClass::BE, 1'000'000, 0, 100'000, 160),
                                     {0, 10, 20}));
  GrantMap g;
  g.set(1, 400);
  const auto fs = serve_grants(conns, g, FrameBudget::at(0, 5000, 6250));
  EXPECT_EQ(fs.conns[0].served_bytes, 320);
  EXPECT_EQ(fs.conns[0].served_packets, 2);
  EXPECT_EQ(fs.conns[0].delay_sum, 5000 + 4990);
  EXPECT_EQ(conns[0].backlog_bytes(), 160);
}

TEST(ServeGrants, ZeroGrant) {
  std::vector<ConnectionState> conns;
  conns.push_back(testgen::make_conn(1, ServiceClass::BE, qos_for(ServiceClass::BE, 1'000'000, 0, 100'000, 160), {0}));
  const auto fs = serve_grants(conns, GrantMap{}, FrameBudget::at(0, 5000, 6250));
  EXPECT_EQ(fs.conns[0].served_bytes, 0);
  EXPECT_EQ(fs.conns[0].backlog_at_schedule, 160);
}

TEST(ServeGrants, GrantCoversBacklog) {
  std::vector<ConnectionState> conns;
  conns.push_back(testgen::make_conn(1, ServiceClass::BE, qos_for(ServiceClass::BE, 1'000'000, 0, 100'000, 160),
                                     {0, 1, 2, 3}));
  GrantMap g;
  g.set(1, 5000);
  const auto fs = serve_grants(conns, g, FrameBudget::at(0, 5000, 6250));
  EXPECT_EQ(fs.conns[0].served_bytes, 640);
  EXPECT_TRUE(conns[0].empty());
}

TEST(ServeGrants, UnknownCidIsAnError) {
  std::vector<ConnectionState> conns;
  GrantMap g;
  g.set(3, 10);
  EXPECT_THROW(serve_grants(conns, g, FrameBudget::at(0, 5000, 6250)), std::logic_error);
}

TEST(ServeGrants, ServedWithinGrantAndNextPacketWouldNotFit) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ConnectionState> conns;
    conns.emplace_back(1, ServiceClass::BE, qos_for(ServiceClass::BE, 1'000'000, 0, 100'000, 100));
    const int k = static_cast<int>(rng() % 10);
    for (int j = 0; j < k; ++j) conns[0].enqueue({1, j, 1 + static_cast<Bytes>(rng() % 400)});
    GrantMap g;
    g.set(1, static_cast<Bytes>(rng() % 2000));
    const auto fs = serve_grants(conns, g, FrameBudget::at(0, 5000, 6250));
    EXPECT_LE(fs.conns[0].served_bytes, g.get(1));
    if (!conns[0].empty()) { EXPECT_GT(fs.conns[0].served_bytes + conns[0].front().size, g.get(1)); }
  }
}

TEST(Simulation, EmptySystemProducesZeroStats) {
  Scenario s;
  s.num_frames = 3;
  s.connections.push_back(spec(1, ServiceClass::BE, 1'000'000, 0, 1'000'000, 100, {TrafficKind::POISSON, 1}));
  Simulation sim(s);
  const auto fs = sim.run_frame();
  EXPECT_EQ(fs.conns[0].offered_bytes, 0);
  EXPECT_EQ(fs.conns[0].served_bytes, 0);
  EXPECT_EQ(fs.granted_total(), 0);
}

TEST(Simulation, FrameCounts) {
  auto s = mixed_scenario(1);
  EXPECT_EQ(run_simulation(s).size(), 1u);
  s.num_frames = 0;
  EXPECT_THROW(run_simulation(s), std::invalid_argument);
}

TEST(Simulation, DeterministicReplay) {
  for (auto kind : {SchedulerKind::APDS, SchedulerKind::FIFO, SchedulerKind::DFPQ}) {
    auto s = mixed_scenario(300);
    s.scheduler = kind;
    EXPECT_EQ(run_simulation(s), run_simulation(s)) << to_string(kind);
  }
}

TEST(Simulation, UgsAtReservedRateIsFullyServed) {
  Scenario s;
  s.num_frames = 500;
  s.connections.push_back(spec(1, ServiceClass::UGS, 256'000, 256'000, 20'000, 160, {TrafficKind::CBR, 256'000}));
  s.connections.push_back(spec(2, ServiceClass::BE, 1'000'000, 0, 1'000'000, 120, {TrafficKind::POISSON, 300'000}));
  for (const auto& f : run_simulation(s)) {
    const auto* u = f.find(1);
    ASSERT_NE(u, nullptr);
    EXPECT_EQ(u->served_bytes, u->offered_bytes);
  }
}

TEST(Simulation, ByteConservationAndGrantBounds) {
  for (BitRate scale : {1, 3}) {
    for (auto kind : {SchedulerKind::APDS, SchedulerKind::FIFO, SchedulerKind::DFPQ}) {
      auto s = mixed_scenario(800, scale);
      s.scheduler = kind;
      Simulation sim(s);
      std::map<Cid, Bytes> offered, served, dropped;
      for (const auto& f : sim.run()) {
        EXPECT_LE(f.granted_total(), f.budget);
        for (const auto& c : f.conns) {
          EXPECT_LE(c.grant, c.backlog_at_schedule);
          EXPECT_LE(c.served_bytes, c.grant);
          offered[c.cid] += c.offered_bytes;
          served[c.cid] += c.served_bytes;
          dropped[c.cid] += c.dropped_bytes;
        }
      }
      for (const auto& c : sim.connections())
        EXPECT_EQ(offered[c.cid()], served[c.cid()] + dropped[c.cid()] + c.backlog_bytes());
    }
  }
}

TEST(Simulation, DcsDelayBoundedWhenLinkIsAmple) {
  Scenario s;
  s.num_frames = 1000;
  Cid cid = 1;
  for (int i = 0; i < 4; ++i) {
    s.connections.push_back(spec(cid++, ServiceClass::UGS, 256'000, 256'000, 20'000, 160, {TrafficKind::CBR, 256'000}));
    s.connections.push_back(
        spec(cid++, ServiceClass::ERT_VR, 512'000, 256'000, 40'000, 160, {TrafficKind::CBR, 256'000}));
    s.connections.push_back(
        spec(cid++, ServiceClass::RT_VR, 768'000, 384'000, 60'000, 240, {TrafficKind::CBR, 384'000}));
  }
  Simulation sim(s);
  for (const auto& f : sim.run())
    for (const auto& c : f.conns) {
      if (c.served_packets == 0) continue;
      const auto zeta = s.connections[c.cid - 1].qos.max_latency;
      EXPECT_LE(c.delay_sum, c.served_packets * (zeta + s.frame_duration));
    }
}

TEST(Simulation, InterruptCounterTracksZeroServiceFrames) {
  auto s = mixed_scenario(400, 3);
  Simulation sim(s);
  std::map<Cid, std::uint32_t> phi;
  for (const auto& f : sim.run()) {
    for (const auto& c : f.conns) {
      if (is_dcs(c.cls)) {
        EXPECT_EQ(c.interrupt_counter, 0u);
        continue;
      }
      const auto expect = c.served_bytes > 0 ? 0u : phi[c.cid] + 1;
      EXPECT_EQ(c.interrupt_counter, expect);
      phi[c.cid] = c.interrupt_counter;
    }
  }
}

TEST(Simulation, SnapshotSeesArrivalsBeforeScheduling) {
  Scenario s;
  s.num_frames = 5;
  s.connections.push_back(spec(1, ServiceClass::UGS, 256'000, 256'000, 20'000, 160, {TrafficKind::CBR, 256'000}));
  Simulation sim(s);
  int calls = 0;
  sim.on_snapshot([&](std::span<const ConnectionState> conns, const FrameBudget& f) {
    EXPECT_EQ(f.index, calls);
    EXPECT_EQ(conns[0].backlog_bytes(), 160);
    ++calls;
  });
  sim.run();
  EXPECT_EQ(calls, 5);
}

TEST(Scenario, Validation) {
  auto s = mixed_scenario(10);
  EXPECT_NO_THROW(s.validate());
  auto dup = s;
  dup.connections[1].cid = dup.connections[0].cid;
  try {
    dup.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate cid 1"), std::string::npos);
  }
  auto be = s;
  be.connections[4].qos.min_reserved_rate = 10;
  EXPECT_THROW(be.validate(), std::invalid_argument);
  auto rate = s;
  rate.link_rate = 0;
  EXPECT_THROW(rate.validate(), std::invalid_argument);
}

TEST(Simulation, CustomSchedulerIsUsed) {
  auto s = mixed_scenario(5);
  Simulation sim(s, std::make_unique<FifoScheduler>());
  EXPECT_EQ(sim.scheduler().kind(), SchedulerKind::FIFO);
}
