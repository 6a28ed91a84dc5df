#pragma once

// Frame loop. Within frame m:
//   1. generate arrivals and tail-drop enqueue
//   2. snapshot (arrivals of frame m are eligible in frame m)
//   3-4. the scheduler ranks and allocates on the snapshot
//   5. serve grants head-first, whole packets only
//   6. remember f(m), b^a(m) and update interrupt counters

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dlsched/allocation.hpp"
#include "dlsched/baselines.hpp"
#include "dlsched/core.hpp"
#include "dlsched/priority.hpp"
#include "dlsched/scheduler.hpp"
#include "dlsched/traffic.hpp"

namespace dlsched {

struct ConnectionSpec {
  Cid cid = 0;
  std::uint32_t ms = 0;
  ServiceClass cls = ServiceClass::BE;
  QosProfile qos;
  TrafficModel traffic;

  friend bool operator==(const ConnectionSpec&, const ConnectionSpec&) = default;
};

struct Scenario {
  BitRate link_rate = 10'000'000;
  Micros frame_duration = 5'000;
  std::int64_t num_frames = 2000;
  std::vector<ConnectionSpec> connections;
  std::size_t queue_capacity = 100;
  std::uint32_t eta = 50;
  WpfWeights weights;
  SchedulerKind scheduler = SchedulerKind::APDS;
  std::uint64_t seed = 1;
  DfpqConfig dfpq;

  Bytes frame_bytes() const { return bytes_per_frame(link_rate, frame_duration); }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const {
    if (link_rate <= 0) throw std::invalid_argument("link.rate_bps must be > 0");
    if (frame_duration <= 0) throw std::invalid_argument("frame.duration_us must be > 0");
    if (num_frames <= 0) throw std::invalid_argument("duration.frames must be > 0");
    if (queue_capacity == 0) throw std::invalid_argument("queue_capacity must be > 0");
    dfpq.validate();
    std::set<Cid> seen;
    for (const auto& c : connections) {
      const std::string where = "connection cid " + std::to_string(c.cid);
      if (c.cid == 0) throw std::invalid_argument("connection cid must be positive");
      if (!seen.insert(c.cid).second) throw std::invalid_argument("duplicate cid " + std::to_string(c.cid));
      try {
        c.qos.validate();
        c.traffic.validate();
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(where + ": " + e.what());
      }
      if (c.cls == ServiceClass::BE && c.qos.min_reserved_rate != 0)
        throw std::invalid_argument(where + ": BE connections carry no min_reserved_rate");
    }
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ConnFrameStats {
  Cid cid = 0;
  ServiceClass cls = ServiceClass::BE;
  Bytes offered_bytes = 0;
  std::int64_t offered_packets = 0;
  Bytes dropped_bytes = 0;
  std::int64_t dropped_packets = 0;
  Bytes backlog_at_schedule = 0;  // f(m), after arrivals, before service
  Bytes grant = 0;
  Bytes served_bytes = 0;
  std::int64_t served_packets = 0;
  Micros delay_sum = 0;  // over packets served this frame
  std::uint32_t interrupt_counter = 0;  // after this frame's update

  friend bool operator==(const ConnFrameStats&, const ConnFrameStats&) = default;
};

struct FrameStats {
  std::int64_t frame_index = 0;
  Bytes budget = 0;
  std::vector<ConnFrameStats> conns;

  Bytes granted_total() const {
    Bytes s = 0;
    for (const auto& c : conns) s += c.grant;
    return s;
  }

  const ConnFrameStats* find(Cid cid) const {
    for (const auto& c : conns)
      if (c.cid == cid) return &c;
    return nullptr;
  }

  friend bool operator==(const FrameStats&, const FrameStats&) = default;
};

/// Dequeues whole packets head-first while the next one fits the remaining
/// grant; leftover grant bytes are surrendered. Packets are delivered at
/// frame end. Also records backlog_at_schedule and the grant.
inline FrameStats serve_grants(std::span<ConnectionState> conns, const GrantMap& grants,
                               const FrameBudget& frame) {
  for (const auto& [cid, bytes] : grants) {
    const bool known = std::any_of(conns.begin(), conns.end(),
                                   [cid = cid](const ConnectionState& c) { return c.cid() == cid; });
    if (!known) throw std::logic_error("grant for unknown cid " + std::to_string(cid));
  }
  FrameStats fs;
  fs.frame_index = frame.index;
  fs.budget = frame.total_bytes;
  fs.conns.reserve(conns.size());
  for (auto& c : conns) {
    ConnFrameStats s;
    s.cid = c.cid();
    s.cls = c.service_class();
    s.backlog_at_schedule = c.backlog_bytes();
    s.grant = grants.get(c.cid());
    Bytes left = s.grant;
    while (!c.empty() && c.front().size <= left) {
      const auto p = c.pop_front();
      left -= p.size;
      s.served_bytes += p.size;
      ++s.served_packets;
      s.delay_sum += frame.end() - p.arrival_time;
    }
    auto& st = c.stats();
    st.served_bytes += s.served_bytes;
    st.served_packets += s.served_packets;
    st.delay_sum += s.delay_sum;
    s.interrupt_counter = c.interrupt_counter();
    fs.conns.push_back(s);
  }
  return fs;
}

inline std::unique_ptr<Scheduler> make_scheduler(const Scenario& s) {
  switch (s.scheduler) {
    case SchedulerKind::APDS: return std::make_unique<ApdsScheduler>(ApdsConfig{s.eta, s.weights});
    case SchedulerKind::FIFO: return std::make_unique<FifoScheduler>();
    case SchedulerKind::DFPQ: return std::make_unique<DfpqScheduler>(s.dfpq);
  }
  throw std::invalid_argument("unknown scheduler kind");
}

class Simulation {
 public:
  using SnapshotObserver = std::function<void(std::span<const ConnectionState>, const FrameBudget&)>;

  explicit Simulation(Scenario scenario) : Simulation(std::move(scenario), nullptr) {}

  Simulation(Scenario scenario, std::unique_ptr<Scheduler> scheduler)
      : scenario_(prepare(std::move(scenario))),
        scheduler_(scheduler ? std::move(scheduler) : make_scheduler(scenario_)),
        frame_bytes_(scenario_.frame_bytes()) {
    for (const auto& spec : scenario_.connections) {
      conns_.emplace_back(spec.cid, spec.cls, spec.qos, scenario_.queue_capacity);
      sources_.emplace_back(spec.traffic, spec.cid, spec.qos.packet_size, scenario_.seed);
    }
  }

  const Scenario& scenario() const { return scenario_; }
  Scheduler& scheduler() { return *scheduler_; }
  std::span<const ConnectionState> connections() const { return conns_; }
  std::int64_t next_frame() const { return next_frame_; }
  bool done() const { return next_frame_ >= scenario_.num_frames; }
  Bytes frame_bytes() const { return frame_bytes_; }

  void on_snapshot(SnapshotObserver fn) { observer_ = std::move(fn); }

  FrameStats run_frame() {
    const auto frame = FrameBudget::at(next_frame_, scenario_.frame_duration, frame_bytes_);

    std::vector<ConnectionStats> before;
    before.reserve(conns_.size());
    for (std::size_t i = 0; i < conns_.size(); ++i) {
      before.push_back(conns_[i].stats());
      const auto arrivals = sources_[i].generate(frame);
      enqueue_with_drop(conns_[i], arrivals);
    }

    if (observer_) observer_(conns_, frame);

    const GrantMap grants = scheduler_->schedule(conns_, frame);
    FrameStats fs = serve_grants(conns_, grants, frame);

    for (std::size_t i = 0; i < conns_.size(); ++i) {
      auto& c = conns_[i];
      auto& s = fs.conns[i];
      const auto& prev = before[i];
      s.offered_bytes = c.stats().offered_bytes - prev.offered_bytes;
      s.offered_packets = c.stats().offered_packets - prev.offered_packets;
      s.dropped_bytes = c.stats().dropped_bytes - prev.dropped_bytes;
      s.dropped_packets = c.stats().dropped_packets - prev.dropped_packets;

      const Bytes min_req = std::min(
          s.backlog_at_schedule,
          rate_to_frame_bytes(c.qos().min_reserved_rate, scenario_.frame_duration));
      c.set_last_frame({true, s.backlog_at_schedule, s.served_bytes, min_req});
      if (is_tgs(c.service_class()))
        c.set_interrupt_counter(update_interrupt_counter(c.interrupt_counter(), s.served_bytes));
      s.interrupt_counter = c.interrupt_counter();
    }
    ++next_frame_;
    return fs;
  }

  std::vector<FrameStats> run() {
    std::vector<FrameStats> out;
    out.reserve(static_cast<std::size_t>(scenario_.num_frames - next_frame_));
    while (!done()) out.push_back(run_frame());
    return out;
  }

 private:
  static Scenario prepare(Scenario s) {
    s.validate();
    return s;
  }

  Scenario scenario_;
  std::unique_ptr<Scheduler> scheduler_;
  Bytes frame_bytes_;
  std::vector<ConnectionState> conns_;
  std::vector<TrafficSource> sources_;
  SnapshotObserver observer_;
  std::int64_t next_frame_ = 0;
};

inline std::vector<FrameStats> run_simulation(const Scenario& scenario) {
  Simulation sim(scenario);
  return sim.run();
}

}  // namespace dlsched
