#pragma once

// Reference schedulers for comparison runs.
//
// FifoScheduler: one global arrival-ordered queue, head-of-line blocking,
// no notion of class.
//
// DfpqScheduler: strict class priority with deficit round robin inside each
// class. Each class earns its quantum every frame and may carry at most one
// quantum of unused deficit into the next.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/scheduler.hpp"

namespace dlsched {

class FifoScheduler final : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::FIFO; }

  GrantMap schedule(std::span<const ConnectionState> conns, const FrameBudget& frame) override {
    // (arrival, cid, connection index, packet index); smallest first.
    using Head = std::tuple<Micros, Cid, std::size_t, std::size_t>;
    std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
    for (std::size_t i = 0; i < conns.size(); ++i) {
      if (!conns[i].empty())
        heads.emplace(conns[i].queue().front().arrival_time, conns[i].cid(), i, 0);
    }
    GrantMap g;
    Bytes budget = frame.total_bytes;
    while (!heads.empty()) {
      auto [t, cid, ci, pi] = heads.top();
      const auto& q = conns[ci].queue();
      const Bytes size = q[pi].size;
      if (size > budget) break;  // no skipping past a blocked head
      heads.pop();
      g.add(cid, size);
      budget -= size;
      if (pi + 1 < q.size()) heads.emplace(q[pi + 1].arrival_time, cid, ci, pi + 1);
    }
    return g;
  }
};

struct DfpqConfig {
  /// Fraction of the frame budget credited to each class per frame, in
  /// class priority order.
  std::array<double, kNumClasses> class_weights{0.30, 0.25, 0.20, 0.15, 0.10};

  void validate() const {
    for (double w : class_weights)
      if (!(w > 0.0)) throw std::invalid_argument("DFPQ class weights must be > 0");
  }

  friend bool operator==(const DfpqConfig&, const DfpqConfig&) = default;
};

struct DfpqState {
  std::array<Bytes, kNumClasses> deficit{};
  std::array<Bytes, kNumClasses> quantum{};
  std::array<std::optional<Cid>, kNumClasses> cursor{};  // next CID to visit
};

class DfpqScheduler final : public Scheduler {
 public:
  explicit DfpqScheduler(DfpqConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  SchedulerKind kind() const override { return SchedulerKind::DFPQ; }

  const DfpqState& state() const { return state_; }

  void reset() override {
    state_ = {};
    quantum_for_ = -1;
  }

  GrantMap schedule(std::span<const ConnectionState> conns, const FrameBudget& frame) override {
    if (quantum_for_ != frame.total_bytes) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto q = static_cast<Bytes>(
            std::floor(static_cast<double>(frame.total_bytes) * cfg_.class_weights[c]));
        state_.quantum[c] = std::max<Bytes>(q, 1);
      }
      quantum_for_ = frame.total_bytes;
    }

    GrantMap g;
    Bytes budget = frame.total_bytes;
    for (auto cls : kAllClasses) {
      const auto c = tier_index(cls);
      state_.deficit[c] += state_.quantum[c];

      std::vector<const ConnectionState*> members;
      for (const auto& conn : conns)
        if (conn.service_class() == cls) members.push_back(&conn);
      std::sort(members.begin(), members.end(),
                [](auto* a, auto* b) { return a->cid() < b->cid(); });

      if (!members.empty()) serve_class(c, members, budget, g);
      state_.deficit[c] = std::min(state_.deficit[c], state_.quantum[c]);
    }
    return g;
  }

 private:
  void serve_class(std::size_t c, const std::vector<const ConnectionState*>& members,
                   Bytes& budget, GrantMap& g) {
    const std::size_t n = members.size();
    std::vector<std::size_t> next(n, 0);  // packets already granted this frame
    std::size_t pos = 0;
    if (state_.cursor[c]) {
      auto it = std::find_if(members.begin(), members.end(),
                             [&](auto* m) { return m->cid() >= *state_.cursor[c]; });
      pos = it == members.end() ? 0 : static_cast<std::size_t>(it - members.begin());
    }
    std::size_t idle = 0;
    while (idle < n) {
      const auto& q = members[pos]->queue();
      if (next[pos] >= q.size()) {
        ++idle;
        pos = (pos + 1) % n;
        continue;
      }
      const Bytes size = q[next[pos]].size;
      if (size > state_.deficit[c] || size > budget) break;  // this member goes first next time
      g.add(members[pos]->cid(), size);
      state_.deficit[c] -= size;
      budget -= size;
      ++next[pos];
      idle = 0;
      pos = (pos + 1) % n;
    }
    state_.cursor[c] = members[pos]->cid();
  }

  DfpqConfig cfg_;
  DfpqState state_;
  Bytes quantum_for_ = -1;
};

}  // namespace dlsched
