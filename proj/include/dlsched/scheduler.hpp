#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "dlsched/allocation.hpp"
#include "dlsched/core.hpp"
#include "dlsched/priority.hpp"

namespace dlsched {

enum class SchedulerKind : std::uint8_t { APDS, FIFO, DFPQ };

constexpr std::string_view to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::APDS: return "apds";
    case SchedulerKind::FIFO: return "fifo";
    case SchedulerKind::DFPQ: return "dfpq";
  }
  return "?";
}

inline std::optional<SchedulerKind> parse_scheduler_kind(std::string_view s) {
  std::string key;
  for (char ch : s) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (key == "apds") return SchedulerKind::APDS;
  if (key == "fifo") return SchedulerKind::FIFO;
  if (key == "dfpq") return SchedulerKind::DFPQ;
  return std::nullopt;
}

/// Per-frame downlink scheduler. Grants are fixed before the frame is
/// served; the engine never moves unused bytes between connections.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerKind kind() const = 0;
  virtual GrantMap schedule(std::span<const ConnectionState> conns, const FrameBudget& frame) = 0;
  virtual void reset() {}
};

struct ApdsConfig {
  std::uint32_t eta = 50;
  WpfWeights weights;
};

/// Priority assignment followed by bound-based allocation.
class ApdsScheduler final : public Scheduler {
 public:
  explicit ApdsScheduler(ApdsConfig cfg = {}) : cfg_(cfg) {}

  SchedulerKind kind() const override { return SchedulerKind::APDS; }

  GrantMap schedule(std::span<const ConnectionState> conns, const FrameBudget& frame) override {
    last_priorities_ = assign_priorities(conns, frame, cfg_.eta);
    last_allocation_ = allocate(frame, last_priorities_.schedule, conns, cfg_.weights);
    return last_allocation_.grants;
  }

  void reset() override {
    last_priorities_ = {};
    last_allocation_ = {};
  }

  const ApdsConfig& config() const { return cfg_; }
  const PriorityAssignment& last_priorities() const { return last_priorities_; }
  const Allocation& last_allocation() const { return last_allocation_; }

 private:
  ApdsConfig cfg_;
  PriorityAssignment last_priorities_;
  Allocation last_allocation_;
};

}  // namespace dlsched
