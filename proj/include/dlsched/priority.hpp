#pragma once

// Phase one of the adaptive downlink scheduler: rank each class's
// connections and promote the ones that are about to miss a deadline or
// have been starved.
//
// DCS classes are ranked by emergent degree (mean remaining guard time of
// the queued packets, most urgent first). TGS classes are ranked by the
// satisfaction ratio of the previous frame (least satisfied first).

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dlsched/core.hpp"

namespace dlsched {

inline constexpr double kFullySatisfied = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct RankingQueue {
  ServiceClass cls = ServiceClass::UGS;
  std::vector<Cid> cids;  // head is served first

  friend bool operator==(const RankingQueue&, const RankingQueue&) = default;
};

enum class ElevationReason : std::uint8_t { Emergent, Starved };

constexpr std::string_view to_string(ElevationReason r) {
  return r == ElevationReason::Emergent ? "EMERGENT" : "STARVED";
}

struct Elevation {
  Cid cid = 0;
  ServiceClass from_tier = ServiceClass::UGS;
  ServiceClass to_tier = ServiceClass::UGS;
  ElevationReason reason = ElevationReason::Emergent;

  friend bool operator==(const Elevation&, const Elevation&) = default;
};

/// Ranking queues after elevation. Each CID appears in exactly one tier.
struct PrioritySchedule {
  std::array<std::vector<Cid>, kNumClasses> tiers;
  std::vector<Elevation> log;

  const std::vector<Cid>& tier(ServiceClass c) const { return tiers[tier_index(c)]; }
  std::vector<Cid>& tier(ServiceClass c) { return tiers[tier_index(c)]; }

  std::optional<ServiceClass> tier_of(Cid cid) const {
    for (auto c : kAllClasses) {
      const auto& t = tier(c);
      if (std::find(t.begin(), t.end(), cid) != t.end()) return c;
    }
    return std::nullopt;
  }

  /// UGS tier, then ERT tier, then RT tier.
  std::vector<Cid> dcs_order() const {
    std::vector<Cid> out;
    for (auto c : {ServiceClass::UGS, ServiceClass::ERT_VR, ServiceClass::RT_VR})
      out.insert(out.end(), tier(c).begin(), tier(c).end());
    return out;
  }
};

struct DcsRanking {
  RankingQueue queue;
  std::vector<Cid> emergent;     // in ranked order
  std::map<Cid, double> degree;  // raw L_i
};

struct TgsRanking {
  RankingQueue queue;
  std::vector<Cid> starved;            // BE only, in ranked order
  std::map<Cid, double> satisfaction;  // S_i
};

// ---------------------------------------------------------------------------
// Emergent degree
// ---------------------------------------------------------------------------

inline Micros wait_time(const PacketRecord& p, Micros now) {
  if (now < p.arrival_time)
    throw std::logic_error("wait_time: packet arrives after the current time");
  return now - p.arrival_time;
}

/// Remaining tolerable wait; negative once the deadline has passed.
inline Micros guard_time(const PacketRecord& p, Micros max_latency, Micros now) {
  return max_latency - wait_time(p, now);
}

/// Mean guard time over the queued packets; an empty queue yields ζ.
inline double emergent_degree(const ConnectionState& conn, Micros now) {
  const auto& q = conn.queue();
  if (q.empty()) return static_cast<double>(conn.qos().max_latency);
  Micros sum = 0;
  for (const auto& p : q) sum += guard_time(p, conn.qos().max_latency, now);
  return static_cast<double>(sum) / static_cast<double>(q.size());
}

/// Some queued packet can no longer wait another frame.
inline bool is_emergent(const ConnectionState& conn, Micros now, Micros frame_duration) {
  const auto zeta = conn.qos().max_latency;
  return std::any_of(conn.queue().begin(), conn.queue().end(), [&](const PacketRecord& p) {
    return guard_time(p, zeta, now) <= frame_duration;
  });
}

/// Maps L to 1 - L / L_max. When L_max <= 0 every output is 1. Results are
/// clamped to [0, 1]; negative degrees (expired packets) saturate at 1.
inline std::map<Cid, double> normalize_degrees(const std::map<Cid, double>& values) {
  if (values.empty()) throw std::invalid_argument("normalize_degrees: empty input");
  double l_max = values.begin()->second;
  for (const auto& [cid, v] : values) l_max = std::max(l_max, v);
  std::map<Cid, double> out;
  for (const auto& [cid, v] : values)
    out[cid] = l_max <= 0.0 ? 1.0 : std::clamp(1.0 - v / l_max, 0.0, 1.0);
  return out;
}

namespace detail {

template <typename Key>
std::vector<Cid> order_by(const std::map<Cid, Key>& keys) {
  std::vector<Cid> ids;
  ids.reserve(keys.size());
  for (const auto& [cid, k] : keys) ids.push_back(cid);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](Cid a, Cid b) { return keys.at(a) < keys.at(b); });
  return ids;  // map iteration is CID-ascending, so ties stay CID-ascending
}

}  // namespace detail

/// Ranks every connection of one DCS class, most urgent first. ERT-VR and
/// RT-VR connections holding a packet within one frame of its deadline are
/// also reported as emergent; UGS never is.
inline DcsRanking rank_dcs(std::span<const ConnectionState> conns, ServiceClass cls,
                           Micros now, Micros frame_duration) {
  if (!is_dcs(cls)) throw std::invalid_argument("rank_dcs: not a DCS class");
  DcsRanking r;
  r.queue.cls = cls;
  std::set<Cid> emergent;
  for (const auto& c : conns) {
    if (c.service_class() != cls) continue;
    r.degree[c.cid()] = emergent_degree(c, now);
    if (cls != ServiceClass::UGS && is_emergent(c, now, frame_duration))
      emergent.insert(c.cid());
  }
  r.queue.cids = detail::order_by(r.degree);
  for (Cid cid : r.queue.cids)
    if (emergent.count(cid)) r.emergent.push_back(cid);
  return r;
}

// ---------------------------------------------------------------------------
// Satisfactory degree
// ---------------------------------------------------------------------------

/// b^a(m-1) / min(f(m-1), γ·T_frame). Zero minimum request is fully
/// satisfied; no history yet is neutral (1).
inline double satisfaction_nrt(const ConnectionState& conn, Micros frame_duration) {
  const auto& h = conn.last_frame();
  if (!h.valid) return 1.0;
  const Bytes low =
      std::min(h.backlog, rate_to_frame_bytes(conn.qos().min_reserved_rate, frame_duration));
  if (low <= 0) return kFullySatisfied;
  return static_cast<double>(h.served) / static_cast<double>(low);
}

/// b^a(m-1) / f(m-1).
inline double satisfaction_be(const ConnectionState& conn) {
  const auto& h = conn.last_frame();
  if (!h.valid) return 1.0;
  if (h.backlog <= 0) return kFullySatisfied;
  return static_cast<double>(h.served) / static_cast<double>(h.backlog);
}

/// Ranks one TGS class, least satisfied first. For BE, connections whose
/// interrupt counter reached eta are reported as starved.
inline TgsRanking rank_tgs(std::span<const ConnectionState> conns, ServiceClass cls,
                           std::uint32_t eta, Micros frame_duration) {
  if (!is_tgs(cls)) throw std::invalid_argument("rank_tgs: not a TGS class");
  TgsRanking r;
  r.queue.cls = cls;
  std::set<Cid> starved;
  for (const auto& c : conns) {
    if (c.service_class() != cls) continue;
    r.satisfaction[c.cid()] = cls == ServiceClass::NRT_VR ? satisfaction_nrt(c, frame_duration)
                                                          : satisfaction_be(c);
    if (cls == ServiceClass::BE && c.interrupt_counter() >= eta) starved.insert(c.cid());
  }
  r.queue.cids = detail::order_by(r.satisfaction);
  for (Cid cid : r.queue.cids)
    if (starved.count(cid)) r.starved.push_back(cid);
  return r;
}

/// Zero service increments the counter, any service resets it.
constexpr std::uint32_t update_interrupt_counter(std::uint32_t phi, Bytes served_last_frame) {
  return served_last_frame > 0 ? 0 : phi + 1;
}

// ---------------------------------------------------------------------------
// Elevation
// ---------------------------------------------------------------------------

/// Moves emergent ERT-VR connections to the bottom of the UGS tier,
/// emergent RT-VR connections to the bottom of the ERT tier, and starved BE
/// connections to the bottom of the NRT tier, preserving ranked order.
inline PrioritySchedule elevate(const std::array<RankingQueue, kNumClasses>& ranked,
                                std::span<const Cid> emergent_ert,
                                std::span<const Cid> emergent_rt,
                                std::span<const Cid> starved_be) {
  PrioritySchedule s;
  for (auto c : kAllClasses) s.tier(c) = ranked[tier_index(c)].cids;

  auto promote = [&s](ServiceClass from, ServiceClass to, std::span<const Cid> movers,
                      ElevationReason why) {
    std::set<Cid> set(movers.begin(), movers.end());
    auto& src = s.tier(from);
    std::vector<Cid> keep;
    for (Cid cid : src) {
      if (set.count(cid)) {
        s.tier(to).push_back(cid);
        s.log.push_back({cid, from, to, why});
      } else {
        keep.push_back(cid);
      }
    }
    src = std::move(keep);
  };

  promote(ServiceClass::ERT_VR, ServiceClass::UGS, emergent_ert, ElevationReason::Emergent);
  promote(ServiceClass::RT_VR, ServiceClass::ERT_VR, emergent_rt, ElevationReason::Emergent);
  promote(ServiceClass::BE, ServiceClass::NRT_VR, starved_be, ElevationReason::Starved);
  return s;
}

/// Complete phase-one output for one frame, with the intermediate values
/// kept for inspection.
struct PriorityAssignment {
  std::array<RankingQueue, kNumClasses> ranked;
  std::vector<Cid> emergent_ert;
  std::vector<Cid> emergent_rt;
  std::vector<Cid> starved_be;
  std::map<Cid, double> degree;             // DCS raw L_i
  std::map<Cid, double> normalized_degree;  // per-class 1 - L_i / L_max
  std::map<Cid, double> satisfaction;       // TGS S_i
  PrioritySchedule schedule;
};

inline PriorityAssignment assign_priorities(std::span<const ConnectionState> conns,
                                            const FrameBudget& frame, std::uint32_t eta) {
  PriorityAssignment a;
  for (auto cls : {ServiceClass::UGS, ServiceClass::ERT_VR, ServiceClass::RT_VR}) {
    auto r = rank_dcs(conns, cls, frame.decision_time(), frame.duration);
    if (!r.degree.empty()) {
      for (const auto& [cid, v] : normalize_degrees(r.degree)) a.normalized_degree[cid] = v;
    }
    a.degree.insert(r.degree.begin(), r.degree.end());
    if (cls == ServiceClass::ERT_VR) a.emergent_ert = r.emergent;
    if (cls == ServiceClass::RT_VR) a.emergent_rt = r.emergent;
    a.ranked[tier_index(cls)] = std::move(r.queue);
  }
  for (auto cls : {ServiceClass::NRT_VR, ServiceClass::BE}) {
    auto r = rank_tgs(conns, cls, eta, frame.duration);
    a.satisfaction.insert(r.satisfaction.begin(), r.satisfaction.end());
    if (cls == ServiceClass::BE) a.starved_be = r.starved;
    a.ranked[tier_index(cls)] = std::move(r.queue);
  }
  a.schedule = elevate(a.ranked, a.emergent_ert, a.emergent_rt, a.starved_be);
  return a;
}

}  // namespace dlsched
