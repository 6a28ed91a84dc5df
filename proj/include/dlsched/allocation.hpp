#pragma once

// Phase two of the adaptive downlink scheduler: quantify per-connection
// upper/lower bandwidth bounds and split the frame budget.
//
//   Case I   B_total >  ΣB_max   everyone gets b_max, the surplus follows
//                                 residual backlog.
//   Case II  ΣB_min <= B_total <= ΣB_max
//                                 b_min plus a share of the remainder
//                                 proportional to (b_max - b_min).
//   Case III B_total <  ΣB_min   DCS minima in schedule order, then NRT
//                                 minima and a weighted proportional-fair
//                                 (WPF) split for BE, or WPF for NRT alone.
//
// All proportional splits are integerised by largest remainder with
// ascending-CID tie-break, so every split sums exactly to its target.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/priority.hpp"

namespace dlsched {

// ---------------------------------------------------------------------------
// Bounds and demand
// ---------------------------------------------------------------------------

/// 0 <= b_min <= b_max <= backlog.
struct ConnBounds {
  Cid cid = 0;
  ServiceClass cls = ServiceClass::UGS;
  Bytes b_min = 0;
  Bytes b_max = 0;
  Bytes backlog = 0;

  friend bool operator==(const ConnBounds&, const ConnBounds&) = default;
};

/// b_max = min(f, Γ·T), b_min = min(f, γ·T); BE uses b_min = b_max.
inline ConnBounds conn_bounds(const ConnectionState& conn, Micros frame_duration) {
  ConnBounds b;
  b.cid = conn.cid();
  b.cls = conn.service_class();
  b.backlog = conn.backlog_bytes();
  b.b_max = std::min(b.backlog,
                     rate_to_frame_bytes(conn.qos().max_sustained_rate, frame_duration));
  b.b_min = b.cls == ServiceClass::BE
                ? b.b_max
                : std::min(b.backlog,
                           rate_to_frame_bytes(conn.qos().min_reserved_rate, frame_duration));
  return b;
}

struct ClassDemand {
  Bytes max = 0;
  Bytes min = 0;
};

struct DemandSummary {
  std::array<ClassDemand, kNumClasses> per_class{};
  Bytes max_total = 0;
  Bytes min_total = 0;

  const ClassDemand& of(ServiceClass c) const { return per_class[tier_index(c)]; }
};

inline DemandSummary summarize_demand(std::span<const ConnBounds> bounds) {
  DemandSummary s;
  for (const auto& b : bounds) {
    auto& d = s.per_class[tier_index(b.cls)];
    d.max += b.b_max;
    // BE has no reserved rate: its upper bound stands in for the lower one.
    d.min += b.cls == ServiceClass::BE ? b.b_max : b.b_min;
  }
  for (const auto& d : s.per_class) {
    s.max_total += d.max;
    s.min_total += d.min;
  }
  return s;
}

enum class AllocationCase : std::uint8_t { CaseI, CaseII, CaseIII };

constexpr std::string_view to_string(AllocationCase c) {
  switch (c) {
    case AllocationCase::CaseI: return "I";
    case AllocationCase::CaseII: return "II";
    case AllocationCase::CaseIII: return "III";
  }
  return "?";
}

/// Equality with either bound falls to Case II.
inline AllocationCase select_case(const DemandSummary& s, Bytes total) {
  if (total > s.max_total) return AllocationCase::CaseI;
  if (total < s.min_total) return AllocationCase::CaseIII;
  return AllocationCase::CaseII;
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

/// Demand-term and starvation-term weights, held in parts per million so the
/// integer split is exact. They sum to one.
struct WeightPair {
  static constexpr std::int64_t kScale = 1'000'000;

  std::int64_t demand_ppm = 600'000;
  std::int64_t starvation_ppm = 400'000;

  static WeightPair from_fractions(double demand, double starvation) {
    if (!(demand >= 0.0) || !(starvation >= 0.0))
      throw std::invalid_argument("WPF weights must be non-negative");
    WeightPair w{std::llround(demand * kScale), std::llround(starvation * kScale)};
    if (w.demand_ppm + w.starvation_ppm != kScale)
      throw std::invalid_argument("WPF weights must sum to 1");
    return w;
  }

  double demand() const { return static_cast<double>(demand_ppm) / kScale; }
  double starvation() const { return static_cast<double>(starvation_ppm) / kScale; }

  friend bool operator==(const WeightPair&, const WeightPair&) = default;
};

struct WpfWeights {
  WeightPair be;   // ω1, ω2
  WeightPair nrt;  // ϖ1, ϖ2

  friend bool operator==(const WpfWeights&, const WpfWeights&) = default;
};

// ---------------------------------------------------------------------------
// Integer apportionment
// ---------------------------------------------------------------------------

/// Splits floor(Σ numer / denom) into integers: each id gets
/// floor(numer_i / denom), leftovers go to the largest remainders, ties by
/// ascending CID.
inline std::vector<Bytes> largest_remainder(std::span<const Cid> ids,
                                            std::span<const Wide> numer, Wide denom) {
  if (ids.size() != numer.size()) throw std::invalid_argument("largest_remainder: size mismatch");
  if (denom <= 0) throw std::invalid_argument("largest_remainder: denominator must be positive");
  const std::size_t n = ids.size();
  std::vector<Bytes> out(n);
  std::vector<Wide> rem(n);
  Wide sum = 0;
  Wide floors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (numer[i] < 0) throw std::invalid_argument("largest_remainder: negative quota");
    out[i] = static_cast<Bytes>(numer[i] / denom);
    rem[i] = numer[i] % denom;
    sum += numer[i];
    floors += out[i];
  }
  auto leftover = static_cast<std::size_t>(sum / denom - floors);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return ids[a] < ids[b];
  });
  for (std::size_t k = 0; k < leftover && k < n; ++k) ++out[idx[k]];
  return out;
}

// ---------------------------------------------------------------------------
// Weighted proportional fairness
// ---------------------------------------------------------------------------

/// Real-valued share [b_max_i / B_max · w_d + φ_i / Σφ · w_s] · B_rem.
/// With Σφ = 0 the whole weight goes to the demand term; with B_max = 0
/// the share is 0.
inline double wpf_share(Bytes b_max_i, Bytes b_max_class, std::uint64_t phi_i,
                        std::uint64_t phi_sum, const WeightPair& w, Bytes b_rem) {
  if (b_max_class <= 0) return 0.0;
  const double demand = static_cast<double>(b_max_i) / static_cast<double>(b_max_class);
  if (phi_sum == 0) return demand * static_cast<double>(b_rem);
  const double starve = static_cast<double>(phi_i) / static_cast<double>(phi_sum);
  return (demand * w.demand() + starve * w.starvation()) * static_cast<double>(b_rem);
}

/// Integer WPF split of b_rem over `members` (aligned with `counters`),
/// each grant capped at its b_max. Capped surplus is left unallocated.
inline std::vector<Bytes> wpf_allocate(std::span<const ConnBounds> members,
                                       std::span<const std::uint32_t> counters,
                                       const WeightPair& w, Bytes b_rem) {
  if (members.size() != counters.size()) throw std::invalid_argument("wpf_allocate: size mismatch");
  const std::size_t n = members.size();
  std::vector<Bytes> grants(n, 0);
  Wide b_max_class = 0;
  Wide phi_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    b_max_class += members[i].b_max;
    phi_sum += counters[i];
  }
  if (n == 0 || b_rem <= 0 || b_max_class == 0) return grants;

  std::vector<Cid> ids(n);
  std::vector<Wide> numer(n);
  Wide denom;
  if (phi_sum == 0) {
    denom = b_max_class;
    for (std::size_t i = 0; i < n; ++i) numer[i] = Wide{b_rem} * members[i].b_max;
  } else {
    denom = b_max_class * phi_sum * WeightPair::kScale;
    for (std::size_t i = 0; i < n; ++i)
      numer[i] = Wide{b_rem} * (Wide{members[i].b_max} * phi_sum * w.demand_ppm +
                                Wide{counters[i]} * b_max_class * w.starvation_ppm);
  }
  for (std::size_t i = 0; i < n; ++i) ids[i] = members[i].cid;
  grants = largest_remainder(ids, numer, denom);
  for (std::size_t i = 0; i < n; ++i) grants[i] = std::min(grants[i], members[i].b_max);
  return grants;
}

// ---------------------------------------------------------------------------
// The three cases
// ---------------------------------------------------------------------------

/// Every connection gets b_max; the surplus is split in proportion to the
/// residual backlog f - b_max, never past f.
inline GrantMap allocate_case1(std::span<const ConnBounds> bounds, Bytes total) {
  GrantMap g;
  Bytes rem = total;
  Bytes residual_sum = 0;
  for (const auto& b : bounds) {
    g.set(b.cid, b.b_max);
    rem -= b.b_max;
    residual_sum += b.backlog - b.b_max;
  }
  if (rem <= 0 || residual_sum == 0) return g;
  if (rem >= residual_sum) {
    for (const auto& b : bounds) g.set(b.cid, b.backlog);
    return g;
  }
  std::vector<Cid> ids;
  std::vector<Wide> numer;
  for (const auto& b : bounds) {
    ids.push_back(b.cid);
    numer.push_back(Wide{rem} * (b.backlog - b.b_max));
  }
  const auto extra = largest_remainder(ids, numer, residual_sum);
  for (std::size_t i = 0; i < bounds.size(); ++i) g.add(bounds[i].cid, extra[i]);
  return g;
}

/// b_min plus (b_max - b_min) / (ΣB_max - ΣB_min) of the remainder. Sums to
/// `total` exactly.
inline GrantMap allocate_case2(std::span<const ConnBounds> bounds, Bytes total) {
  const auto s = summarize_demand(bounds);
  if (total < s.min_total || total > s.max_total)
    throw std::invalid_argument("allocate_case2: budget outside [min, max] demand");
  GrantMap g;
  for (const auto& b : bounds) g.set(b.cid, b.b_min);
  const Bytes rem = total - s.min_total;
  const Bytes span_total = s.max_total - s.min_total;
  if (rem == 0 || span_total == 0) return g;
  std::vector<Cid> ids;
  std::vector<Wide> numer;
  for (const auto& b : bounds) {
    ids.push_back(b.cid);
    numer.push_back(Wide{rem} * (b.b_max - b.b_min));
  }
  const auto extra = largest_remainder(ids, numer, span_total);
  for (std::size_t i = 0; i < bounds.size(); ++i) g.add(bounds[i].cid, extra[i]);
  return g;
}

/// Overload. DCS minima are granted walking the schedule's UGS, ERT and RT
/// tiers (elevated members included); the first connection that does not
/// fit takes what is left. Any remainder above the NRT minima buys those
/// minima and is then WPF-split across BE; otherwise it is WPF-split across
/// NRT. Connections elevated into the NRT tier keep their BE treatment.
inline GrantMap allocate_case3(const PrioritySchedule& schedule,
                               std::span<const ConnBounds> bounds,
                               const std::map<Cid, std::uint32_t>& counters,
                               const WpfWeights& weights, Bytes total) {
  std::map<Cid, const ConnBounds*> by_cid;
  for (const auto& b : bounds) by_cid[b.cid] = &b;
  auto lookup = [&](Cid cid) -> const ConnBounds& {
    auto it = by_cid.find(cid);
    if (it == by_cid.end()) throw std::logic_error("allocate_case3: schedule names unknown CID");
    return *it->second;
  };
  auto phi = [&](Cid cid) -> std::uint32_t {
    auto it = counters.find(cid);
    return it == counters.end() ? 0 : it->second;
  };

  GrantMap g;
  for (const auto& b : bounds) g.set(b.cid, 0);

  Bytes rem = total;
  for (Cid cid : schedule.dcs_order()) {
    if (rem <= 0) break;
    const Bytes want = lookup(cid).b_min;
    const Bytes give = std::min(want, rem);
    g.set(cid, give);
    rem -= give;
  }
  if (rem <= 0) return g;

  auto members_of = [&](ServiceClass cls) {
    std::vector<ConnBounds> m;
    std::vector<std::uint32_t> c;
    for (const auto& b : bounds) {
      if (b.cls != cls) continue;
      m.push_back(b);
      c.push_back(phi(b.cid));
    }
    return std::pair{m, c};
  };

  auto [nrt, nrt_phi] = members_of(ServiceClass::NRT_VR);
  Bytes nrt_min = 0;
  for (const auto& b : nrt) nrt_min += b.b_min;

  if (rem > nrt_min) {
    for (const auto& b : nrt) g.set(b.cid, b.b_min);
    rem -= nrt_min;
    auto [be, be_phi] = members_of(ServiceClass::BE);
    const auto shares = wpf_allocate(be, be_phi, weights.be, rem);
    for (std::size_t i = 0; i < be.size(); ++i) g.set(be[i].cid, shares[i]);
  } else {
    const auto shares = wpf_allocate(nrt, nrt_phi, weights.nrt, rem);
    for (std::size_t i = 0; i < nrt.size(); ++i) g.set(nrt[i].cid, shares[i]);
  }
  return g;
}

struct Allocation {
  AllocationCase which = AllocationCase::CaseII;
  DemandSummary summary;
  std::vector<ConnBounds> bounds;
  GrantMap grants;
};

/// Dispatches on the demand summary; pure function of its inputs.
inline Allocation allocate_bounds(const PrioritySchedule& schedule,
                                  std::vector<ConnBounds> bounds,
                                  const std::map<Cid, std::uint32_t>& counters,
                                  const WpfWeights& weights, Bytes total) {
  Allocation a;
  a.bounds = std::move(bounds);
  a.summary = summarize_demand(a.bounds);
  a.which = select_case(a.summary, total);
  switch (a.which) {
    case AllocationCase::CaseI: a.grants = allocate_case1(a.bounds, total); break;
    case AllocationCase::CaseII: a.grants = allocate_case2(a.bounds, total); break;
    case AllocationCase::CaseIII:
      a.grants = allocate_case3(schedule, a.bounds, counters, weights, total);
      break;
  }
  return a;
}

inline Allocation allocate(const FrameBudget& frame, const PrioritySchedule& schedule,
                           std::span<const ConnectionState> conns, const WpfWeights& weights) {
  std::vector<ConnBounds> bounds;
  std::map<Cid, std::uint32_t> counters;
  bounds.reserve(conns.size());
  for (const auto& c : conns) {
    bounds.push_back(conn_bounds(c, frame.duration));
    counters[c.cid()] = c.interrupt_counter();
  }
  return allocate_bounds(schedule, std::move(bounds), counters, weights, frame.total_bytes);
}

}  // namespace dlsched
