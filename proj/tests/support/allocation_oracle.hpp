#pragma once

// Test-only reference for the three-case bandwidth split. Written as one
// straight-line routine over exact fractions so it shares no code with the
// library allocator. Inputs are already-computed per-connection bounds plus
// the DCS walk order.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

__extension__ typedef __int128 i128;

struct Frac {
  i128 n = 0;
  i128 d = 1;
};

inline i128 gcd(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline Frac make(i128 n, i128 d) {
  if (d == 0) throw std::logic_error("oracle: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const i128 g = gcd(n, d);
  return g > 1 ? Frac{n / g, d / g} : Frac{n, d};
}
inline Frac add(Frac a, Frac b) { return make(a.n * b.d + b.n * a.d, a.d * b.d); }
inline Frac mul(Frac a, Frac b) { return make(a.n * b.n, a.d * b.d); }
inline i128 floor_of(Frac a) {
  i128 q = a.n / a.d;
  if (a.n % a.d != 0 && a.n < 0) --q;
  return q;
}
inline Frac frac_part(Frac a) { return add(a, Frac{-floor_of(a), 1}); }
inline bool less(Frac a, Frac b) { return a.n * b.d < b.n * a.d; }
inline bool equal(Frac a, Frac b) { return a.n * b.d == b.n * a.d; }

enum Cls { UGS = 0, ERT = 1, RT = 2, NRT = 3, BE = 4 };

struct Conn {
  std::uint32_t cid;
  Cls cls;
  std::int64_t b_min;  // for BE this is ignored; b_max stands in
  std::int64_t b_max;
  std::int64_t f;
  std::uint32_t phi;
};

/// Floors every quota, then hands the missing units (up to `target`) to the
/// largest fractional parts, lowest cid first on ties.
inline std::vector<std::int64_t> round_to(const std::vector<std::uint32_t>& cid,
                                          const std::vector<Frac>& quota, std::int64_t target) {
  std::vector<std::int64_t> out(quota.size());
  std::int64_t have = 0;
  for (std::size_t i = 0; i < quota.size(); ++i) {
    out[i] = static_cast<std::int64_t>(floor_of(quota[i]));
    have += out[i];
  }
  std::vector<std::size_t> order(quota.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Frac fa = frac_part(quota[a]);
    const Frac fb = frac_part(quota[b]);
    if (!equal(fa, fb)) return less(fb, fa);
    return cid[a] < cid[b];
  });
  for (std::size_t k = 0; have < target && k < order.size(); ++k, ++have) ++out[order[k]];
  return out;
}

/// Weighted split of `rem` over `members` (indices into conns), capped at
/// b_max. w1 weighs the demand share, w2 the interrupt share.
inline void wpf(const std::vector<Conn>& conns, const std::vector<std::size_t>& members,
                Frac w1, Frac w2, std::int64_t rem, std::map<std::uint32_t, std::int64_t>& g) {
  std::int64_t bmax = 0;
  std::int64_t phisum = 0;
  for (auto i : members) {
    bmax += conns[i].b_max;
    phisum += conns[i].phi;
  }
  if (members.empty() || bmax == 0 || rem <= 0) return;
  if (phisum == 0) {
    w1 = Frac{1, 1};
    w2 = Frac{0, 1};
  }
  std::vector<std::uint32_t> ids;
  std::vector<Frac> quota;
  Frac total{0, 1};
  for (auto i : members) {
    Frac demand = make(conns[i].b_max, bmax);
    Frac starve = phisum == 0 ? Frac{0, 1} : make(conns[i].phi, phisum);
    Frac q = mul(add(mul(demand, w1), mul(starve, w2)), Frac{rem, 1});
    ids.push_back(conns[i].cid);
    quota.push_back(q);
    total = add(total, q);
  }
  const auto r = round_to(ids, quota, static_cast<std::int64_t>(floor_of(total)));
  for (std::size_t k = 0; k < members.size(); ++k)
    g[conns[members[k]].cid] = std::min<std::int64_t>(r[k], conns[members[k]].b_max);
}

/// Returns cid -> grant for every connection.
inline std::map<std::uint32_t, std::int64_t> allocate(const std::vector<Conn>& conns,
                                                      const std::vector<std::uint32_t>& dcs_walk,
                                                      Frac omega1, Frac omega2, Frac varpi1,
                                                      Frac varpi2, std::int64_t B_total) {
  std::map<std::uint32_t, std::int64_t> g;
  for (const auto& c : conns) g[c.cid] = 0;

  std::int64_t B_max_req = 0;
  std::int64_t B_min_req = 0;
  std::int64_t B_min_nrt = 0;
  for (const auto& c : conns) {
    B_max_req += c.b_max;
    B_min_req += c.cls == BE ? c.b_max : c.b_min;
    if (c.cls == NRT) B_min_nrt += c.b_min;
  }

  if (B_total < B_min_req) {
    // DCS lower bounds in walk order.
    std::int64_t B_rem = B_total;
    for (auto cid : dcs_walk) {
      const auto& c = *std::find_if(conns.begin(), conns.end(),
                                    [&](const Conn& x) { return x.cid == cid; });
      if (c.b_min <= B_rem) {
        g[cid] = c.b_min;
        B_rem -= c.b_min;
      } else {
        g[cid] = B_rem;
        B_rem = 0;
      }
    }
    if (B_rem == 0) return g;
    std::vector<std::size_t> nrt, be;
    for (std::size_t i = 0; i < conns.size(); ++i) {
      if (conns[i].cls == NRT) nrt.push_back(i);
      if (conns[i].cls == BE) be.push_back(i);
    }
    if (B_rem > B_min_nrt) {
      for (auto i : nrt) g[conns[i].cid] = conns[i].b_min;
      B_rem -= B_min_nrt;
      wpf(conns, be, omega1, omega2, B_rem, g);
    } else {
      wpf(conns, nrt, varpi1, varpi2, B_rem, g);
    }
    return g;
  }

  if (B_total > B_max_req) {
    std::int64_t B_rem = B_total;
    std::int64_t residual = 0;
    for (const auto& c : conns) {
      g[c.cid] = c.b_max;
      B_rem -= c.b_max;
      residual += c.f - c.b_max;
    }
    if (residual == 0) return g;
    std::vector<std::uint32_t> ids;
    std::vector<Frac> quota;
    for (const auto& c : conns) {
      ids.push_back(c.cid);
      const std::int64_t pool = std::min(B_rem, residual);
      quota.push_back(make(static_cast<i128>(pool) * (c.f - c.b_max), residual));
    }
    const auto extra = round_to(ids, quota, std::min(B_rem, residual));
    for (std::size_t k = 0; k < conns.size(); ++k) g[conns[k].cid] += extra[k];
    return g;
  }

  // Between the bounds.
  const std::int64_t B_rem = B_total - B_min_req;
  const std::int64_t spread = B_max_req - B_min_req;
  std::vector<std::uint32_t> ids;
  std::vector<Frac> quota;
  for (const auto& c : conns) {
    const std::int64_t lo = c.cls == BE ? c.b_max : c.b_min;
    g[c.cid] = lo;
    ids.push_back(c.cid);
    quota.push_back(spread == 0 ? Frac{0, 1} : make(static_cast<i128>(B_rem) * (c.b_max - lo), spread));
  }
  if (spread == 0) return g;
  const auto extra = round_to(ids, quota, B_rem);
  for (std::size_t k = 0; k < conns.size(); ++k) g[conns[k].cid] += extra[k];
  return g;
}

}  // namespace oracle
