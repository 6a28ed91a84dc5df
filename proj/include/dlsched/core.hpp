#pragma once

// Domain types shared by every part of the downlink scheduler: service
// classes, QoS profiles, packets, per-connection queues and the frame clock.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dlsched {

using Bytes = std::int64_t;
using Micros = std::int64_t;
using BitRate = std::int64_t;  // bits per second
using Cid = std::uint32_t;

// ---------------------------------------------------------------------------
// ServiceClass
// ---------------------------------------------------------------------------

/// The five downlink service types, declared in strict priority order.
enum class ServiceClass : std::uint8_t { UGS, ERT_VR, RT_VR, NRT_VR, BE };

inline constexpr std::size_t kNumClasses = 5;

inline constexpr std::array<ServiceClass, kNumClasses> kAllClasses{
    ServiceClass::UGS, ServiceClass::ERT_VR, ServiceClass::RT_VR,
    ServiceClass::NRT_VR, ServiceClass::BE};

/// Position in the priority order; 0 is served first.
constexpr std::size_t tier_index(ServiceClass c) {
  return static_cast<std::size_t>(c);
}

/// Delay-constrained services.
constexpr bool is_dcs(ServiceClass c) {
  return c == ServiceClass::UGS || c == ServiceClass::ERT_VR ||
         c == ServiceClass::RT_VR;
}

/// Throughput-guaranteed services.
constexpr bool is_tgs(ServiceClass c) { return !is_dcs(c); }

constexpr bool higher_priority(ServiceClass a, ServiceClass b) {
  return tier_index(a) < tier_index(b);
}

constexpr std::string_view to_string(ServiceClass c) {
  switch (c) {
    case ServiceClass::UGS: return "UGS";
    case ServiceClass::ERT_VR: return "ERT-VR";
    case ServiceClass::RT_VR: return "RT-VR";
    case ServiceClass::NRT_VR: return "NRT-VR";
    case ServiceClass::BE: return "BE";
  }
  return "?";
}

/// Accepts "UGS", "ERT-VR", "ert_vr", "ertvr", ... (case and separator
/// insensitive).
inline std::optional<ServiceClass> parse_service_class(std::string_view s) {
  std::string key;
  for (char ch : s) {
    if (ch == '-' || ch == '_' || ch == ' ') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  if (key == "UGS") return ServiceClass::UGS;
  if (key == "ERTVR" || key == "ERT") return ServiceClass::ERT_VR;
  if (key == "RTVR" || key == "RT") return ServiceClass::RT_VR;
  if (key == "NRTVR" || key == "NRT") return ServiceClass::NRT_VR;
  if (key == "BE") return ServiceClass::BE;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Units
// ---------------------------------------------------------------------------

/// 128-bit intermediate for exact products of byte counts and rates.
__extension__ typedef __int128 Wide;

/// floor(rate * duration / 8 / 1e6); zero rate is allowed and yields 0.
inline Bytes rate_to_frame_bytes(BitRate rate, Micros duration) {
  if (rate < 0 || duration < 0)
    throw std::invalid_argument("rate_to_frame_bytes: negative input");
  const auto bits = static_cast<Wide>(rate) * duration;
  return static_cast<Bytes>(bits / 8'000'000);
}

/// Downlink byte budget of one frame. Both inputs must be positive.
inline Bytes bytes_per_frame(BitRate link_rate, Micros frame_duration) {
  if (link_rate <= 0)
    throw std::invalid_argument("bytes_per_frame: link rate must be positive");
  if (frame_duration <= 0)
    throw std::invalid_argument("bytes_per_frame: frame duration must be positive");
  return rate_to_frame_bytes(link_rate, frame_duration);
}

// ---------------------------------------------------------------------------
// QosProfile
// ---------------------------------------------------------------------------

struct QosProfile {
  BitRate max_sustained_rate = 0;  // Γ
  BitRate min_reserved_rate = 0;   // γ, zero for BE
  Micros max_latency = 0;          // ζ
  Micros grant_interval = 0;       // carried only
  Micros tolerated_jitter = 0;     // carried only
  Bytes packet_size = 0;

  void validate() const {
    if (min_reserved_rate < 0)
      throw std::invalid_argument("min_reserved_rate must be >= 0");
    if (max_sustained_rate < min_reserved_rate)
      throw std::invalid_argument("max_sustained_rate must be >= min_reserved_rate");
    if (max_latency <= 0) throw std::invalid_argument("max_latency must be > 0");
    if (packet_size <= 0) throw std::invalid_argument("packet_size must be > 0");
    if (grant_interval < 0 || tolerated_jitter < 0)
      throw std::invalid_argument("grant_interval and tolerated_jitter must be >= 0");
  }

  friend bool operator==(const QosProfile&, const QosProfile&) = default;
};

// ---------------------------------------------------------------------------
// Packets and connections
// ---------------------------------------------------------------------------

struct PacketRecord {
  Cid cid = 0;
  Micros arrival_time = 0;
  Bytes size = 0;

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Cumulative per-connection counters over a run.
struct ConnectionStats {
  Bytes offered_bytes = 0;
  std::int64_t offered_packets = 0;
  Bytes served_bytes = 0;
  std::int64_t served_packets = 0;
  Bytes dropped_bytes = 0;
  std::int64_t dropped_packets = 0;
  Micros delay_sum = 0;
};

/// Values remembered from frame m-1 for the satisfaction ratios.
struct FrameHistory {
  bool valid = false;         // false until the first frame closes
  Bytes backlog = 0;          // f(m-1): snapshot backlog, pre-service
  Bytes served = 0;           // b^a(m-1): bytes actually served
  Bytes min_request = 0;      // b^low(m-1) = min(f(m-1), γ·T_frame)
};

/// One downlink connection: bounded FIFO of packets plus scheduling history.
/// backlog_bytes() always equals the sum of queued packet sizes.
class ConnectionState {
 public:
  static constexpr std::size_t kDefaultCapacity = 100;

  ConnectionState(Cid cid, ServiceClass cls, QosProfile qos,
                  std::size_t capacity = kDefaultCapacity)
      : cid_(cid), cls_(cls), qos_(qos), capacity_(capacity) {
    if (cid == 0) throw std::invalid_argument("cid must be positive");
    if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
    qos_.validate();
  }

  Cid cid() const { return cid_; }
  ServiceClass service_class() const { return cls_; }
  const QosProfile& qos() const { return qos_; }
  std::size_t capacity() const { return capacity_; }

  const std::deque<PacketRecord>& queue() const { return queue_; }
  std::size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }
  bool full() const { return queue_.size() >= capacity_; }
  Bytes backlog_bytes() const { return backlog_; }

  /// Appends unless the queue is full. Returns false on overflow.
  bool enqueue(const PacketRecord& p) {
    if (p.size <= 0) throw std::invalid_argument("packet size must be positive");
    if (p.cid != cid_) throw std::invalid_argument("packet cid does not match connection");
    if (full()) return false;
    queue_.push_back(p);
    backlog_ += p.size;
    return true;
  }

  const PacketRecord& front() const {
    if (queue_.empty()) throw std::logic_error("front() on empty queue");
    return queue_.front();
  }

  PacketRecord pop_front() {
    if (queue_.empty()) throw std::logic_error("pop_front() on empty queue");
    PacketRecord p = queue_.front();
    queue_.pop_front();
    backlog_ -= p.size;
    return p;
  }

  const FrameHistory& last_frame() const { return history_; }
  void set_last_frame(const FrameHistory& h) { history_ = h; }

  std::uint32_t interrupt_counter() const { return interrupt_counter_; }
  void set_interrupt_counter(std::uint32_t phi) { interrupt_counter_ = phi; }

  ConnectionStats& stats() { return stats_; }
  const ConnectionStats& stats() const { return stats_; }

 private:
  Cid cid_;
  ServiceClass cls_;
  QosProfile qos_;
  std::size_t capacity_;
  std::deque<PacketRecord> queue_;
  Bytes backlog_ = 0;
  FrameHistory history_;
  std::uint32_t interrupt_counter_ = 0;
  ConnectionStats stats_;
};

// ---------------------------------------------------------------------------
// Frame clock and grants
// ---------------------------------------------------------------------------

struct FrameBudget {
  std::int64_t index = 0;
  Micros duration = 0;
  Bytes total_bytes = 0;
  Micros now = 0;  // frame start, index * duration

  Micros end() const { return now + duration; }

  /// Instant at which queues are ranked. Every arrival of the frame is
  /// already queued, so packet ages are measured from the frame end.
  Micros decision_time() const { return end(); }

  static FrameBudget at(std::int64_t index, Micros duration, Bytes total) {
    return FrameBudget{index, duration, total, index * duration};
  }
};

/// Per-CID byte grants for one frame. Absent CIDs are granted 0.
class GrantMap {
 public:
  void set(Cid cid, Bytes bytes) {
    if (bytes < 0) throw std::invalid_argument("grant must be non-negative");
    grants_[cid] = bytes;
  }
  void add(Cid cid, Bytes bytes) { set(cid, get(cid) + bytes); }

  Bytes get(Cid cid) const {
    auto it = grants_.find(cid);
    return it == grants_.end() ? 0 : it->second;
  }

  Bytes total() const {
    Bytes sum = 0;
    for (const auto& [cid, b] : grants_) sum += b;
    return sum;
  }

  bool empty() const { return grants_.empty(); }
  std::size_t size() const { return grants_.size(); }
  auto begin() const { return grants_.begin(); }
  auto end() const { return grants_.end(); }
  const std::map<Cid, Bytes>& raw() const { return grants_; }

  /// Same grants, treating missing entries as zero.
  friend bool operator==(const GrantMap& a, const GrantMap& b) {
    auto covers = [](const GrantMap& x, const GrantMap& y) {
      return std::all_of(x.begin(), x.end(),
                         [&](const auto& kv) { return y.get(kv.first) == kv.second; });
    };
    return covers(a, b) && covers(b, a);
  }

 private:
  std::map<Cid, Bytes> grants_;
};

}  // namespace dlsched
