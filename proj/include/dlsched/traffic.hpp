#pragma once

// Downlink arrival processes and tail-drop enqueueing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dlsched/core.hpp"

namespace dlsched {

enum class TrafficKind : std::uint8_t { CBR, ON_OFF, POISSON };

constexpr std::string_view to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::CBR: return "CBR";
    case TrafficKind::ON_OFF: return "ON_OFF";
    case TrafficKind::POISSON: return "POISSON";
  }
  return "?";
}

struct TrafficModel {
  TrafficKind kind = TrafficKind::CBR;
  BitRate mean_rate = 0;
  Micros mean_on = 100'000;   // ON_OFF only
  Micros mean_off = 100'000;  // ON_OFF only
  std::uint64_t seed_stream = 0;

  void validate() const {
    if (mean_rate <= 0) throw std::invalid_argument("traffic mean_rate must be > 0");
    if (kind == TrafficKind::ON_OFF && (mean_on <= 0 || mean_off <= 0))
      throw std::invalid_argument("ON_OFF durations must be > 0");
  }

  friend bool operator==(const TrafficModel&, const TrafficModel&) = default;
};

/// UGS is constant rate, ERT/RT are exponential on/off, NRT/BE are Poisson.
inline TrafficModel default_traffic_model(ServiceClass cls, BitRate mean_rate,
                                          std::uint64_t seed_stream = 0) {
  TrafficModel m;
  m.mean_rate = mean_rate;
  m.seed_stream = seed_stream;
  switch (cls) {
    case ServiceClass::UGS: m.kind = TrafficKind::CBR; break;
    case ServiceClass::ERT_VR:
    case ServiceClass::RT_VR: m.kind = TrafficKind::ON_OFF; break;
    case ServiceClass::NRT_VR:
    case ServiceClass::BE: m.kind = TrafficKind::POISSON; break;
  }
  return m;
}

/// splitmix64 finaliser; mixes the scenario seed with a stream id so that
/// each connection owns an independent generator.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stateful per-connection packet source. Timestamps of frame m fall in
/// [now, now + T_frame) and are non-decreasing.
class TrafficSource {
 public:
  TrafficSource(const TrafficModel& model, Cid cid, Bytes packet_size,
                std::uint64_t scenario_seed)
      : model_(model),
        cid_(cid),
        packet_size_(packet_size),
        rng_(substream_seed(scenario_seed, model.seed_stream)) {
    model_.validate();
    if (packet_size <= 0) throw std::invalid_argument("packet_size must be > 0");
    // Mean spacing between packets at the configured mean rate.
    interval_ = static_cast<double>(packet_size_) * 8e6 / static_cast<double>(model_.mean_rate);
    switch (model_.kind) {
      case TrafficKind::CBR: break;
      case TrafficKind::POISSON: next_ = exponential(interval_); break;
      case TrafficKind::ON_OFF: {
        const double on = static_cast<double>(model_.mean_on);
        const double off = static_cast<double>(model_.mean_off);
        // While ON the source runs at the peak rate that yields mean_rate.
        interval_ *= on / (on + off);
        on_ = uniform() * (on + off) < on;
        phase_end_ = exponential(on_ ? on : off);
        next_ = on_ ? 0.0 : phase_end_;
        break;
      }
    }
  }

  const TrafficModel& model() const { return model_; }

  std::vector<PacketRecord> generate(const FrameBudget& frame) {
    std::vector<PacketRecord> out;
    switch (model_.kind) {
      case TrafficKind::CBR: generate_cbr(frame, out); break;
      case TrafficKind::POISSON: generate_poisson(frame, out); break;
      case TrafficKind::ON_OFF: generate_on_off(frame, out); break;
    }
    return out;
  }

 private:
  // k-th packet at floor(k * size * 8e6 / rate), exact integer spacing.
  void generate_cbr(const FrameBudget& frame, std::vector<PacketRecord>& out) {
    const Wide bits = static_cast<Wide>(packet_size_) * 8'000'000;
    for (;;) {
      const auto t = static_cast<Micros>(bits * cbr_index_ / model_.mean_rate);
      if (t >= frame.end()) break;
      ++cbr_index_;
      if (t < frame.now) continue;
      out.push_back({cid_, t, packet_size_});
    }
  }

  void generate_poisson(const FrameBudget& frame, std::vector<PacketRecord>& out) {
    const double end = static_cast<double>(frame.end());
    while (next_ < end) {
      emit(frame, out);
      next_ += exponential(interval_);
    }
  }

  void generate_on_off(const FrameBudget& frame, std::vector<PacketRecord>& out) {
    const double end = static_cast<double>(frame.end());
    for (;;) {
      if (on_) {
        const double limit = std::min(phase_end_, end);
        while (next_ < limit) {
          emit(frame, out);
          next_ += interval_;
        }
      }
      if (phase_end_ >= end) break;
      const double start = phase_end_;
      on_ = !on_;
      phase_end_ = start + exponential(static_cast<double>(on_ ? model_.mean_on : model_.mean_off));
      if (on_) next_ = start;
    }
  }

  void emit(const FrameBudget& frame, std::vector<PacketRecord>& out) {
    auto t = static_cast<Micros>(std::floor(next_));
    t = std::clamp(t, frame.now, frame.end() - 1);
    out.push_back({cid_, t, packet_size_});
  }

  // Uniform on (0, 1], built from the top 53 bits.
  double uniform() {
    return static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
  }

  double exponential(double mean) { return -mean * std::log(uniform()); }

  TrafficModel model_;
  Cid cid_;
  Bytes packet_size_;
  std::mt19937_64 rng_;
  double interval_ = 0.0;
  std::int64_t cbr_index_ = 0;
  double next_ = 0.0;
  bool on_ = false;
  double phase_end_ = 0.0;
};

/// Tail drop: packets are appended in order until the queue is full, the
/// rest are dropped. Updates offered/dropped counters. Returns the number
/// dropped.
inline std::size_t enqueue_with_drop(ConnectionState& conn,
                                     std::span<const PacketRecord> packets) {
  std::size_t dropped = 0;
  auto& st = conn.stats();
  for (const auto& p : packets) {
    st.offered_bytes += p.size;
    ++st.offered_packets;
    if (!conn.enqueue(p)) {
      ++dropped;
      ++st.dropped_packets;
      st.dropped_bytes += p.size;
    }
  }
  return dropped;
}

}  // namespace dlsched
