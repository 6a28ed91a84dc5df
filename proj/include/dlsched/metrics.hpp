#pragma once

// Per-class throughput/delay aggregation and the CSV report.
//
// CSV schema (one header row, then one row per value):
//
//   window,scheduler,class,metric,value
//
//   window     window index (0-based, `window_frames` frames each; the last
//              window may be shorter), "all" for whole-run values, or
//              "meta" for run metadata
//   scheduler  apds | fifo | dfpq
//   class      UGS | ERT-VR | RT-VR | NRT-VR | BE, or ALL for metadata
//   metric     throughput_bps   mean per-connection throughput of the class
//              delay_ms         mean delay of served packets; empty value
//                               when no packet of the class was served
//              served_packets, dropped_packets   class totals
//              connections      ("all" rows only) connections in the class
//              seed, scenario_hash, window_frames   ("meta" rows)
//
// Rows are ordered scheduler by scheduler (in the order requested), then
// metadata, then class by class in priority order, windows ascending and
// the "all" rows last. Numbers use the shortest round-trip representation.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dlsched/core.hpp"
#include "dlsched/engine.hpp"
#include "dlsched/scheduler.hpp"

namespace dlsched {

struct WindowMetrics {
  double throughput_bps = 0.0;
  std::optional<double> delay_ms;
  std::int64_t served_packets = 0;
  std::int64_t dropped_packets = 0;

  friend bool operator==(const WindowMetrics&, const WindowMetrics&) = default;
};

struct ClassMetrics {
  std::int64_t connections = 0;
  std::vector<WindowMetrics> windows;
  WindowMetrics cumulative;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct SchedulerMetrics {
  SchedulerKind scheduler = SchedulerKind::APDS;
  std::map<ServiceClass, ClassMetrics> classes;  // classes with >= 1 connection

  friend bool operator==(const SchedulerMetrics&, const SchedulerMetrics&) = default;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  std::string scenario_hash;
  std::int64_t window_frames = 1;
  std::vector<SchedulerMetrics> runs;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

namespace detail {

struct ClassTotals {
  std::int64_t connections = 0;
  Bytes served_bytes = 0;
  std::int64_t served_packets = 0;
  std::int64_t dropped_packets = 0;
  Micros delay_sum = 0;
};

inline ClassTotals class_totals(std::span<const FrameStats> frames, ServiceClass cls) {
  ClassTotals t;
  if (!frames.empty())
    for (const auto& c : frames.front().conns) t.connections += c.cls == cls;
  for (const auto& f : frames) {
    for (const auto& c : f.conns) {
      if (c.cls != cls) continue;
      t.served_bytes += c.served_bytes;
      t.served_packets += c.served_packets;
      t.dropped_packets += c.dropped_packets;
      t.delay_sum += c.delay_sum;
    }
  }
  return t;
}

inline WindowMetrics window_metrics(std::span<const FrameStats> frames, ServiceClass cls,
                                    Micros frame_duration) {
  const auto t = class_totals(frames, cls);
  WindowMetrics w;
  w.served_packets = t.served_packets;
  w.dropped_packets = t.dropped_packets;
  if (t.served_packets > 0)
    w.delay_ms = static_cast<double>(t.delay_sum) / static_cast<double>(t.served_packets) / 1000.0;
  const double seconds = static_cast<double>(frames.size()) * static_cast<double>(frame_duration) / 1e6;
  if (t.connections > 0 && seconds > 0.0)
    w.throughput_bps = static_cast<double>(t.served_bytes) * 8.0 / seconds /
                       static_cast<double>(t.connections);
  return w;
}

}  // namespace detail

/// Mean delay in ms over every served packet of the class; nullopt when
/// none was served.
inline std::optional<double> average_delay(std::span<const FrameStats> frames, ServiceClass cls) {
  const auto t = detail::class_totals(frames, cls);
  if (t.served_packets == 0) return std::nullopt;
  return static_cast<double>(t.delay_sum) / static_cast<double>(t.served_packets) / 1000.0;
}

/// Per-window mean per-connection throughput of the class, in bits/s.
inline std::vector<double> average_throughput(std::span<const FrameStats> frames, ServiceClass cls,
                                              std::int64_t window, Micros frame_duration) {
  if (window < 1) throw std::invalid_argument("average_throughput: window must be >= 1");
  std::vector<double> out;
  for (std::size_t start = 0; start < frames.size(); start += static_cast<std::size_t>(window)) {
    const auto len = std::min<std::size_t>(static_cast<std::size_t>(window), frames.size() - start);
    out.push_back(detail::window_metrics(frames.subspan(start, len), cls, frame_duration).throughput_bps);
  }
  return out;
}

inline SchedulerMetrics summarize_run(SchedulerKind kind, std::span<const FrameStats> frames,
                                      std::int64_t window, Micros frame_duration) {
  if (window < 1) throw std::invalid_argument("summarize_run: window must be >= 1");
  SchedulerMetrics m;
  m.scheduler = kind;
  for (auto cls : kAllClasses) {
    const auto totals = detail::class_totals(frames, cls);
    if (totals.connections == 0) continue;
    ClassMetrics cm;
    cm.connections = totals.connections;
    for (std::size_t start = 0; start < frames.size(); start += static_cast<std::size_t>(window)) {
      const auto len = std::min<std::size_t>(static_cast<std::size_t>(window), frames.size() - start);
      cm.windows.push_back(detail::window_metrics(frames.subspan(start, len), cls, frame_duration));
    }
    cm.cumulative = detail::window_metrics(frames, cls, frame_duration);
    m.classes[cls] = std::move(cm);
  }
  return m;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader = "window,scheduler,class,metric,value";

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_number failed");
  return std::string(buf.data(), end);
}

inline std::string to_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& run : r.runs) {
    const auto sched = to_string(run.scheduler);
    os << "meta," << sched << ",ALL,seed," << r.seed << '\n';
    os << "meta," << sched << ",ALL,scenario_hash," << r.scenario_hash << '\n';
    os << "meta," << sched << ",ALL,window_frames," << r.window_frames << '\n';
    for (const auto& [cls, cm] : run.classes) {
      const auto name = to_string(cls);
      auto rows = [&](const std::string& win, const WindowMetrics& w) {
        const std::string prefix = win + "," + std::string(sched) + "," + std::string(name) + ",";
        os << prefix << "throughput_bps," << format_number(w.throughput_bps) << '\n';
        os << prefix << "delay_ms," << (w.delay_ms ? format_number(*w.delay_ms) : "") << '\n';
        os << prefix << "served_packets," << w.served_packets << '\n';
        os << prefix << "dropped_packets," << w.dropped_packets << '\n';
      };
      for (std::size_t i = 0; i < cm.windows.size(); ++i) rows(std::to_string(i), cm.windows[i]);
      rows("all", cm.cumulative);
      os << "all," << sched << ',' << name << ",connections," << cm.connections << '\n';
    }
  }
  return os.str();
}

inline void emit_csv(const MetricsReport& r, const std::filesystem::path& out_path) {
  std::error_code ec;
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path(), ec);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  out << to_csv(r);
  if (!out) throw std::runtime_error("write failed for " + out_path.string());
}

namespace detail {

template <typename T>
T parse_value(std::string_view s, std::string_view what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error("csv: bad " + std::string(what) + " value '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Inverse of to_csv.
inline MetricsReport parse_csv(std::string_view text) {
  MetricsReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("csv: missing header");

  auto run_for = [&](SchedulerKind k) -> SchedulerMetrics& {
    for (auto& run : r.runs)
      if (run.scheduler == k) return run;
    r.runs.push_back({k, {}});
    return r.runs.back();
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 5> f;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto next = i < 4 ? line.find(',', pos) : std::string::npos;
      if (i < 4 && next == std::string::npos) throw std::runtime_error("csv: short row '" + line + "'");
      f[i] = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      pos = next + 1;
    }
    const auto& [win, sched, cls_name, metric, value] = f;
    auto kind = parse_scheduler_kind(sched);
    if (!kind) throw std::runtime_error("csv: unknown scheduler '" + sched + "'");
    auto& run = run_for(*kind);

    if (win == "meta") {
      if (metric == "seed") r.seed = detail::parse_value<std::uint64_t>(value, metric);
      else if (metric == "scenario_hash") r.scenario_hash = value;
      else if (metric == "window_frames") r.window_frames = detail::parse_value<std::int64_t>(value, metric);
      else throw std::runtime_error("csv: unknown meta metric '" + metric + "'");
      continue;
    }

    auto cls = parse_service_class(cls_name);
    if (!cls) throw std::runtime_error("csv: unknown class '" + cls_name + "'");
    auto& cm = run.classes[*cls];
    if (metric == "connections") {
      cm.connections = detail::parse_value<std::int64_t>(value, metric);
      continue;
    }
    WindowMetrics* w = nullptr;
    if (win == "all") {
      w = &cm.cumulative;
    } else {
      const auto idx = detail::parse_value<std::size_t>(win, "window");
      if (cm.windows.size() <= idx) cm.windows.resize(idx + 1);
      w = &cm.windows[idx];
    }
    if (metric == "throughput_bps") w->throughput_bps = detail::parse_value<double>(value, metric);
    else if (metric == "delay_ms")
      w->delay_ms = value.empty() ? std::nullopt
                                  : std::optional<double>(detail::parse_value<double>(value, metric));
    else if (metric == "served_packets") w->served_packets = detail::parse_value<std::int64_t>(value, metric);
    else if (metric == "dropped_packets") w->dropped_packets = detail::parse_value<std::int64_t>(value, metric);
    else throw std::runtime_error("csv: unknown metric '" + metric + "'");
  }
  return r;
}

}  // namespace dlsched
