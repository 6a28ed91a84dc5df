#pragma once

// Scenario files are JSON objects:
//
//   {
//     "description": "...",                          optional
//     "link":     { "rate_bps": 10000000 },
//     "frame":    { "duration_us": 5000 },
//     "duration": { "frames": 2000 },
//     "queue_capacity": 100,                         optional, default 100
//     "eta": 50,                                     optional, default 50
//     "weights": { "be":  { "demand": 0.6, "starvation": 0.4 },
//                  "nrt": { "demand": 0.6, "starvation": 0.4 } },   optional
//     "scheduler": "apds" | "fifo" | "dfpq",         optional, default apds
//     "seed": 42,                                    optional, default 1
//     "dfpq": { "class_weights": { "UGS": 0.3, ... } },             optional
//     "connections": [
//       { "cid": 1, "ms": 1, "class": "UGS",
//         "qos": { "max_sustained_rate_bps": ..., "min_reserved_rate_bps": ...,
//                  "max_latency_us": ..., "grant_interval_us": ...,
//                  "tolerated_jitter_us": ..., "packet_size": ... },
//         "traffic": { "model": "CBR" | "ON_OFF" | "POISSON",
//                      "mean_rate_bps": ..., "mean_on_us": ..., "mean_off_us": ...,
//                      "seed_stream": ... } } ]
//   }
//
// Unknown keys are rejected. min_reserved_rate_bps is required for every
// class except BE, where it must be absent or zero.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

#include "dlsched/engine.hpp"

namespace dlsched {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ScenarioError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ScenarioError(where + "." + key + ": unknown key");
  }
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(where + "." + key + ": missing");
  return *it;
}

template <typename T>
T as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ScenarioError(where + ": expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ScenarioError(where + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
        throw ScenarioError(where + ": must be non-negative");
    }
  }
  return v.get<T>();
}

template <typename T>
T get_or(const json& obj, const std::string& where, const char* key, T fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number<T>(*it, where + "." + key);
}

inline WeightPair parse_weight_pair(const json& v, const std::string& where) {
  check_keys(v, where, {"demand", "starvation"});
  try {
    return WeightPair::from_fractions(as_number<double>(require(v, where, "demand"), where + ".demand"),
                                      as_number<double>(require(v, where, "starvation"),
                                                        where + ".starvation"));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(where + ": " + e.what());
  }
}

inline ConnectionSpec parse_connection(const json& v, const std::string& where) {
  check_keys(v, where, {"cid", "ms", "class", "qos", "traffic"});
  ConnectionSpec c;
  c.cid = as_number<Cid>(require(v, where, "cid"), where + ".cid");
  c.ms = get_or<std::uint32_t>(v, where, "ms", 0);
  const auto& cls = require(v, where, "class");
  if (!cls.is_string()) throw ScenarioError(where + ".class: expected a string");
  auto parsed = parse_service_class(cls.get<std::string>());
  if (!parsed) throw ScenarioError(where + ".class: unknown service class '" + cls.get<std::string>() + "'");
  c.cls = *parsed;

  const std::string qw = where + ".qos";
  const auto& q = require(v, where, "qos");
  check_keys(q, qw, {"max_sustained_rate_bps", "min_reserved_rate_bps", "max_latency_us",
                     "grant_interval_us", "tolerated_jitter_us", "packet_size"});
  c.qos.max_sustained_rate =
      as_number<BitRate>(require(q, qw, "max_sustained_rate_bps"), qw + ".max_sustained_rate_bps");
  if (c.cls == ServiceClass::BE) {
    c.qos.min_reserved_rate = get_or<BitRate>(q, qw, "min_reserved_rate_bps", 0);
  } else {
    if (!q.contains("min_reserved_rate_bps"))
      throw ScenarioError(qw + ".min_reserved_rate_bps: missing (required for " +
                          std::string(to_string(c.cls)) + ")");
    c.qos.min_reserved_rate =
        as_number<BitRate>(q.at("min_reserved_rate_bps"), qw + ".min_reserved_rate_bps");
  }
  c.qos.max_latency = as_number<Micros>(require(q, qw, "max_latency_us"), qw + ".max_latency_us");
  c.qos.grant_interval = get_or<Micros>(q, qw, "grant_interval_us", 0);
  c.qos.tolerated_jitter = get_or<Micros>(q, qw, "tolerated_jitter_us", 0);
  c.qos.packet_size = as_number<Bytes>(require(q, qw, "packet_size"), qw + ".packet_size");

  const std::string tw = where + ".traffic";
  const auto& t = require(v, where, "traffic");
  check_keys(t, tw, {"model", "mean_rate_bps", "mean_on_us", "mean_off_us", "seed_stream"});
  const auto rate = as_number<BitRate>(require(t, tw, "mean_rate_bps"), tw + ".mean_rate_bps");
  c.traffic = default_traffic_model(c.cls, rate, c.cid);
  if (auto it = t.find("model"); it != t.end()) {
    const auto name = it->is_string() ? it->get<std::string>() : std::string{};
    if (name == "CBR") c.traffic.kind = TrafficKind::CBR;
    else if (name == "ON_OFF") c.traffic.kind = TrafficKind::ON_OFF;
    else if (name == "POISSON") c.traffic.kind = TrafficKind::POISSON;
    else throw ScenarioError(tw + ".model: expected CBR, ON_OFF or POISSON");
  }
  c.traffic.mean_on = get_or<Micros>(t, tw, "mean_on_us", c.traffic.mean_on);
  c.traffic.mean_off = get_or<Micros>(t, tw, "mean_off_us", c.traffic.mean_off);
  c.traffic.seed_stream = get_or<std::uint64_t>(t, tw, "seed_stream", c.cid);
  return c;
}

}  // namespace detail

/// Builds and validates a Scenario. Errors name the offending field.
inline Scenario parse_scenario(const nlohmann::json& root) {
  using namespace detail;
  const std::string w = "scenario";
  check_keys(root, w, {"description", "link", "frame", "duration", "queue_capacity", "eta",
                       "weights", "scheduler", "seed", "dfpq", "connections"});
  Scenario s;

  const auto& link = require(root, w, "link");
  check_keys(link, w + ".link", {"rate_bps"});
  s.link_rate = as_number<BitRate>(require(link, w + ".link", "rate_bps"), w + ".link.rate_bps");

  const auto& frame = require(root, w, "frame");
  check_keys(frame, w + ".frame", {"duration_us"});
  s.frame_duration =
      as_number<Micros>(require(frame, w + ".frame", "duration_us"), w + ".frame.duration_us");

  const auto& dur = require(root, w, "duration");
  check_keys(dur, w + ".duration", {"frames"});
  s.num_frames = as_number<std::int64_t>(require(dur, w + ".duration", "frames"), w + ".duration.frames");

  s.queue_capacity = get_or<std::size_t>(root, w, "queue_capacity", s.queue_capacity);
  s.eta = get_or<std::uint32_t>(root, w, "eta", s.eta);
  s.seed = get_or<std::uint64_t>(root, w, "seed", s.seed);

  if (auto it = root.find("weights"); it != root.end()) {
    check_keys(*it, w + ".weights", {"be", "nrt"});
    if (it->contains("be")) s.weights.be = parse_weight_pair(it->at("be"), w + ".weights.be");
    if (it->contains("nrt")) s.weights.nrt = parse_weight_pair(it->at("nrt"), w + ".weights.nrt");
  }

  if (auto it = root.find("scheduler"); it != root.end()) {
    auto kind = it->is_string() ? parse_scheduler_kind(it->get<std::string>()) : std::nullopt;
    if (!kind) throw ScenarioError(w + ".scheduler: expected apds, fifo or dfpq");
    s.scheduler = *kind;
  }

  if (auto it = root.find("dfpq"); it != root.end()) {
    check_keys(*it, w + ".dfpq", {"class_weights"});
    if (auto cw = it->find("class_weights"); cw != it->end()) {
      const std::string cww = w + ".dfpq.class_weights";
      if (!cw->is_object()) throw ScenarioError(cww + ": expected an object");
      for (const auto& [key, value] : cw->items()) {
        auto cls = parse_service_class(key);
        if (!cls) throw ScenarioError(cww + "." + key + ": unknown service class");
        s.dfpq.class_weights[tier_index(*cls)] = as_number<double>(value, cww + "." + key);
      }
    }
  }

  const auto& conns = require(root, w, "connections");
  if (!conns.is_array()) throw ScenarioError(w + ".connections: expected an array");
  for (std::size_t i = 0; i < conns.size(); ++i)
    s.connections.push_back(parse_connection(conns[i], w + ".connections[" + std::to_string(i) + "]"));

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
  return s;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json_file(path));
}

inline nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  auto pair = [](const WeightPair& p) {
    return json{{"demand", p.demand()}, {"starvation", p.starvation()}};
  };
  json cw = json::object();
  for (auto c : kAllClasses) cw[std::string(to_string(c))] = s.dfpq.class_weights[tier_index(c)];
  json root{{"link", {{"rate_bps", s.link_rate}}},
            {"frame", {{"duration_us", s.frame_duration}}},
            {"duration", {{"frames", s.num_frames}}},
            {"queue_capacity", s.queue_capacity},
            {"eta", s.eta},
            {"weights", {{"be", pair(s.weights.be)}, {"nrt", pair(s.weights.nrt)}}},
            {"scheduler", std::string(to_string(s.scheduler))},
            {"seed", s.seed},
            {"dfpq", {{"class_weights", cw}}},
            {"connections", json::array()}};
  for (const auto& c : s.connections) {
    json q{{"max_sustained_rate_bps", c.qos.max_sustained_rate},
           {"max_latency_us", c.qos.max_latency},
           {"grant_interval_us", c.qos.grant_interval},
           {"tolerated_jitter_us", c.qos.tolerated_jitter},
           {"packet_size", c.qos.packet_size}};
    if (c.cls != ServiceClass::BE) q["min_reserved_rate_bps"] = c.qos.min_reserved_rate;
    json t{{"model", std::string(to_string(c.traffic.kind))},
           {"mean_rate_bps", c.traffic.mean_rate},
           {"mean_on_us", c.traffic.mean_on},
           {"mean_off_us", c.traffic.mean_off},
           {"seed_stream", c.traffic.seed_stream}};
    root["connections"].push_back(json{{"cid", c.cid},
                                       {"ms", c.ms},
                                       {"class", std::string(to_string(c.cls))},
                                       {"qos", q},
                                       {"traffic", t}});
  }
  return root;
}

/// FNV-1a over the canonical serialisation, as 16 hex digits.
inline std::string scenario_hash(const nlohmann::json& root) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : root.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace dlsched
