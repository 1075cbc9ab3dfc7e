#pragma once

// Run configuration and its flat `key = value` text form.

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "meshfair/error.hpp"
#include "meshfair/mpifa.hpp"
#include "meshfair/topology.hpp"

namespace meshfair {

enum class Scheme : std::uint8_t { Centralized, Hybrid };

// What a malicious node puts in its own report after dropping a packet.
enum class CheatStrategy : std::uint8_t {
  UnderReportInput,  // leave the dropped packet out of I (and OFN)
  Truthful,          // report what was received; flow balance exposes it
};

// How data packets pick their route.
enum class DataRouting : std::uint8_t {
  RandomMinHop,  // uniformly random minimum-hop path per flow
  ShortestDelay, // the same delay-weighted path fairness messages use
};

inline const char* to_string(Scheme s) { return s == Scheme::Centralized ? "centralized" : "hybrid"; }
inline const char* to_string(CheatStrategy s) {
  return s == CheatStrategy::UnderReportInput ? "under_report" : "truthful";
}
inline const char* to_string(DataRouting r) { return r == DataRouting::RandomMinHop ? "min_hop" : "shortest_delay"; }

struct SimConfig {
  // topology
  std::size_t nodes = 200;
  double area_width = 1500.0;
  double area_height = 1500.0;
  double radio_range = 250.0;
  double delay_min = 1.0;
  double delay_max = 10.0;
  std::uint64_t seed = 1;
  int topology_retries = kDefaultTopologyRetries;

  // management
  Scheme scheme = Scheme::Hybrid;
  std::size_t target_zone_size = 40;
  std::size_t min_zone_size = 20;

  // adversary and channel
  double malicious_ratio = 0.3;
  double malicious_drop_prob = 0.8;
  CheatStrategy cheat = CheatStrategy::UnderReportInput;
  double link_failure_prob = 0.1;
  int data_max_attempts = 7;
  int control_max_attempts = 7;

  // traffic
  std::size_t flows_per_node = 12;
  std::size_t packets_per_flow = 1;
  std::uint64_t packet_size = 512;
  DataRouting data_routing = DataRouting::RandomMinHop;

  // timing
  double update_interval = 10.0;
  // A node spends delay_index * bytes / service_unit_bytes on each control
  // message it receives; 0 charges delay_index per message regardless of size.
  double service_unit_bytes = 512.0;
  std::size_t run_length = 100;
  std::size_t sync_period = 10;

  MpifaParams mpifa;
  WireSizes wire;

  bool log_packets = true;

  double density() const { return static_cast<double>(nodes) / (area_width * area_height); }

  void validate() const {
    auto fraction = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(name) + " must be in [0,1]");
    };
    fraction(malicious_ratio, "malicious_ratio");
    fraction(malicious_drop_prob, "malicious_drop_prob");
    fraction(link_failure_prob, "link_failure_prob");
    if (nodes < 2) throw InvalidArgument("nodes must be >= 2");
    if (data_max_attempts < 1 || control_max_attempts < 1) throw InvalidArgument("max attempts must be >= 1");
    if (sync_period < 1) throw InvalidArgument("sync_period must be >= 1");
    if (!(update_interval >= 0.0)) throw InvalidArgument("update_interval must be >= 0");
    if (!(service_unit_bytes >= 0.0)) throw InvalidArgument("service_unit_bytes must be >= 0");
    if (packet_size == 0) throw InvalidArgument("packet_size must be > 0");
    mpifa.validate();
  }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) throw ParseError("bad value for " + key + ": '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("bad boolean for " + key + ": '" + text + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigField {
  std::function<void(SimConfig&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

inline std::string fmt(double v) { return shortest(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

// Ordered: this is also the echo order in log headers.
inline const std::vector<std::pair<std::string, ConfigField>>& config_fields() {
  using C = SimConfig;
  static const std::vector<std::pair<std::string, ConfigField>> fields = [] {
    std::vector<std::pair<std::string, ConfigField>> f;
    auto num = [&f](const char* key, auto C::*member) {
      using T = std::remove_reference_t<decltype(std::declval<C&>().*member)>;
      f.emplace_back(key, ConfigField{[member, key](C& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
                                      [member](const C& c) {
                                        if constexpr (std::is_floating_point_v<T>)
                                          return fmt(static_cast<double>(c.*member));
                                        else if constexpr (std::is_same_v<T, int>)
                                          return fmt(c.*member);
                                        else
                                          return fmt(static_cast<std::uint64_t>(c.*member));
                                      }});
    };
    auto mp = [&f](const char* key, double MpifaParams::*member) {
      f.emplace_back(key, ConfigField{[member, key](C& c, const std::string& v) {
                                        c.mpifa.*member = parse_number<double>(key, v);
                                      },
                                      [member](const C& c) { return fmt(c.mpifa.*member); }});
    };
    auto wire = [&f](const char* key, std::uint64_t WireSizes::*member) {
      f.emplace_back(key, ConfigField{[member, key](C& c, const std::string& v) {
                                        c.wire.*member = parse_number<std::uint64_t>(key, v);
                                      },
                                      [member](const C& c) { return fmt(c.wire.*member); }});
    };
    num("nodes", &C::nodes);
    num("area_width", &C::area_width);
    num("area_height", &C::area_height);
    num("radio_range", &C::radio_range);
    num("delay_min", &C::delay_min);
    num("delay_max", &C::delay_max);
    num("seed", &C::seed);
    num("topology_retries", &C::topology_retries);
    f.emplace_back("scheme", ConfigField{[](C& c, const std::string& v) {
                                           if (v == "centralized")
                                             c.scheme = Scheme::Centralized;
                                           else if (v == "hybrid")
                                             c.scheme = Scheme::Hybrid;
                                           else
                                             throw ParseError("scheme must be centralized or hybrid");
                                         },
                                         [](const C& c) { return std::string(to_string(c.scheme)); }});
    num("target_zone_size", &C::target_zone_size);
    num("min_zone_size", &C::min_zone_size);
    num("malicious_ratio", &C::malicious_ratio);
    num("malicious_drop_prob", &C::malicious_drop_prob);
    f.emplace_back("cheat", ConfigField{[](C& c, const std::string& v) {
                                          if (v == "under_report")
                                            c.cheat = CheatStrategy::UnderReportInput;
                                          else if (v == "truthful")
                                            c.cheat = CheatStrategy::Truthful;
                                          else
                                            throw ParseError("cheat must be under_report or truthful");
                                        },
                                        [](const C& c) { return std::string(to_string(c.cheat)); }});
    num("link_failure_prob", &C::link_failure_prob);
    num("data_max_attempts", &C::data_max_attempts);
    num("control_max_attempts", &C::control_max_attempts);
    num("flows_per_node", &C::flows_per_node);
    num("packets_per_flow", &C::packets_per_flow);
    num("packet_size", &C::packet_size);
    f.emplace_back("data_routing", ConfigField{[](C& c, const std::string& v) {
                                                 if (v == "min_hop")
                                                   c.data_routing = DataRouting::RandomMinHop;
                                                 else if (v == "shortest_delay")
                                                   c.data_routing = DataRouting::ShortestDelay;
                                                 else
                                                   throw ParseError("data_routing must be min_hop or shortest_delay");
                                               },
                                               [](const C& c) { return std::string(to_string(c.data_routing)); }});
    num("update_interval", &C::update_interval);
    num("service_unit_bytes", &C::service_unit_bytes);
    num("run_length", &C::run_length);
    num("sync_period", &C::sync_period);
    mp("penalty", &MpifaParams::penalty);
    mp("decay", &MpifaParams::decay);
    mp("nam_threshold", &MpifaParams::nam_threshold);
    mp("forward_reward", &MpifaParams::forward_reward);
    mp("generation_cost", &MpifaParams::generation_cost);
    mp("min_credit", &MpifaParams::min_credit);
    mp("initial_credit", &MpifaParams::initial_credit);
    wire("header_bytes", &WireSizes::header_bytes);
    wire("per_neighbor_bytes", &WireSizes::per_neighbor_bytes);
    wire("per_listed_node_bytes", &WireSizes::per_listed_node_bytes);
    f.emplace_back("log_packets", ConfigField{[](C& c, const std::string& v) { c.log_packets = parse_bool("log_packets", v); },
                                              [](const C& c) { return std::string(c.log_packets ? "true" : "false"); }});
    return f;
  }();
  return fields;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::config_fields()) keys.push_back(k);
  return keys;
}

inline void set_config_value(SimConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [k, field] : detail::config_fields()) {
    if (k == key) {
      field.set(cfg, detail::trim(value));
      return;
    }
  }
  throw ParseError("unknown config key '" + key + "'");
}

inline std::string get_config_value(const SimConfig& cfg, const std::string& key) {
  for (const auto& [k, field] : detail::config_fields())
    if (k == key) return field.get(cfg);
  throw ParseError("unknown config key '" + key + "'");
}

// Lines are `key = value`; blank lines and `#` comments are ignored. Keys
// not present keep whatever `base` holds.
inline SimConfig parse_config(std::istream& is, SimConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

inline SimConfig load_config(const std::string& path, SimConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return parse_config(in, std::move(base));
}

inline void write_config(std::ostream& os, const SimConfig& cfg, const char* prefix = "") {
  for (const auto& [k, field] : detail::config_fields()) os << prefix << k << " = " << field.get(cfg) << '\n';
}

}  // namespace meshfair
