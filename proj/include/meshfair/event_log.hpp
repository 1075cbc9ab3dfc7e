#pragma once

// Per-run event log. Records are appended in time order and serialize to one
// line each, with a fixed field order per record type:
//
//   packet   k t outcome src dst hops p0,p1,...
//   traffic  k t originated delivered dropped_malicious dropped_link dropped_blacklist refused data_bytes
//   report   k t reporter server own|foreign entries bytes hops transmissions delay delivered
//   notify   k t server target bytes hops transmissions delay delivered
//   border   k t from to bytes transmissions delivered
//   sync     k t zms cms bytes hops transmissions delay delivered
//   decision k t server failures penalized
//   blacklist k t server node malicious
//   cycle    k t server collection_end notify_end
//
// `k` is the update interval (1-based), `t` the absolute simulated time at
// which the record's event completed. `bytes` is the message size; link
// transmissions (retries included) times bytes is what the channel carried.
// The header echoes the configuration and the run's fixed facts as `# ...`
// lines.

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "meshfair/config.hpp"
#include "meshfair/error.hpp"
#include "meshfair/topology.hpp"

namespace meshfair {

enum class PacketOutcome : std::uint8_t { Delivered, DroppedMalicious, DroppedLink, DroppedBlacklist, Refused };

inline const char* to_string(PacketOutcome o) {
  switch (o) {
    case PacketOutcome::Delivered: return "delivered";
    case PacketOutcome::DroppedMalicious: return "dropped_malicious";
    case PacketOutcome::DroppedLink: return "dropped_link";
    case PacketOutcome::DroppedBlacklist: return "dropped_blacklist";
    case PacketOutcome::Refused: return "refused";
  }
  return "?";
}

namespace rec {

// `path` holds the nodes the packet actually reached, source first.
struct Packet {
  PacketOutcome outcome = PacketOutcome::Delivered;
  NodeId src = 0, dst = 0;
  std::vector<NodeId> path;
  friend bool operator==(const Packet&, const Packet&) = default;
};

struct Traffic {
  std::uint64_t originated = 0, delivered = 0, dropped_malicious = 0, dropped_link = 0, dropped_blacklist = 0,
                refused = 0, data_bytes = 0;
  friend bool operator==(const Traffic&, const Traffic&) = default;
};

struct Report {
  NodeId reporter = 0, server = 0;
  bool own = true;
  std::uint64_t entries = 0, bytes = 0, hops = 0, transmissions = 0;
  double delay = 0.0;
  bool delivered = true;
  friend bool operator==(const Report&, const Report&) = default;
};

struct Notify {
  NodeId server = 0, target = 0;
  std::uint64_t bytes = 0, hops = 0, transmissions = 0;
  double delay = 0.0;
  bool delivered = true;
  friend bool operator==(const Notify&, const Notify&) = default;
};

struct Border {
  NodeId from = 0, to = 0;
  std::uint64_t bytes = 0, transmissions = 0;
  bool delivered = true;
  friend bool operator==(const Border&, const Border&) = default;
};

struct Sync {
  NodeId zms = 0, cms = 0;
  std::uint64_t bytes = 0, hops = 0, transmissions = 0;
  double delay = 0.0;
  bool delivered = true;
  friend bool operator==(const Sync&, const Sync&) = default;
};

struct Decision {
  NodeId server = 0;
  std::uint64_t failures = 0, penalized = 0;
  friend bool operator==(const Decision&, const Decision&) = default;
};

struct Blacklist {
  NodeId server = 0, node = 0;
  bool malicious = false;
  friend bool operator==(const Blacklist&, const Blacklist&) = default;
};

struct Cycle {
  NodeId server = 0;
  double collection_end = 0.0, notify_end = 0.0;
  friend bool operator==(const Cycle&, const Cycle&) = default;
};

}  // namespace rec

using RecordBody =
    std::variant<rec::Packet, rec::Traffic, rec::Report, rec::Notify, rec::Border, rec::Sync, rec::Decision,
                 rec::Blacklist, rec::Cycle>;

struct LogRecord {
  std::uint64_t interval = 0;
  double time = 0.0;
  RecordBody body;
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

// Run facts that the header carries alongside the configuration.
struct RunFacts {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  NodeId cms = 0;
  std::vector<NodeId> malicious;            // ascending
  std::vector<NodeId> zone_servers;         // by zone; empty when centralized
  std::vector<std::size_t> zone_sizes;      // by zone
  friend bool operator==(const RunFacts&, const RunFacts&) = default;
};

class EventLog {
 public:
  EventLog() = default;
  EventLog(SimConfig cfg, RunFacts facts) : config_(std::move(cfg)), facts_(std::move(facts)) {}

  const SimConfig& config() const { return config_; }
  const RunFacts& facts() const { return facts_; }
  const std::vector<LogRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  void append(LogRecord r) {
    if (!records_.empty()) {
      const auto& last = records_.back();
      if (r.interval < last.interval || (r.interval == last.interval && r.time < last.time))
        throw InvalidArgument("event log records must be appended in time order");
    }
    records_.push_back(std::move(r));
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  SimConfig config_;
  RunFacts facts_;
  std::vector<LogRecord> records_;
};

namespace detail {

inline void write_ids(std::ostream& os, const std::vector<NodeId>& ids, char sep) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) os << sep;
    os << ids[i];
  }
}

struct RecordWriter {
  std::ostream& os;
  void operator()(const rec::Packet& p) const {
    os << "packet " << to_string(p.outcome) << ' ' << p.src << ' ' << p.dst << ' '
       << (p.path.empty() ? 0 : p.path.size() - 1) << ' ';
    write_ids(os, p.path, ',');
  }
  void operator()(const rec::Traffic& x) const {
    os << "traffic " << x.originated << ' ' << x.delivered << ' ' << x.dropped_malicious << ' ' << x.dropped_link << ' '
       << x.dropped_blacklist << ' ' << x.refused << ' ' << x.data_bytes;
  }
  void operator()(const rec::Report& x) const {
    os << "report " << x.reporter << ' ' << x.server << ' ' << (x.own ? "own" : "foreign") << ' ' << x.entries << ' '
       << x.bytes << ' ' << x.hops << ' ' << x.transmissions << ' ' << shortest(x.delay) << ' ' << x.delivered;
  }
  void operator()(const rec::Notify& x) const {
    os << "notify " << x.server << ' ' << x.target << ' ' << x.bytes << ' ' << x.hops << ' ' << x.transmissions << ' '
       << shortest(x.delay) << ' ' << x.delivered;
  }
  void operator()(const rec::Border& x) const {
    os << "border " << x.from << ' ' << x.to << ' ' << x.bytes << ' ' << x.transmissions << ' ' << x.delivered;
  }
  void operator()(const rec::Sync& x) const {
    os << "sync " << x.zms << ' ' << x.cms << ' ' << x.bytes << ' ' << x.hops << ' ' << x.transmissions << ' '
       << shortest(x.delay) << ' ' << x.delivered;
  }
  void operator()(const rec::Decision& x) const {
    os << "decision " << x.server << ' ' << x.failures << ' ' << x.penalized;
  }
  void operator()(const rec::Blacklist& x) const {
    os << "blacklist " << x.server << ' ' << x.node << ' ' << x.malicious;
  }
  void operator()(const rec::Cycle& x) const {
    os << "cycle " << x.server << ' ' << shortest(x.collection_end) << ' ' << shortest(x.notify_end);
  }
};

}  // namespace detail

// The record type token comes first so the line can be dispatched on it;
// interval and time follow.
inline void write_record(std::ostream& os, const LogRecord& r) {
  std::ostringstream body;
  std::visit(detail::RecordWriter{body}, r.body);
  const std::string b = body.str();
  const auto sp = b.find(' ');
  os << b.substr(0, sp) << ' ' << r.interval << ' ' << detail::shortest(r.time);
  if (sp != std::string::npos) os << b.substr(sp);
  os << '\n';
}

inline void write_event_log(std::ostream& os, const EventLog& log) {
  write_config(os, log.config(), "# ");
  const auto& f = log.facts();
  os << "# nodes " << f.nodes << " edges " << f.edges << " cms " << f.cms << '\n';
  os << "# malicious";
  for (NodeId m : f.malicious) os << ' ' << m;
  os << '\n';
  for (std::size_t z = 0; z < f.zone_servers.size(); ++z)
    os << "# zone " << z << " zms " << f.zone_servers[z] << " size " << f.zone_sizes.at(z) << '\n';
  for (const auto& r : log.records()) write_record(os, r);
}

namespace detail {

class LineReader {
 public:
  explicit LineReader(const std::string& line) : is_(line), line_(line) {}
  template <class T>
  T next() {
    T v{};
    if (!(is_ >> v)) fail();
    return v;
  }
  bool flag() {
    int v = next<int>();
    if (v != 0 && v != 1) fail();
    return v == 1;
  }
  std::string word() { return next<std::string>(); }
  void finish() {
    std::string rest;
    if (is_ >> rest) fail();
  }
  [[noreturn]] void fail() const { throw ParseError("bad event log line: '" + line_ + "'"); }

 private:
  std::istringstream is_;
  std::string line_;
};

inline PacketOutcome parse_outcome(LineReader& in) {
  const auto w = in.word();
  for (auto o : {PacketOutcome::Delivered, PacketOutcome::DroppedMalicious, PacketOutcome::DroppedLink,
                 PacketOutcome::DroppedBlacklist, PacketOutcome::Refused})
    if (w == to_string(o)) return o;
  in.fail();
}

inline std::vector<NodeId> parse_ids(const std::string& text) {
  std::vector<NodeId> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(static_cast<NodeId>(std::stoul(item)));
  return out;
}

inline LogRecord parse_record(const std::string& line) {
  LineReader in(line);
  const auto type = in.word();
  LogRecord r;
  r.interval = in.next<std::uint64_t>();
  r.time = in.next<double>();
  if (type == "packet") {
    rec::Packet p;
    p.outcome = parse_outcome(in);
    p.src = in.next<NodeId>();
    p.dst = in.next<NodeId>();
    const auto hops = in.next<std::size_t>();
    p.path = parse_ids(in.word());
    if (p.path.size() != hops + 1) in.fail();
    r.body = std::move(p);
  } else if (type == "traffic") {
    rec::Traffic x;
    x.originated = in.next<std::uint64_t>();
    x.delivered = in.next<std::uint64_t>();
    x.dropped_malicious = in.next<std::uint64_t>();
    x.dropped_link = in.next<std::uint64_t>();
    x.dropped_blacklist = in.next<std::uint64_t>();
    x.refused = in.next<std::uint64_t>();
    x.data_bytes = in.next<std::uint64_t>();
    r.body = x;
  } else if (type == "report") {
    rec::Report x;
    x.reporter = in.next<NodeId>();
    x.server = in.next<NodeId>();
    const auto kind = in.word();
    if (kind != "own" && kind != "foreign") in.fail();
    x.own = kind == "own";
    x.entries = in.next<std::uint64_t>();
    x.bytes = in.next<std::uint64_t>();
    x.hops = in.next<std::uint64_t>();
    x.transmissions = in.next<std::uint64_t>();
    x.delay = in.next<double>();
    x.delivered = in.flag();
    r.body = x;
  } else if (type == "notify") {
    rec::Notify x;
    x.server = in.next<NodeId>();
    x.target = in.next<NodeId>();
    x.bytes = in.next<std::uint64_t>();
    x.hops = in.next<std::uint64_t>();
    x.transmissions = in.next<std::uint64_t>();
    x.delay = in.next<double>();
    x.delivered = in.flag();
    r.body = x;
  } else if (type == "border") {
    rec::Border x;
    x.from = in.next<NodeId>();
    x.to = in.next<NodeId>();
    x.bytes = in.next<std::uint64_t>();
    x.transmissions = in.next<std::uint64_t>();
    x.delivered = in.flag();
    r.body = x;
  } else if (type == "sync") {
    rec::Sync x;
    x.zms = in.next<NodeId>();
    x.cms = in.next<NodeId>();
    x.bytes = in.next<std::uint64_t>();
    x.hops = in.next<std::uint64_t>();
    x.transmissions = in.next<std::uint64_t>();
    x.delay = in.next<double>();
    x.delivered = in.flag();
    r.body = x;
  } else if (type == "decision") {
    rec::Decision x;
    x.server = in.next<NodeId>();
    x.failures = in.next<std::uint64_t>();
    x.penalized = in.next<std::uint64_t>();
    r.body = x;
  } else if (type == "blacklist") {
    rec::Blacklist x;
    x.server = in.next<NodeId>();
    x.node = in.next<NodeId>();
    x.malicious = in.flag();
    r.body = x;
  } else if (type == "cycle") {
    rec::Cycle x;
    x.server = in.next<NodeId>();
    x.collection_end = in.next<double>();
    x.notify_end = in.next<double>();
    r.body = x;
  } else {
    in.fail();
  }
  in.finish();
  return r;
}

inline void parse_header_line(const std::string& text, SimConfig& cfg, RunFacts& f) {
  if (const auto eq = text.find('='); eq != std::string::npos) {
    set_config_value(cfg, trim(text.substr(0, eq)), text.substr(eq + 1));
    return;
  }
  std::istringstream is(text);
  std::string w;
  is >> w;
  if (w == "nodes") {
    std::string e, c;
    if (!(is >> f.nodes >> e >> f.edges >> c >> f.cms) || e != "edges" || c != "cms")
      throw ParseError("bad header line: '" + text + "'");
  } else if (w == "malicious") {
    NodeId m;
    while (is >> m) f.malicious.push_back(m);
  } else if (w == "zone") {
    std::size_t z = 0, size = 0;
    NodeId zms = 0;
    std::string a, b;
    if (!(is >> z >> a >> zms >> b >> size) || a != "zms" || b != "size" || z != f.zone_servers.size())
      throw ParseError("bad header line: '" + text + "'");
    f.zone_servers.push_back(zms);
    f.zone_sizes.push_back(size);
  } else {
    throw ParseError("bad header line: '" + text + "'");
  }
}

}  // namespace detail

inline EventLog read_event_log(std::istream& is) {
  SimConfig cfg;
  RunFacts facts;
  std::vector<LogRecord> records;
  std::string line;
  bool in_header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!in_header) throw ParseError("header line after records");
      detail::parse_header_line(line.substr(1), cfg, facts);
      continue;
    }
    in_header = false;
    records.push_back(detail::parse_record(line));
  }
  EventLog log(std::move(cfg), std::move(facts));
  for (auto& r : records) log.append(std::move(r));
  return log;
}

}  // namespace meshfair
