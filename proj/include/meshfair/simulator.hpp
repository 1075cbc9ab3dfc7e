#pragma once

// Discrete-event simulation of one community mesh run.
//
// Each update interval has a traffic phase, during which data packets travel
// hop by hop and every node keeps its transaction ledger, followed by the
// fairness exchange: all nodes report at once, each server decides once its
// expected reports have arrived or been lost, then notifies its members.
// Fairness messages share the network: every node is a FIFO server whose
// service time is its delay index, so a message's delay is the path cost
// when the network is idle and grows with contention at busy relays and at
// the server itself. The next interval starts when the last message of the
// exchange has settled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "meshfair/config.hpp"
#include "meshfair/event_log.hpp"
#include "meshfair/mpifa.hpp"
#include "meshfair/rng.hpp"
#include "meshfair/topology.hpp"
#include "meshfair/zoning.hpp"

namespace meshfair {

// One management server: the CMS in centralized mode, or a zone's ZMS.
struct ManagedServer {
  NodeId node = 0;
  ZoneId zone = kNoZone;
  std::vector<NodeId> members;     // ascending
  std::vector<NodeId> associates;  // out-of-zone neighbors of members, ascending
  FairnessServerState state;

  std::size_t listed() const { return members.size() + associates.size(); }
};

namespace detail {

// Route caches for one interval. Views are the distinct blacklist-knowledge
// vectors in use; a route is keyed by destination and view.
class RouteCache {
 public:
  explicit RouteCache(const Topology& t) : t_(&t) {}

  std::uint32_t view(const std::vector<bool>& excluded) {
    auto [it, inserted] = ids_.emplace(excluded, static_cast<std::uint32_t>(views_.size()));
    if (inserted) views_.push_back(&it->first);
    return it->second;
  }
  const std::vector<bool>& view_mask(std::uint32_t v) const { return *views_[v]; }

  const DelayField& delay(NodeId dst, std::uint32_t v) {
    auto key = std::make_pair(dst, v);
    auto it = delay_.find(key);
    if (it == delay_.end()) it = delay_.emplace(key, DelayField(*t_, dst, &view_mask(v))).first;
    return it->second;
  }

  const HopField& hops(NodeId dst, std::uint32_t v) {
    auto key = std::make_pair(dst, v);
    auto it = hops_.find(key);
    if (it == hops_.end()) it = hops_.emplace(key, HopField(*t_, dst, &view_mask(v))).first;
    return it->second;
  }

 private:
  const Topology* t_;
  std::map<std::vector<bool>, std::uint32_t> ids_;
  std::vector<const std::vector<bool>*> views_;
  std::map<std::pair<NodeId, std::uint32_t>, DelayField> delay_;
  std::map<std::pair<NodeId, std::uint32_t>, HopField> hops_;
};

}  // namespace detail

class Simulation {
 public:
  // Everything about a run that is fixed before the first interval.
  struct Scenario {
    Topology topology;
    std::vector<bool> malicious;
    std::optional<ZonePlan> zones;  // hybrid only; built from the topology when absent
  };

  static Scenario make_scenario(const SimConfig& cfg) {
    cfg.validate();
    Scenario sc;
    sc.topology = generate_topology(cfg.nodes, Area{cfg.area_width, cfg.area_height}, cfg.radio_range,
                                    DelayRange{cfg.delay_min, cfg.delay_max}, cfg.seed, cfg.topology_retries);
    const NodeId n = sc.topology.size();
    Rng rng(cfg.seed ^ 0x6d616c6963696f75ULL);
    sc.malicious.assign(n, false);
    const auto bad = static_cast<std::size_t>(std::floor(cfg.malicious_ratio * static_cast<double>(n) + 1e-9));
    std::vector<NodeId> order(n);
    for (NodeId v = 0; v < n; ++v) order[v] = v;
    for (std::size_t i = 0; i < bad; ++i) {
      const auto j = rng.uniform_int(i, n - 1);
      std::swap(order[i], order[j]);
      sc.malicious[order[i]] = true;
    }
    return sc;
  }

  explicit Simulation(const SimConfig& cfg) : Simulation(cfg, make_scenario(cfg)) {}

  Simulation(const SimConfig& cfg, Scenario sc) : cfg_(cfg) {
    cfg_.validate();
    Rng root(cfg_.seed ^ 0x6d65736866616972ULL);
    traffic_rng_ = root.fork(1);
    data_link_rng_ = root.fork(2);
    adversary_rng_ = root.fork(3);
    control_link_rng_ = root.fork(4);

    topo_ = std::move(sc.topology);
    const NodeId n = topo_.size();
    if (!topo_.is_connected()) throw NonConnectedTopology("simulation needs a connected topology");
    malicious_ = std::move(sc.malicious);
    if (malicious_.size() != n) throw InvalidArgument("malicious mask size does not match the topology");

    std::vector<bool> can_host(n);
    for (NodeId v = 0; v < n; ++v) can_host[v] = !malicious_[v];

    std::vector<NodeId> everyone(n);
    for (NodeId v = 0; v < n; ++v) everyone[v] = v;

    home_.assign(n, 0);
    if (cfg_.scheme == Scheme::Centralized) {
      cms_ = best_server(topo_, everyone, can_host);
      ManagedServer s;
      s.node = cms_;
      s.members = everyone;
      s.state = FairnessServerState(cms_, n, s.members, {}, cfg_.mpifa);
      servers_.push_back(std::move(s));
    } else {
      ZonePlan plan = sc.zones ? std::move(*sc.zones) : build_zones(topo_, cfg_.target_zone_size, cfg_.min_zone_size);
      if (plan.assignment.size() != n) throw InvalidArgument("zone plan does not match the topology");
      if (std::count(plan.zms.begin(), plan.zms.end(), kNoNode) > 0 || plan.zms.size() != plan.zone_count())
        plan = select_zms(topo_, std::move(plan), can_host);
      plan_ = std::move(plan);
      std::vector<bool> cms_ok = can_host;
      for (NodeId z : plan_->zms) cms_ok[z] = false;
      cms_ = best_server(topo_, everyone, cms_ok);
      for (ZoneId z = 0; z < plan_->zone_count(); ++z) {
        ManagedServer s;
        s.node = plan_->zms[z];
        s.zone = z;
        s.members = plan_->members[z];
        std::sort(s.members.begin(), s.members.end());
        std::set<NodeId> assoc;
        for (NodeId m : s.members)
          for (NodeId w : topo_.neighbors(m))
            if (plan_->zone_of(w) != z) assoc.insert(w);
        s.associates.assign(assoc.begin(), assoc.end());
        s.state = FairnessServerState(s.node, n, s.members, s.associates, cfg_.mpifa);
        for (NodeId m : s.members) home_[m] = z;
        servers_.push_back(std::move(s));
      }
    }

    // Every node knows its own server; border nodes exchange server
    // locations with their out-of-zone neighbors.
    known_servers_.assign(n, {});
    for (NodeId v = 0; v < n; ++v) {
      known_servers_[v][servers_[home_[v]].zone] = servers_[home_[v]].node;
      if (!plan_) continue;
      for (NodeId w : topo_.neighbors(v))
        if (home_[w] != home_[v]) known_servers_[v][servers_[home_[w]].zone] = servers_[home_[w]].node;
    }

    ledgers_.assign(n, {});
    last_ledgers_.assign(n, {});
    known_blacklist_.assign(n, std::vector<bool>(n, false));
    admitted_.assign(n, true);
    learned_facts_.assign(n, {});
    sequence_.assign(n, 0);
    cms_credit_.assign(n, cfg_.mpifa.initial_credit);
    cms_blacklist_.assign(n, false);

    RunFacts facts;
    facts.nodes = n;
    facts.edges = topo_.edge_count();
    facts.cms = cms_;
    for (NodeId v = 0; v < n; ++v)
      if (malicious_[v]) facts.malicious.push_back(v);
    if (plan_) {
      for (ZoneId z = 0; z < plan_->zone_count(); ++z) {
        facts.zone_servers.push_back(plan_->zms[z]);
        facts.zone_sizes.push_back(plan_->members[z].size());
      }
    }
    log_ = EventLog(cfg_, std::move(facts));
  }

  const SimConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const std::optional<ZonePlan>& zone_plan() const { return plan_; }
  const std::vector<ManagedServer>& servers() const { return servers_; }
  const ManagedServer& home_server(NodeId v) const { return servers_.at(home_.at(v)); }
  NodeId cms() const { return cms_; }
  bool is_malicious(NodeId v) const { return malicious_.at(v); }
  const std::vector<bool>& malicious() const { return malicious_; }
  std::size_t interval() const { return interval_; }
  double clock() const { return clock_; }
  const EventLog& log() const { return log_; }
  EventLog take_log() { return std::move(log_); }

  // Ledgers as they stood at the end of the last traffic phase.
  const std::vector<TransactionLedger>& last_ledgers() const { return last_ledgers_; }
  // Failures each server found in the last interval, by server index.
  const std::vector<std::vector<Failure>>& last_failures() const { return last_failures_; }

  bool knows_blacklisted(NodeId observer, NodeId v) const { return known_blacklist_.at(observer).at(v); }
  const std::map<ZoneId, NodeId>& known_servers(NodeId v) const { return known_servers_.at(v); }

  // Blacklisted by the server that manages the node.
  bool blacklisted(NodeId v) const { return home_server(v).state.is_blacklisted(v); }
  std::vector<NodeId> blacklisted_nodes() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < topo_.size(); ++v)
      if (blacklisted(v)) out.push_back(v);
    return out;
  }

  // What the CMS holds. In centralized mode that is the live state; in
  // hybrid mode it is the union of what zone servers have synced so far.
  bool cms_blacklisted(NodeId v) const {
    return cfg_.scheme == Scheme::Centralized ? servers_[0].state.is_blacklisted(v) : cms_blacklist_.at(v);
  }
  double cms_credit(NodeId v) const {
    return cfg_.scheme == Scheme::Centralized ? servers_[0].state.credit(v) : cms_credit_.at(v);
  }

  void run_interval() {
    const std::uint64_t k = ++interval_;
    round_records_.clear();
    routes_ = std::make_unique<detail::RouteCache>(topo_);
    traffic_phase(k);
    exchange_phase(k);
    if (cfg_.scheme == Scheme::Hybrid && k % cfg_.sync_period == 0) sync_zms_to_cms();
    flush_records();
    routes_.reset();
  }

  // Each zone server sends its credit deltas and blacklist additions since
  // its last successful sync to the CMS, in a quiet network.
  void sync_zms_to_cms() {
    if (cfg_.scheme != Scheme::Hybrid) throw InvalidArgument("sync is only defined for the hybrid scheme");
    const bool own_round = routes_ != nullptr;
    if (!own_round) routes_ = std::make_unique<detail::RouteCache>(topo_);
    const std::uint64_t k = interval_;
    Engine engine(*this, clock_);
    for (std::size_t s = 0; s < servers_.size(); ++s) {
      auto& st = servers_[s].state;
      Message m;
      m.kind = MessageKind::Sync;
      m.server = s;
      m.path = control_route(servers_[s].node, cms_);
      m.bytes = cfg_.wire.notification_bytes(st.pending_credit_deltas().size() + st.pending_blacklist().size());
      m.credit_deltas = st.pending_credit_deltas();
      m.facts = st.pending_blacklist();
      engine.send(std::move(m), clock_);
    }
    engine.run([&](Message& m, double t, bool delivered) {
      auto& st = servers_[m.server].state;
      if (delivered) {
        for (const auto& [v, d] : m.credit_deltas) cms_credit_[v] += d;
        for (NodeId v : m.facts) cms_blacklist_[v] = true;
        for (const auto& [v, d] : m.credit_deltas) {
          auto& pending = st.pending_credit_deltas();
          pending[v] -= d;
          if (pending[v] == 0.0) pending.erase(v);
        }
        auto& pb = st.pending_blacklist();
        pb.erase(pb.begin(), pb.begin() + static_cast<std::ptrdiff_t>(std::min(pb.size(), m.facts.size())));
      }
      rec::Sync r{servers_[m.server].node, cms_, m.bytes, m.path.size() - 1, m.transmissions, t - m.sent, delivered};
      round_records_.push_back({k, t, r});
      clock_ = std::max(clock_, t);
    });
    if (!own_round) {
      flush_records();
      routes_.reset();
    }
  }

  void run() {
    for (std::size_t i = 0; i < cfg_.run_length; ++i) run_interval();
  }

 private:
  enum class MessageKind : std::uint8_t { Report, Notify, Border, Sync };

  struct Message {
    MessageKind kind = MessageKind::Report;
    std::size_t server = 0;
    std::vector<NodeId> path;
    std::size_t pos = 0;
    std::uint64_t bytes = 0;
    std::uint64_t transmissions = 0;
    double sent = 0.0;
    // payloads
    FairnessReport report;
    std::vector<NodeId> facts;
    std::map<NodeId, double> credit_deltas;
    bool admitted = true;
  };

  // FIFO-queue message engine for one exchange. Sources are not charged;
  // every later node on the path serves the message for its delay index
  // (scaled by message size when service_unit_bytes is set), plus one more
  // service time per link retry it has to make.
  class Engine {
   public:
    using Handler = std::function<void(Message&, double, bool)>;

    Engine(Simulation& sim, double start) : sim_(sim), busy_until_(sim.topo_.size(), start) {}

    void send(Message m, double t) {
      m.sent = t;
      m.pos = 0;
      msgs_.push_back(std::move(m));
      push(t, msgs_.size() - 1, Step::Arrive);
    }

    void decide_at(double t, std::size_t server) { decisions_.push({t, seq_++, server}); }

    void run(const Handler& on_done, const std::function<void(std::size_t, double)>& on_decide = {}) {
      while (!events_.empty() || !decisions_.empty()) {
        // Decisions fire before message events at the same instant.
        if (!decisions_.empty() && (events_.empty() || !(events_.top().time < decisions_.top().time))) {
          auto d = decisions_.top();
          decisions_.pop();
          on_decide(d.id, d.time);
          continue;
        }
        auto e = events_.top();
        events_.pop();
        Message& m = msgs_[e.id];
        if (e.step == Step::Done || e.step == Step::Lost) {
          on_done(m, e.time, e.step == Step::Done);
          continue;
        }
        const NodeId v = m.path[m.pos];
        const bool last = m.pos + 1 == m.path.size();
        double t = e.time;
        const double unit = sim_.cfg_.service_unit_bytes;
        const double d = sim_.topo_.delay_index(v) * (unit > 0.0 ? static_cast<double>(m.bytes) / unit : 1.0);
        if (m.pos > 0) {
          t = std::max(t, busy_until_[v]) + d;
          busy_until_[v] = t;
        }
        if (last) {
          push(t, e.id, Step::Done);
          continue;
        }
        int attempts = 0;
        bool ok = false;
        while (attempts < sim_.cfg_.control_max_attempts && !ok) {
          ++attempts;
          ok = !sim_.control_link_rng_.bernoulli(sim_.cfg_.link_failure_prob);
        }
        m.transmissions += static_cast<std::uint64_t>(attempts);
        const double retry = d * (attempts - 1);
        if (m.pos > 0) busy_until_[v] += retry;
        t += retry;
        if (!ok) {
          push(t, e.id, Step::Lost);
          continue;
        }
        ++m.pos;
        push(t, e.id, Step::Arrive);
      }
    }

   private:
    enum class Step : std::uint8_t { Arrive, Done, Lost };
    struct Event {
      double time;
      std::uint64_t seq;
      std::size_t id;
      Step step;
      bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };
    struct Decision {
      double time;
      std::uint64_t seq;
      std::size_t id;
      bool operator>(const Decision& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    void push(double t, std::size_t id, Step s) { events_.push({t, seq_++, id, s}); }

    Simulation& sim_;
    std::vector<double> busy_until_;
    std::deque<Message> msgs_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::priority_queue<Decision, std::vector<Decision>, std::greater<>> decisions_;
    std::uint64_t seq_ = 0;
  };

  // ------------------------------------------------------------------
  // traffic

  void traffic_phase(std::uint64_t k) {
    const NodeId n = topo_.size();
    rec::Traffic summary;
    std::vector<NodeId> candidates;
    for (NodeId src = 0; src < n; ++src) {
      if (!admitted_[src] || known_blacklist_[src][src]) continue;
      const auto& known = known_blacklist_[src];
      candidates.clear();
      for (NodeId v = 0; v < n; ++v)
        if (v != src && !known[v]) candidates.push_back(v);
      if (candidates.empty()) continue;
      const auto view = routes_->view(known);
      for (std::size_t f = 0; f < cfg_.flows_per_node; ++f) {
        const NodeId dst = candidates[traffic_rng_.uniform_int(std::size_t{0}, candidates.size() - 1)];
        std::vector<NodeId> path;
        if (cfg_.data_routing == DataRouting::RandomMinHop) {
          const auto& field = routes_->hops(dst, view);
          path = field.sample(topo_, src, traffic_rng_, &routes_->view_mask(view)).nodes;
        } else {
          const auto& field = routes_->delay(dst, view);
          if (field.reachable(src)) path = field.trace(topo_, src, &routes_->view_mask(view)).nodes;
        }
        if (path.size() < 2) continue;
        for (std::size_t p = 0; p < cfg_.packets_per_flow; ++p) forward_packet(k, path, summary);
      }
    }
    round_records_.push_back({k, clock_, summary});
    for (NodeId v = 0; v < n; ++v) {
      last_ledgers_[v] = ledgers_[v];
    }
  }

  void forward_packet(std::uint64_t k, const std::vector<NodeId>& path, rec::Traffic& summary) {
    const NodeId src = path.front(), dst = path.back();
    ++summary.originated;
    rec::Packet pk{PacketOutcome::Delivered, src, dst, {src}};
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const NodeId u = path[i], w = path[i + 1];
      if (i > 0) {
        const auto& known = known_blacklist_[u];
        if (!malicious_[u] && (known[w] || known[src] || known[dst])) {
          ledgers_[u].at(path[i - 1]).terminated++;
          pk.outcome = PacketOutcome::DroppedBlacklist;
          break;
        }
      }
      auto& out = ledgers_[u].at(w);
      out.output++;
      if (i == 0) out.generated++;
      bool ok = false;
      for (int a = 0; a < cfg_.data_max_attempts && !ok; ++a) {
        summary.data_bytes += cfg_.packet_size;
        ok = !data_link_rng_.bernoulli(cfg_.link_failure_prob);
      }
      if (!ok) {
        pk.outcome = PacketOutcome::DroppedLink;
        break;
      }
      pk.path.push_back(w);
      // An honest receiver ignores frames from a node it knows is blacklisted.
      if (!malicious_[w] && known_blacklist_[w][u]) {
        pk.outcome = PacketOutcome::DroppedBlacklist;
        break;
      }
      if (malicious_[w] && w != dst && adversary_rng_.bernoulli(cfg_.malicious_drop_prob)) {
        if (cfg_.cheat == CheatStrategy::Truthful) {
          auto& in = ledgers_[w].at(u);
          in.input++;
          if (i == 0) in.from_origin++;
        }
        pk.outcome = PacketOutcome::DroppedMalicious;
        break;
      }
      auto& in = ledgers_[w].at(u);
      in.input++;
      if (i == 0) in.from_origin++;
      if (w == dst) {
        in.terminated++;
        pk.outcome = admitted_[w] ? PacketOutcome::Delivered : PacketOutcome::Refused;
      }
    }
    switch (pk.outcome) {
      case PacketOutcome::Delivered: ++summary.delivered; break;
      case PacketOutcome::DroppedMalicious: ++summary.dropped_malicious; break;
      case PacketOutcome::DroppedLink: ++summary.dropped_link; break;
      case PacketOutcome::DroppedBlacklist: ++summary.dropped_blacklist; break;
      case PacketOutcome::Refused: ++summary.refused; break;
    }
    if (cfg_.log_packets) round_records_.push_back({k, clock_, std::move(pk)});
  }

  // ------------------------------------------------------------------
  // fairness exchange

  std::vector<NodeId> control_route(NodeId src, NodeId dst) {
    if (src == dst) return {src};
    auto mask = known_blacklist_[src];
    mask[src] = false;
    mask[dst] = false;
    const auto view = routes_->view(mask);
    const auto& field = routes_->delay(dst, view);
    if (!field.reachable(src)) {
      // Knowledge has cut the node off; fall back to the full graph.
      const auto open = routes_->view(std::vector<bool>(topo_.size(), false));
      return routes_->delay(dst, open).trace(topo_, src).nodes;
    }
    return field.trace(topo_, src, &routes_->view_mask(view)).nodes;
  }

  void exchange_phase(std::uint64_t k) {
    const NodeId n = topo_.size();
    const double start = clock_ + cfg_.update_interval;
    Engine engine(*this, start);

    std::vector<std::size_t> expected(servers_.size(), 0);
    std::vector<std::vector<FairnessReport>> inbox(servers_.size());
    std::vector<double> collection_end(servers_.size(), start);
    std::vector<double> notify_end(servers_.size(), start);
    last_failures_.assign(servers_.size(), {});

    auto server_index_of = [&](NodeId node) -> std::size_t {
      for (std::size_t s = 0; s < servers_.size(); ++s)
        if (servers_[s].node == node) return s;
      throw InvalidArgument("not a server node");
    };

    for (NodeId v = 0; v < n; ++v) {
      const auto& home = servers_[home_[v]];
      const TransactionLedger ledger = std::move(ledgers_[v]);
      ledgers_[v] = {};
      if (home.state.is_blacklisted(v)) continue;
      const std::uint64_t seq = ++sequence_[v];

      Message own;
      own.kind = MessageKind::Report;
      own.server = home_[v];
      own.path = control_route(v, home.node);
      own.report = FairnessReport{v, home.node, seq, true, ledger, 0};
      own.facts = learned_facts_[v];
      own.bytes = cfg_.wire.report_bytes(ledger.entries().size()) + cfg_.wire.per_listed_node_bytes * own.facts.size();
      own.report.message_size = own.bytes;
      ++expected[own.server];
      engine.send(std::move(own), start);

      if (!plan_) continue;
      std::map<ZoneId, TransactionLedger> foreign;
      for (const auto& [w, c] : ledger.entries())
        if (home_[w] != home_[v]) foreign[servers_[home_[w]].zone].at(w) = c;
      for (auto& [z, part] : foreign) {
        const auto it = known_servers_[v].find(z);
        if (it == known_servers_[v].end()) continue;
        Message m;
        m.kind = MessageKind::Report;
        m.server = server_index_of(it->second);
        m.path = control_route(v, it->second);
        m.bytes = cfg_.wire.report_bytes(part.entries().size());
        m.report = FairnessReport{v, it->second, seq, false, std::move(part), m.bytes};
        ++expected[m.server];
        engine.send(std::move(m), start);
      }
    }
    for (std::size_t s = 0; s < servers_.size(); ++s)
      if (expected[s] == 0) engine.decide_at(start, s);

    double settled = start;
    auto on_done = [&](Message& m, double t, bool delivered) {
      settled = std::max(settled, t);
      const std::size_t s = m.server;
      switch (m.kind) {
        case MessageKind::Report: {
          const NodeId reporter = m.report.reporter;
          rec::Report r{reporter, servers_[s].node, m.report.full, m.report.snapshot.entries().size(), m.bytes,
                        m.path.size() - 1, m.transmissions, t - m.sent, delivered};
          if (delivered) {
            if (m.report.full) {
              for (NodeId f : m.facts) servers_[s].state.mark_removed(f);
              auto& lf = learned_facts_[reporter];
              for (NodeId f : m.facts) lf.erase(std::remove(lf.begin(), lf.end(), f), lf.end());
            }
            inbox[s].push_back(std::move(m.report));
          }
          round_records_.push_back({k, t, r});
          collection_end[s] = std::max(collection_end[s], t);
          if (--expected[s] == 0) engine.decide_at(t, s);
          break;
        }
        case MessageKind::Notify: {
          const NodeId target = m.path.back();
          if (delivered) {
            for (NodeId b : servers_[s].state.blacklist()) known_blacklist_[target][b] = true;
            admitted_[target] = m.admitted;
            if (plan_ && !m.facts.empty()) {
              for (NodeId w : topo_.neighbors(target)) {
                if (home_[w] == home_[target] || known_blacklist_[target][w]) continue;
                Message b;
                b.kind = MessageKind::Border;
                b.server = s;
                b.path = {target, w};
                b.facts = m.facts;
                b.bytes = cfg_.wire.notification_bytes(m.facts.size());
                engine.send(std::move(b), t);
              }
            }
          }
          round_records_.push_back(
              {k, t, rec::Notify{servers_[s].node, target, m.bytes, m.path.size() - 1, m.transmissions, t - m.sent, delivered}});
          notify_end[s] = std::max(notify_end[s], t);
          break;
        }
        case MessageKind::Border: {
          const NodeId to = m.path.back();
          if (delivered) {
            for (NodeId f : m.facts) {
              if (known_blacklist_[to][f]) continue;
              known_blacklist_[to][f] = true;
              learned_facts_[to].push_back(f);
            }
          }
          round_records_.push_back({k, t, rec::Border{m.path.front(), to, m.bytes, m.transmissions, delivered}});
          notify_end[s] = std::max(notify_end[s], t);
          break;
        }
        case MessageKind::Sync: break;
      }
    };

    auto on_decide = [&](std::size_t s, double t) {
      auto& srv = servers_[s];
      auto& st = srv.state;
      std::sort(inbox[s].begin(), inbox[s].end(),
                [](const FairnessReport& a, const FairnessReport& b) { return a.reporter < b.reporter; });
      auto failures = verify_reports(st, topo_, inbox[s]);
      apply_penalties(st, failures);
      update_credits(st, inbox[s]);
      const auto fresh = refresh_blacklist(st);
      std::set<NodeId> penalized;
      for (const auto& f : failures) {
        penalized.insert(f.a);
        penalized.insert(f.b);
      }
      round_records_.push_back({k, t, rec::Decision{srv.node, failures.size(), penalized.size()}});
      for (NodeId b : fresh) round_records_.push_back({k, t, rec::Blacklist{srv.node, b, malicious_[b]}});
      last_failures_[s] = std::move(failures);
      for (NodeId b : st.blacklist()) known_blacklist_[srv.node][b] = true;
      collection_end[s] = std::max(collection_end[s], t);
      notify_end[s] = std::max(notify_end[s], t);

      const auto bytes = cfg_.wire.notification_bytes(srv.listed());
      for (NodeId m : srv.members) {
        if (st.is_blacklisted(m)) continue;
        Message note;
        note.kind = MessageKind::Notify;
        note.server = s;
        note.path = control_route(srv.node, m);
        note.bytes = bytes;
        note.admitted = admit_traffic(st, m);
        note.facts = fresh;
        engine.send(std::move(note), t);
      }
      inbox[s].clear();
    };

    engine.run(on_done, on_decide);

    for (std::size_t s = 0; s < servers_.size(); ++s) {
      round_records_.push_back({k, notify_end[s], rec::Cycle{servers_[s].node, collection_end[s], notify_end[s]}});
      settled = std::max(settled, notify_end[s]);
    }
    clock_ = settled;
  }

  void flush_records() {
    std::stable_sort(round_records_.begin(), round_records_.end(),
                     [](const LogRecord& a, const LogRecord& b) { return a.time < b.time; });
    for (auto& r : round_records_) log_.append(std::move(r));
    round_records_.clear();
  }

  SimConfig cfg_;
  Topology topo_;
  std::vector<bool> malicious_;
  std::optional<ZonePlan> plan_;
  std::vector<ManagedServer> servers_;
  std::vector<std::size_t> home_;  // node -> index into servers_
  NodeId cms_ = 0;

  std::vector<TransactionLedger> ledgers_;
  std::vector<TransactionLedger> last_ledgers_;
  std::vector<std::vector<Failure>> last_failures_;
  std::vector<std::vector<bool>> known_blacklist_;
  std::vector<bool> admitted_;
  std::vector<std::vector<NodeId>> learned_facts_;
  std::vector<std::map<ZoneId, NodeId>> known_servers_;
  std::vector<std::uint64_t> sequence_;
  std::vector<double> cms_credit_;
  std::vector<bool> cms_blacklist_;

  Rng traffic_rng_{0}, data_link_rng_{0}, adversary_rng_{0}, control_link_rng_{0};
  std::unique_ptr<detail::RouteCache> routes_;
  std::vector<LogRecord> round_records_;
  EventLog log_;
  std::size_t interval_ = 0;
  double clock_ = 0.0;
};

inline EventLog run(const SimConfig& cfg) {
  Simulation sim(cfg);
  sim.run();
  return sim.take_log();
}

}  // namespace meshfair
