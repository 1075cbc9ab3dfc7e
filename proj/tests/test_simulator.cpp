#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "meshfair/metrics.hpp"
#include "meshfair/simulator.hpp"

using namespace meshfair;

namespace {

SimConfig small(Scheme s, std::size_t n = 60, std::uint64_t seed = 3) {
  SimConfig c;
  c.scheme = s;
  c.nodes = n;
  c.area_width = c.area_height = std::sqrt(static_cast<double>(n) / 1e-4);
  c.target_zone_size = 20;
  c.min_zone_size = 10;
  c.seed = seed;
  c.run_length = 10;
  return c;
}

std::string text(const EventLog& log) {
  std::ostringstream os;
  write_event_log(os, log);
  return os.str();
}

template <class T>
std::vector<std::pair<const LogRecord*, const T*>> records_of(const EventLog& log) {
  std::vector<std::pair<const LogRecord*, const T*>> out;
  for (const auto& r : log.records())
    if (const auto* x = std::get_if<T>(&r.body)) out.emplace_back(&r, x);
  return out;
}

}  // namespace

TEST_CASE("centralized mode has one server over every node") {
  Simulation sim(small(Scheme::Centralized));
  REQUIRE(sim.servers().size() == 1);
  CHECK(sim.servers()[0].members.size() == sim.topology().size());
  CHECK(sim.servers()[0].node == sim.cms());
  CHECK_FALSE(sim.is_malicious(sim.cms()));
  CHECK_FALSE(sim.zone_plan().has_value());
}

TEST_CASE("malicious set size and the zero ratio") {
  auto c = small(Scheme::Hybrid);
  Simulation a(c);
  CHECK(std::count(a.malicious().begin(), a.malicious().end(), true) == 18);
  c.malicious_ratio = 0;
  Simulation b(c);
  CHECK(std::count(b.malicious().begin(), b.malicious().end(), true) == 0);
  CHECK(b.log().facts().malicious.empty());
}

TEST_CASE("200 nodes with a target of 50 form four zones") {
  SimConfig c;
  c.target_zone_size = 50;
  c.min_zone_size = 25;
  Simulation sim(c);
  REQUIRE(sim.zone_plan());
  CHECK(sim.zone_plan()->zone_count() == 4);
  std::size_t total = 0;
  for (const auto& s : sim.servers()) {
    total += s.members.size();
    CHECK(s.members.size() >= 25);
    CHECK_FALSE(sim.is_malicious(s.node));
    CHECK(sim.zone_plan()->zone_of(s.node) == s.zone);
  }
  CHECK(total == 200);
  CHECK(std::find(sim.zone_plan()->zms.begin(), sim.zone_plan()->zms.end(), sim.cms()) == sim.zone_plan()->zms.end());
}

TEST_CASE("every node knows its server and its out-of-zone neighbors' servers") {
  Simulation sim(small(Scheme::Hybrid));
  const auto& plan = *sim.zone_plan();
  for (NodeId v = 0; v < sim.topology().size(); ++v) {
    CHECK(sim.known_servers(v).at(plan.zone_of(v)) == plan.zms[plan.zone_of(v)]);
    for (NodeId w : sim.topology().neighbors(v)) CHECK(sim.known_servers(v).at(plan.zone_of(w)) == plan.zms[plan.zone_of(w)]);
  }
}

TEST_CASE("honest lossless network delivers everything and finds nothing") {
  for (Scheme s : {Scheme::Centralized, Scheme::Hybrid}) {
    auto c = small(s, 40);
    c.malicious_ratio = 0;
    c.link_failure_prob = 0;
    Simulation sim(c);
    sim.run();
    for (const auto& [r, t] : records_of<rec::Traffic>(sim.log())) {
      // Nodes short of credit refuse what they are sent; nothing else is lost.
      CHECK(t->originated > 0);
      CHECK(t->delivered + t->refused == t->originated);
    }
    CHECK(records_of<rec::Traffic>(sim.log()).front().second->refused == 0);
    for (const auto& [r, d] : records_of<rec::Decision>(sim.log())) CHECK(d->failures == 0);
    CHECK(sim.blacklisted_nodes().empty());
  }
}

TEST_CASE("a dropping relay on a line is caught from the first interval") {
  auto t = Topology::from_edges({1, 1, 1}, {{0, 1}, {1, 2}});
  SimConfig c;
  c.scheme = Scheme::Centralized;
  c.nodes = 3;
  c.malicious_drop_prob = 1.0;
  c.link_failure_prob = 0;
  c.run_length = 1;
  Simulation sim(c, {t, {false, true, false}, std::nullopt});
  sim.run_interval();
  std::size_t through = 0;
  for (const auto& [r, p] : records_of<rec::Packet>(sim.log())) {
    if ((p->src == 0 && p->dst == 2) || (p->src == 2 && p->dst == 0)) {
      ++through;
      CHECK(p->outcome == PacketOutcome::DroppedMalicious);
    }
  }
  CHECK(through > 0);
  const auto& f = sim.last_failures()[0];
  CHECK(std::any_of(f.begin(), f.end(), [](const Failure& x) { return x.test == Test::OutputMatchesInput; }));
  for (const auto& x : f) CHECK((x.a == 1 || x.b == 1));
}

TEST_CASE("a border node reports to its own and each transacted foreign server") {
  // Node 0 touches zones 1, 2 and 3 besides its own.
  auto t = Topology::from_edges({1, 1, 1, 1, 1, 1, 1, 1}, {{0, 1}, {0, 2}, {2, 3}, {0, 4}, {4, 5}, {0, 6}, {6, 7}});
  ZonePlan plan;
  plan.assignment = {0, 0, 1, 1, 2, 2, 3, 3};
  plan.members = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  plan.zms = {1, 3, 5, 7};
  SimConfig c;
  c.nodes = 8;
  c.malicious_ratio = 0;
  c.link_failure_prob = 0;
  c.flows_per_node = 10;
  Simulation sim(c, {t, std::vector<bool>(8, false), plan});
  sim.run_interval();
  std::set<NodeId> servers;
  std::size_t reports = 0;
  for (const auto& [r, x] : records_of<rec::Report>(sim.log())) {
    if (x->reporter != 0) continue;
    ++reports;
    servers.insert(x->server);
    CHECK(x->own == (x->server == 1));
    if (!x->own) CHECK(x->entries == 1);
  }
  CHECK(reports == 4);
  CHECK(servers == std::set<NodeId>{1, 3, 5, 7});
  // A leaf with no foreign neighbors reports once.
  std::size_t leaf = 0;
  for (const auto& [r, x] : records_of<rec::Report>(sim.log())) leaf += x->reporter == 7;
  CHECK(leaf == 1);
}

TEST_CASE("honest ledgers balance every interval") {
  for (Scheme s : {Scheme::Centralized, Scheme::Hybrid}) {
    Simulation sim(small(s));
    for (int k = 0; k < 8; ++k) {
      sim.run_interval();
      for (NodeId v = 0; v < sim.topology().size(); ++v) {
        if (sim.is_malicious(v)) continue;
        const auto& l = sim.last_ledgers()[v];
        REQUIRE(forwarded_count(l) == forwarded_count_from_input(l));
        for (const auto& [w, cnt] : l.entries()) {
          CHECK(cnt.generated <= cnt.output);
          CHECK(cnt.from_origin <= cnt.input);
          CHECK(cnt.terminated <= cnt.input);
        }
      }
    }
  }
}

TEST_CASE("hybrid reports never go to the central server") {
  auto log = run(small(Scheme::Hybrid, 120));
  const NodeId cms = log.facts().cms;
  std::size_t n = 0;
  for (const auto& [r, x] : records_of<rec::Report>(log)) {
    CHECK(x->server != cms);
    ++n;
  }
  CHECK(n > 0);
  for (const auto& [r, x] : records_of<rec::Sync>(log)) CHECK(x->cms == cms);
}

TEST_CASE("hybrid report hop counts do not grow with the network") {
  auto hops = [](std::size_t n) {
    SimConfig c;
    c.nodes = n;
    c.area_width = c.area_height = std::sqrt(static_cast<double>(n) / 1e-4);
    c.run_length = 5;
    c.log_packets = false;
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      c.seed = seed;
      sum += compute_metrics(run(c)).mean_report_hops;
    }
    return sum / 5;
  };
  const double h80 = hops(80), h200 = hops(200);
  CHECK(h200 <= 1.25 * h80);
  CHECK(h200 >= 0.75 * h80);
}

TEST_CASE("blacklisting always follows failing evidence") {
  for (Scheme s : {Scheme::Centralized, Scheme::Hybrid}) {
    auto c = small(s, 80);
    c.mpifa.nam_threshold = 3;
    Simulation sim(c);
    std::vector<std::set<NodeId>> implicated(sim.servers().size());
    std::vector<std::size_t> seen(sim.servers().size(), 0);
    for (int k = 0; k < 20; ++k) {
      sim.run_interval();
      for (std::size_t i = 0; i < sim.servers().size(); ++i) {
        for (const auto& f : sim.last_failures()[i]) {
          implicated[i].insert(f.a);
          implicated[i].insert(f.b);
        }
        const auto& bl = sim.servers()[i].state.blacklist();
        for (std::size_t j = seen[i]; j < bl.size(); ++j) CHECK(implicated[i].count(bl[j]));
        REQUIRE(bl.size() >= seen[i]);
        seen[i] = bl.size();
      }
    }
    std::size_t total = 0;
    for (auto x : seen) total += x;
    CHECK(total > 0);
  }
}

TEST_CASE("once all honest neighbors know, a blacklisted node carries no traffic") {
  for (Scheme s : {Scheme::Centralized, Scheme::Hybrid}) {
    auto c = small(s, 80);
    c.mpifa.nam_threshold = 3;
    Simulation sim(c);
    const auto& t = sim.topology();
    std::size_t checked = 0;
    for (int k = 0; k < 20; ++k) {
      std::vector<bool> isolated(t.size(), false);
      for (NodeId v = 0; v < t.size(); ++v) {
        if (!sim.blacklisted(v)) continue;
        bool all = true;
        for (NodeId w : t.neighbors(v))
          if (!sim.is_malicious(w) && !sim.knows_blacklisted(w, v)) all = false;
        isolated[v] = all;
      }
      const auto before = sim.log().records().size();
      sim.run_interval();
      const auto& recs = sim.log().records();
      for (std::size_t i = before; i < recs.size(); ++i) {
        const auto* p = std::get_if<rec::Packet>(&recs[i].body);
        if (!p) continue;
        for (std::size_t j = 1; j < p->path.size(); ++j) {
          if (!isolated[p->path[j]] || sim.is_malicious(p->path[j - 1])) continue;
          FAIL_CHECK("packet reached isolated node " << p->path[j]);
        }
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("zone blacklists reach the central server only at sync") {
  auto c = small(Scheme::Hybrid, 80);
  c.mpifa.nam_threshold = 3;
  c.sync_period = 5;
  c.link_failure_prob = 0;
  Simulation sim(c);
  std::set<NodeId> at_sync;
  bool saw_pending = false;
  for (std::size_t k = 1; k <= 20; ++k) {
    sim.run_interval();
    const auto now = sim.blacklisted_nodes();
    if (k % 5 == 0) at_sync = {now.begin(), now.end()};
    for (NodeId v : now) {
      CHECK(sim.cms_blacklisted(v) == (at_sync.count(v) > 0));
      if (!at_sync.count(v)) saw_pending = true;
    }
  }
  CHECK(saw_pending);
  CHECK_THROWS_AS(Simulation(small(Scheme::Centralized)).sync_zms_to_cms(), InvalidArgument);
}

TEST_CASE("an empty sync carries only a header") {
  auto c = small(Scheme::Hybrid);
  c.malicious_ratio = 0;
  c.link_failure_prob = 0;
  c.mpifa.generation_cost = 1;
  c.sync_period = 1000;
  Simulation sim(c);
  sim.sync_zms_to_cms();
  auto syncs = records_of<rec::Sync>(sim.log());
  REQUIRE(syncs.size() == sim.servers().size());
  for (const auto& [r, x] : syncs) CHECK(x->bytes == c.wire.header_bytes);
}

TEST_CASE("runs are deterministic") {
  for (Scheme s : {Scheme::Centralized, Scheme::Hybrid}) {
    auto c = small(s, 70, 11);
    auto a = run(c), b = run(c);
    CHECK(a == b);
    CHECK(text(a) == text(b));
    CHECK(compute_metrics(a) == compute_metrics(b));
  }
}

TEST_CASE("a zero-length run has a header and no records") {
  auto c = small(Scheme::Hybrid);
  c.run_length = 0;
  auto log = run(c);
  CHECK(log.empty());
  CHECK(log.facts().nodes == 60);
  CHECK(log.facts().zone_servers.size() == log.facts().zone_sizes.size());
  CHECK_THROWS_AS(compute_metrics(log), EmptyLog);
}

TEST_CASE("time moves forward across intervals") {
  Simulation sim(small(Scheme::Centralized));
  double last = sim.clock();
  for (int k = 0; k < 5; ++k) {
    sim.run_interval();
    CHECK(sim.clock() > last + sim.config().update_interval - 1e-9);
    last = sim.clock();
  }
  CHECK(sim.interval() == 5);
}
