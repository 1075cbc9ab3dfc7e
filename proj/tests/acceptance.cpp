// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "meshfair/metrics.hpp"
#include "meshfair/simulator.hpp"
#include "meshfair/sweep.hpp"

using namespace meshfair;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s C%d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Runs a check, turning an exception into a failure line.
void criterion(int id, const std::string& name, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail += std::string(" exception: ") + e.what();
  }
  report(id, name, ok, detail);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const SweepRow& row(const SweepTable& t, Scheme s, double x) {
  for (const auto& r : t.rows)
    if (r.scheme == s && r.x == x) return r;
  throw InvalidArgument("no sweep row");
}

using Metric = Stat SweepRow::*;

double mean(const SweepTable& t, Scheme s, double x, Metric m) { return (row(t, s, x).*m).mean; }

double gain(const SweepTable& t, double x, Metric m) {
  return improvement(mean(t, Scheme::Centralized, x, m), mean(t, Scheme::Hybrid, x, m));
}

std::string text(const EventLog& log) {
  std::ostringstream os;
  write_event_log(os, log);
  return os.str();
}

// Random connected graph: a random spanning tree plus extra edges.
Topology random_connected(Rng& rng, NodeId n, double extra) {
  std::vector<double> delay(n);
  for (auto& d : delay) d = static_cast<double>(rng.uniform_int(1, 10));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 1; v < n; ++v) edges.emplace_back(static_cast<NodeId>(rng.uniform_int(0, v - 1)), v);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (rng.bernoulli(extra)) edges.emplace_back(a, b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Topology::from_edges(delay, edges);
}

void simple_paths(const Topology& t, NodeId u, NodeId dst, std::vector<NodeId>& cur, std::vector<bool>& on,
                  double& best) {
  if (u == dst) {
    best = std::min(best, path_cost(t, cur));
    return;
  }
  for (NodeId w : t.neighbors(u)) {
    if (on[w]) continue;
    on[w] = true;
    cur.push_back(w);
    simple_paths(t, w, dst, cur, on, best);
    cur.pop_back();
    on[w] = false;
  }
}

const std::vector<Scheme> kBoth{Scheme::Centralized, Scheme::Hybrid};

}  // namespace

int main() {
  const SimConfig defaults;

  criterion(1, "malicious removal", [&](std::string& d) {
    SimConfig c = defaults;
    c.nodes = 200;
    c.area_width = c.area_height = 1500;
    c.target_zone_size = 50;
    c.min_zone_size = 25;
    c.seed = 1;
    const auto start = std::chrono::steady_clock::now();
    Simulation sim(c);
    sim.run();
    const auto m = compute_metrics(sim.log());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::vector<bool> keep(c.nodes, false);
    for (NodeId v = 0; v < c.nodes; ++v) keep[v] = !sim.is_malicious(v) && !sim.blacklisted(v);
    const bool connected = sim.topology().is_connected(keep);
    d = fmt("zones=%g detected=%.3f false_positives=%g runtime=%.1fs", static_cast<double>(sim.servers().size()),
            m.detected_fraction, static_cast<double>(m.false_positives), secs) +
        (connected ? " honest subgraph connected" : " honest subgraph split");
    return m.detected_fraction == 1.0 && m.false_positives == 0 && connected && secs < 60.0;
  });

  SimConfig size_base = defaults;
  size_base.nodes = 100;
  size_base.area_width = size_base.area_height = 1000;  // density 1e-4
  std::printf("running size sweep (80..200 nodes, 5 seeds, both schemes)\n");
  std::fflush(stdout);
  const auto sizes = sweep_size(size_base, {80, 100, 120, 160, 200}, kBoth, 5);
  const Metric delay = &SweepRow::avg_update_delay;
  const Metric detect = &SweepRow::detection_time_90;
  const Metric overhead = &SweepRow::overhead_ratio;

  criterion(2, "delay scalability", [&](std::string& d) {
    const double c80 = mean(sizes, Scheme::Centralized, 80, delay), c200 = mean(sizes, Scheme::Centralized, 200, delay);
    const double h80 = mean(sizes, Scheme::Hybrid, 80, delay), h200 = mean(sizes, Scheme::Hybrid, 200, delay);
    const double g80 = gain(sizes, 80, delay), g200 = gain(sizes, 200, delay);
    d = fmt("cent 80->200 %.2f->%.2f, hybrid %.2f->%.2f", c80, c200, h80, h200) +
        fmt(", improvement %.1f%% at 80, %.1f%% at 200", 100 * g80, 100 * g200);
    return c200 >= 1.5 * c80 && std::abs(h200 / h80 - 1.0) <= 0.2 && g200 >= 0.5 && g80 >= 0.15;
  });

  criterion(3, "detection-time trend", [&](std::string& d) {
    const double g80 = gain(sizes, 80, detect), g200 = gain(sizes, 200, detect);
    int inversions = 0;
    bool noisy_only = true;
    const std::vector<double> xs{80, 120, 160, 200};
    std::string series;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto& r = row(sizes, Scheme::Centralized, xs[i]);
      series += fmt(" %.1f", r.detection_time_90.mean);
      if (i == 0) continue;
      const auto& p = row(sizes, Scheme::Centralized, xs[i - 1]);
      if (r.detection_time_90.mean < p.detection_time_90.mean) {
        ++inversions;
        const double noise = std::max(p.detection_time_90.stddev, r.detection_time_90.stddev);
        if (p.detection_time_90.mean - r.detection_time_90.mean > noise) noisy_only = false;
      }
    }
    d = fmt("improvement %.1f%% at 80, %.1f%% at 200, cent series", 100 * g80, 100 * g200) + series +
        fmt(", inversions %g", inversions);
    return g200 >= 0.4 && g80 >= 0.05 && inversions <= 1 && noisy_only;
  });

  criterion(4, "overhead-ratio trend", [&](std::string& d) {
    const double g100 = gain(sizes, 100, overhead), g200 = gain(sizes, 200, overhead);
    double lo = kNever, hi = 0;
    for (const auto& r : sizes.rows)
      if (r.scheme == Scheme::Hybrid) {
        lo = std::min(lo, r.overhead_ratio.mean);
        hi = std::max(hi, r.overhead_ratio.mean);
      }
    const double spread = hi / lo - 1.0;
    d = fmt("improvement %.1f%% at 100, %.1f%% at 200, hybrid spread %.1f%%", 100 * g100, 100 * g200, 100 * spread);
    return g200 >= 0.4 && g100 >= 0.4 && spread < 0.25;
  });

  criterion(5, "density sweep", [&](std::string& d) {
    SimConfig base = defaults;
    base.area_width = base.area_height = 1200;
    const std::vector<double> ds{0.00005, 0.0001, 0.00015};
    std::printf("running density sweep (1200 m square, 5 seeds, both schemes)\n");
    std::fflush(stdout);
    const auto t = sweep_density(base, ds, kBoth, 5);
    bool ok = true;
    for (double x : ds) {
      const double gd = gain(t, x, delay), gt = gain(t, x, detect), go = gain(t, x, overhead);
      d += fmt("d=%g: delay %.1f%% detect %.1f%% overhead %.1f%%; ", x, 100 * gd, 100 * gt, 100 * go);
      ok = ok && gd > 0 && gt > 0 && go > 0;
    }
    const double c_lo = mean(t, Scheme::Centralized, ds.front(), delay);
    const double c_hi = mean(t, Scheme::Centralized, ds.back(), delay);
    const double h_lo = mean(t, Scheme::Hybrid, ds.front(), delay);
    const double h_hi = mean(t, Scheme::Hybrid, ds.back(), delay);
    const double c_change = c_hi / c_lo - 1.0, h_change = std::abs(h_hi / h_lo - 1.0);
    d += fmt("delay growth cent %.1f%% hybrid %.1f%%", 100 * c_change, 100 * h_change);
    return ok && c_change > 0 && h_change < c_change;
  });

  criterion(6, "zoning properties", [&](std::string& d) {
    Rng rng(606);
    int bad = 0;
    for (int i = 0; i < 50; ++i) {
      const auto n = static_cast<std::size_t>(rng.uniform_int(60, 300));
      const double side = std::sqrt(static_cast<double>(n) / 1e-4);
      const auto t = generate_topology(n, {side, side}, defaults.radio_range, {1, 10}, rng.uniform_int(1, 1u << 30));
      const auto plan = build_zones(t, defaults.target_zone_size, defaults.min_zone_size);
      std::size_t total = 0;
      bool ok = zones_connected(t, plan);
      for (NodeId v = 0; v < n; ++v) ok = ok && plan.assignment[v] != kNoZone;
      for (const auto& m : plan.members) {
        total += m.size();
        ok = ok && m.size() >= defaults.min_zone_size;
      }
      if (!ok || total != n) ++bad;
    }
    const double side = std::sqrt(300 / 1e-4);
    const auto t = generate_topology(300, {side, side}, defaults.radio_range, {1, 10}, defaults.seed);
    const auto plan = build_zones(t, defaults.target_zone_size, defaults.min_zone_size);
    const double zones = static_cast<double>(plan.zone_count());
    const double mean_size = 300.0 / zones;
    d = fmt("%g of 50 plans invalid; 300 nodes -> %g zones, mean size %.1f", bad, zones, mean_size);
    return bad == 0 && zones >= 6 && zones <= 8 && mean_size >= 35 && mean_size <= 50;
  });

  criterion(7, "server oracle", [&](std::string& d) {
    Rng rng(707);
    int agree = 0;
    for (int i = 0; i < 200; ++i) {
      const auto n = static_cast<NodeId>(rng.uniform_int(1, 15));
      const auto t = random_connected(rng, n, 0.15);
      ZonePlan plan;
      plan.assignment.assign(n, 0);
      plan.members.emplace_back();
      for (NodeId v = 0; v < n; ++v) plan.members[0].push_back(v);
      plan.zms = {kNoNode};
      const NodeId got = select_zms(t, plan).zms[0];
      NodeId best = kNoNode;
      double best_value = kInfiniteCost;
      for (NodeId c = 0; c < n; ++c) {
        double v = 0.0;
        for (NodeId m = 0; m < n; ++m) {
          if (m == c) continue;
          double b = kInfiniteCost;
          std::vector<NodeId> cur{m};
          std::vector<bool> on(n, false);
          on[m] = true;
          simple_paths(t, m, c, cur, on, b);
          v += b;
        }
        if (v < best_value) {
          best = c;
          best_value = v;
        }
      }
      if (got == best) ++agree;
    }
    d = fmt("%g of 200 zones match", agree);
    return agree == 200;
  });

  criterion(8, "path oracle", [&](std::string& d) {
    Rng rng(808);
    int agree = 0, graphs = 0;
    while (graphs < 100) {
      const auto n = static_cast<NodeId>(rng.uniform_int(2, 10));
      const auto t = random_connected(rng, n, 0.3);
      const auto src = static_cast<NodeId>(rng.uniform_int(0, n - 1));
      const auto dst = static_cast<NodeId>(rng.uniform_int(0, n - 1));
      double best = kInfiniteCost;
      std::vector<NodeId> cur{src};
      std::vector<bool> on(n, false);
      on[src] = true;
      simple_paths(t, src, dst, cur, on, best);
      if (shortest_delay_path(t, src, dst).total_cost == best) ++agree;
      ++graphs;
    }
    d = fmt("%g of 100 graphs match", agree);
    return agree == 100;
  });

  criterion(9, "honest silence", [&](std::string& d) {
    bool ok = true;
    for (Scheme s : kBoth) {
      SimConfig c = defaults;
      c.scheme = s;
      c.nodes = 50;
      c.area_width = c.area_height = std::sqrt(50 / 1e-4);
      c.target_zone_size = 20;
      c.min_zone_size = 10;
      c.malicious_ratio = 0;
      c.link_failure_prob = 0;
      c.run_length = 1000;
      c.log_packets = false;
      Simulation sim(c);
      std::size_t failed = 0;
      for (std::size_t k = 0; k < c.run_length; ++k) {
        sim.run_interval();
        for (const auto& f : sim.last_failures()) failed += f.size();
      }
      double nam = 0;
      for (const auto& srv : sim.servers())
        for (NodeId a : srv.state.scope())
          for (NodeId b : srv.state.scope()) nam += srv.state.nam(a, b);
      const auto black = sim.blacklisted_nodes().size();
      d += std::string(s == Scheme::Centralized ? "centralized" : "hybrid") +
           fmt(": failures %g, NAM total %g, blacklisted %g; ", static_cast<double>(failed), nam,
               static_cast<double>(black));
      ok = ok && failed == 0 && nam == 0 && black == 0;
    }
    return ok;
  });

  criterion(10, "fairness arithmetic", [&](std::string& d) {
    auto state = [](std::size_t n, double x, double y, double thr, double delta = 2) {
      MpifaParams p;
      p.penalty = x;
      p.decay = y;
      p.nam_threshold = thr;
      p.forward_reward = 1;
      p.generation_cost = delta;
      std::vector<NodeId> all(n);
      for (NodeId v = 0; v < n; ++v) all[v] = v;
      return FairnessServerState(0, n, all, {}, p);
    };
    bool ok = true;
    auto s = state(2, 5, 2, 10);
    apply_penalties(s, {{0, 1, Test::OutputMatchesInput}});
    ok = ok && s.nam(0, 1) == 5.0 && s.nam(1, 0) == 5.0;

    s = state(3, 1, 2, 10);
    s.set_nam(2, 0, 8);
    s.set_nam(2, 1, 4);
    s.set_nam(0, 2, 3);
    apply_penalties(s, {{0, 1, Test::OutputMatchesInput}});
    ok = ok && s.nam(2, 0) == 4.0 && s.nam(2, 1) == 2.0 && s.nam(0, 1) == 1.0 && s.nam(1, 0) == 1.0 &&
         s.nam(0, 2) == 3.0;

    auto credit = [&](std::uint64_t forwarded, std::uint64_t generated) {
      auto c = state(2, 1, 2, 10);
      c.set_credit(0, 100);
      TransactionLedger l;
      l.at(1).input = forwarded;
      l.at(1).output = forwarded + generated;
      l.at(1).generated = generated;
      FairnessReport r;
      r.reporter = 0;
      r.snapshot = l;
      update_credits(c, {r});
      return c.credit(0);
    };
    const double c1 = credit(20, 10), c2 = credit(50, 0), c3 = credit(0, 30);
    ok = ok && c1 == 100.0 && c2 == 150.0 && c3 == 40.0;

    s = state(3, 1, 2, 100);
    s.set_nam(0, 1, 99);
    s.set_nam(2, 1, 101);
    const auto fresh = refresh_blacklist(s);
    ok = ok && fresh == std::vector<NodeId>{2} && !s.is_blacklisted(0);
    d = fmt("credits %g/%g/%g, threshold 100 blacklists row sum 101 only", c1, c2, c3);
    return ok;
  });

  criterion(11, "determinism", [&](std::string& d) {
    bool ok = true;
    for (Scheme s : kBoth) {
      SimConfig c = defaults;
      c.scheme = s;
      c.nodes = 100;
      c.area_width = c.area_height = 1000;
      c.run_length = 30;
      c.seed = 11;
      const auto a = run(c), b = run(c);
      const bool same_log = text(a) == text(b);
      const bool same_metrics = compute_metrics(a) == compute_metrics(b);
      d += std::string(s == Scheme::Centralized ? "centralized" : "hybrid") + (same_log ? " logs equal" : " logs differ") +
           (same_metrics ? ", metrics equal; " : ", metrics differ; ");
      ok = ok && same_log && same_metrics;
    }
    return ok;
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
