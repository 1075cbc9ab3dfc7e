#pragma once

// Size and density sweeps comparing the two management schemes, and the
// aggregated tables they produce.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "meshfair/config.hpp"
#include "meshfair/metrics.hpp"
#include "meshfair/simulator.hpp"

namespace meshfair {

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
  friend bool operator==(const Stat&, const Stat&) = default;
};

inline Stat summarize(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (std::isinf(s.mean)) return {s.mean, 0.0};
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct SweepRow {
  Scheme scheme = Scheme::Hybrid;
  double x = 0.0;  // the swept variable: node count or density
  std::size_t nodes = 0;
  double density = 0.0;
  std::size_t seeds = 0;
  Stat avg_update_delay;
  Stat detection_time_90;
  Stat overhead_ratio;
  Stat detected_fraction;
  Stat false_positives;
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepTable {
  std::string variable;  // "nodes" or "density"
  std::vector<SweepRow> rows;
  friend bool operator==(const SweepTable&, const SweepTable&) = default;
};

// (cent - hyb) / cent for one metric at one x.
inline double improvement(double centralized, double hybrid) {
  if (centralized == 0.0 || std::isinf(centralized) || std::isinf(hybrid)) return std::nan("");
  return (centralized - hybrid) / centralized;
}

struct SweepPoint {
  SimConfig cfg;
  double x = 0.0;
};

// Runs every (point, scheme, seed) combination on `threads` workers and
// reduces per (point, scheme) in input order. Seeds are base.seed + i.
inline SweepTable run_sweep(const std::string& variable, const std::vector<SweepPoint>& points,
                            const std::vector<Scheme>& schemes, std::size_t seeds_per_point, unsigned threads = 0,
                            const std::function<void(const MetricsReport&)>& progress = {}) {
  struct Job {
    std::size_t point, scheme;
    SimConfig cfg;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t s = 0; s < schemes.size(); ++s)
      for (std::size_t i = 0; i < seeds_per_point; ++i) {
        SimConfig c = points[p].cfg;
        c.scheme = schemes[s];
        c.seed = points[p].cfg.seed + i;
        c.log_packets = false;
        jobs.push_back({p, s, c});
      }
  std::vector<MetricsReport> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        results[j] = compute_metrics(run(jobs[j].cfg));
        if (progress) {
          std::lock_guard<std::mutex> lock(mu);
          progress(results[j]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SweepTable table{variable, {}};
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      std::vector<double> delay, detect, overhead, found, fp;
      SweepRow row;
      row.scheme = schemes[s];
      row.x = points[p].x;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].point != p || jobs[j].scheme != s) continue;
        const auto& m = results[j];
        row.nodes = m.nodes;
        row.density = m.density;
        delay.push_back(m.avg_update_delay);
        detect.push_back(m.detection_time_90);
        overhead.push_back(m.overhead_ratio);
        found.push_back(m.detected_fraction);
        fp.push_back(static_cast<double>(m.false_positives));
      }
      row.seeds = delay.size();
      row.avg_update_delay = summarize(delay);
      row.detection_time_90 = summarize(detect);
      row.overhead_ratio = summarize(overhead);
      row.detected_fraction = summarize(found);
      row.false_positives = summarize(fp);
      table.rows.push_back(row);
    }
  }
  return table;
}

// Density held at base's: the square area grows with n.
inline SweepTable sweep_size(const SimConfig& base, const std::vector<std::size_t>& sizes,
                             const std::vector<Scheme>& schemes, std::size_t seeds_per_point, unsigned threads = 0,
                             const std::function<void(const MetricsReport&)>& progress = {}) {
  const double density = base.density();
  std::vector<SweepPoint> points;
  for (std::size_t n : sizes) {
    SimConfig c = base;
    c.nodes = n;
    c.area_width = c.area_height = std::sqrt(static_cast<double>(n) / density);
    points.push_back({c, static_cast<double>(n)});
  }
  return run_sweep("nodes", points, schemes, seeds_per_point, threads, progress);
}

// Area held at base's: n = round(density * area).
inline SweepTable sweep_density(const SimConfig& base, const std::vector<double>& densities,
                                const std::vector<Scheme>& schemes, std::size_t seeds_per_point, unsigned threads = 0,
                                const std::function<void(const MetricsReport&)>& progress = {}) {
  std::vector<SweepPoint> points;
  for (double d : densities) {
    SimConfig c = base;
    c.nodes = static_cast<std::size_t>(std::llround(d * base.area_width * base.area_height));
    points.push_back({c, d});
  }
  return run_sweep("density", points, schemes, seeds_per_point, threads, progress);
}

}  // namespace meshfair
