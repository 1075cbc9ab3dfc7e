#pragma once

// The three evaluation metrics, computed from an event log.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <variant>
#include <vector>

#include "meshfair/error.hpp"
#include "meshfair/event_log.hpp"

namespace meshfair {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct MetricsReport {
  Scheme scheme = Scheme::Hybrid;
  std::size_t nodes = 0;
  double density = 0.0;
  std::uint64_t seed = 0;

  double avg_update_delay = 0.0;     // mean over delivered fairness reports
  double detection_time_90 = 0.0;    // simulated time; kNever if not reached
  double detection_interval_90 = 0.0;  // update interval index; kNever if not reached
  double overhead_ratio = 0.0;       // fairness / (fairness + data) bytes

  double detected_fraction = 0.0;    // malicious nodes blacklisted by run end
  std::size_t false_positives = 0;   // honest nodes blacklisted by run end
  std::size_t reports = 0;
  double mean_report_hops = 0.0;
  std::uint64_t fairness_bytes = 0;  // reports + notifications + border + sync
  std::uint64_t sync_bytes = 0;
  std::uint64_t data_bytes = 0;
  double delivery_ratio = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Smallest value at which at least 90% of `total` items have occurred,
// given each item's first occurrence. Zero items are trivially detected.
inline double ninety_percent_point(std::vector<double> first_seen, std::size_t total) {
  if (total == 0) return 0.0;
  const auto need = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(total) - 1e-9));
  if (first_seen.size() < need) return kNever;
  std::sort(first_seen.begin(), first_seen.end());
  return first_seen[need - 1];
}

inline MetricsReport compute_metrics(const EventLog& log, const std::vector<NodeId>& malicious) {
  if (log.empty()) throw EmptyLog("event log has no records");
  MetricsReport m;
  const auto& cfg = log.config();
  m.scheme = cfg.scheme;
  m.nodes = log.facts().nodes;
  m.density = cfg.density();
  m.seed = cfg.seed;

  const std::set<NodeId> truth(malicious.begin(), malicious.end());
  std::map<NodeId, std::pair<double, std::uint64_t>> first;  // node -> (time, interval)
  double delay_sum = 0.0, hop_sum = 0.0;
  std::uint64_t originated = 0, delivered = 0;

  for (const auto& r : log.records()) {
    if (const auto* x = std::get_if<rec::Report>(&r.body)) {
      m.fairness_bytes += x->bytes * x->transmissions;
      ++m.reports;
      hop_sum += static_cast<double>(x->hops);
      if (x->delivered) delay_sum += x->delay;
    } else if (const auto* x = std::get_if<rec::Notify>(&r.body)) {
      m.fairness_bytes += x->bytes * x->transmissions;
    } else if (const auto* x = std::get_if<rec::Border>(&r.body)) {
      m.fairness_bytes += x->bytes * x->transmissions;
    } else if (const auto* x = std::get_if<rec::Sync>(&r.body)) {
      m.fairness_bytes += x->bytes * x->transmissions;
      m.sync_bytes += x->bytes * x->transmissions;
    } else if (const auto* x = std::get_if<rec::Traffic>(&r.body)) {
      m.data_bytes += x->data_bytes;
      originated += x->originated;
      delivered += x->delivered;
    } else if (const auto* x = std::get_if<rec::Blacklist>(&r.body)) {
      first.try_emplace(x->node, r.time, r.interval);
    }
  }

  std::size_t delivered_reports = 0;
  for (const auto& r : log.records())
    if (const auto* x = std::get_if<rec::Report>(&r.body); x && x->delivered) ++delivered_reports;
  m.avg_update_delay = delivered_reports ? delay_sum / static_cast<double>(delivered_reports) : 0.0;
  m.mean_report_hops = m.reports ? hop_sum / static_cast<double>(m.reports) : 0.0;

  std::vector<double> times, intervals;
  for (const auto& [v, when] : first) {
    if (truth.count(v)) {
      times.push_back(when.first);
      intervals.push_back(static_cast<double>(when.second));
    } else {
      ++m.false_positives;
    }
  }
  m.detection_time_90 = ninety_percent_point(times, truth.size());
  m.detection_interval_90 = ninety_percent_point(intervals, truth.size());
  m.detected_fraction = truth.empty() ? 1.0 : static_cast<double>(times.size()) / static_cast<double>(truth.size());

  const double total = static_cast<double>(m.fairness_bytes) + static_cast<double>(m.data_bytes);
  m.overhead_ratio = total > 0.0 ? static_cast<double>(m.fairness_bytes) / total : 0.0;
  m.delivery_ratio = originated ? static_cast<double>(delivered) / static_cast<double>(originated) : 0.0;
  return m;
}

inline MetricsReport compute_metrics(const EventLog& log) { return compute_metrics(log, log.facts().malicious); }

}  // namespace meshfair
