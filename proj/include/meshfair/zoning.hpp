#pragma once

// Virtual zone construction and zone-server placement.
//
// Zones are grown one at a time from the un-zoned node with the fewest
// neighbors, breadth-first, always expanding toward low-degree (edge) nodes
// first. Zones that end up below the minimum size are dissolved and their
// nodes absorbed into a neighboring zone. Each zone's server is the member
// with the smallest summed delay-path cost from all other members.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "meshfair/error.hpp"
#include "meshfair/topology.hpp"

namespace meshfair {

using ZoneId = std::uint32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr ZoneId kNoZone = std::numeric_limits<ZoneId>::max();

struct ZonePlan {
  std::vector<ZoneId> assignment;            // NodeId -> ZoneId
  std::vector<std::vector<NodeId>> members;  // ZoneId -> nodes in join order
  std::vector<NodeId> zms;                   // ZoneId -> server, kNoNode until selected
  std::size_t target_zone_size = 0;
  std::size_t min_zone_size = 0;

  std::size_t zone_count() const { return members.size(); }
  ZoneId zone_of(NodeId v) const { return assignment.at(v); }

  friend bool operator==(const ZonePlan&, const ZonePlan&) = default;
};

struct ZmsIndex {
  NodeId candidate = kNoNode;
  double value = 0.0;
};

namespace detail {

// Ascending by neighbor count, ties by NodeId.
inline void sort_by_degree(const Topology& t, std::vector<NodeId>& v) {
  std::sort(v.begin(), v.end(), [&](NodeId a, NodeId b) {
    const auto da = t.degree(a), db = t.degree(b);
    return da != db ? da < db : a < b;
  });
}

}  // namespace detail

inline ZonePlan build_zones(const Topology& t, std::size_t target_zone_size, std::size_t min_zone_size) {
  const std::size_t n = t.size();
  if (min_zone_size < 2 || min_zone_size > target_zone_size || target_zone_size > n)
    throw InvalidSizes("zone sizes must satisfy 2 <= min (" + std::to_string(min_zone_size) + ") <= target (" +
                       std::to_string(target_zone_size) + ") <= N (" + std::to_string(n) + ")");
  if (!t.is_connected()) throw NonConnectedTopology("zoning requires a connected topology");

  std::vector<bool> available(n, true);
  std::size_t remaining = n;
  std::vector<std::vector<NodeId>> zones;

  auto take = [&](NodeId v) {
    available[v] = false;
    --remaining;
  };

  while (remaining > 0) {
    // Stage 1: seed at the available node with the fewest neighbors.
    NodeId seed = kNoNode;
    for (NodeId v = 0; v < n; ++v) {
      if (!available[v]) continue;
      if (seed == kNoNode || t.degree(v) < t.degree(seed)) seed = v;
    }
    std::vector<NodeId> zone{seed};
    take(seed);

    // Stage 2: first tier, checking the limit after every addition.
    for (NodeId v : t.neighbors(seed)) {
      if (zone.size() >= target_zone_size) break;
      if (!available[v]) continue;
      zone.push_back(v);
      take(v);
    }
    // Stage 3: order the first tier from edge-like to core-like.
    {
      std::vector<NodeId> tier(zone.begin() + 1, zone.end());
      detail::sort_by_degree(t, tier);
      std::copy(tier.begin(), tier.end(), zone.begin() + 1);
    }
    // Stages 4-5: expand from the 2nd entry onward; each entry's newly
    // added neighbors go through a buffer sorted by neighbor count.
    for (std::size_t idx = 1; idx < zone.size() && zone.size() < target_zone_size; ++idx) {
      std::vector<NodeId> buffer;
      for (NodeId v : t.neighbors(zone[idx])) {
        if (zone.size() + buffer.size() >= target_zone_size) break;
        if (!available[v]) continue;
        buffer.push_back(v);
        take(v);
      }
      detail::sort_by_degree(t, buffer);
      zone.insert(zone.end(), buffer.begin(), buffer.end());
    }
    zones.push_back(std::move(zone));
  }

  // Stage 6: dissolve undersized zones.
  ZonePlan plan;
  plan.target_zone_size = target_zone_size;
  plan.min_zone_size = min_zone_size;
  plan.assignment.assign(n, kNoZone);
  for (auto& z : zones) {
    if (z.size() < min_zone_size) continue;
    const auto id = static_cast<ZoneId>(plan.members.size());
    for (NodeId v : z) plan.assignment[v] = id;
    plan.members.push_back(std::move(z));
  }

  // Stage 7: each un-zoned node joins the zone of its first zoned neighbor,
  // in passes until every node is placed.
  bool progress = true;
  while (progress) {
    progress = false;
    bool pending = false;
    for (NodeId v = 0; v < n; ++v) {
      if (plan.assignment[v] != kNoZone) continue;
      pending = true;
      for (NodeId w : t.neighbors(v)) {
        if (plan.assignment[w] == kNoZone) continue;
        plan.assignment[v] = plan.assignment[w];
        plan.members[plan.assignment[w]].push_back(v);
        progress = true;
        break;
      }
    }
    if (!pending) break;
  }
  plan.zms.assign(plan.members.size(), kNoNode);
  return plan;
}

// Sum of minimum delay-path costs from every other member to the candidate.
// Routes may leave the zone; membership only decides who is summed.
inline ZmsIndex compute_zms_index(const Topology& t, const std::vector<NodeId>& members, NodeId candidate) {
  t.require(candidate);
  if (std::find(members.begin(), members.end(), candidate) == members.end())
    throw CandidateNotMember("node " + std::to_string(candidate) + " is not a zone member");
  DelayField field(t, candidate);
  ZmsIndex idx{candidate, 0.0};
  for (NodeId m : members) {
    if (m == candidate) continue;
    t.require(m);
    if (!field.reachable(m)) throw Unreachable("member " + std::to_string(m) + " cannot reach " + std::to_string(candidate));
    idx.value += field.cost_from(m);
  }
  return idx;
}

// Argmin of compute_zms_index over feasible members, ties to the smaller id.
// An empty can_host vector means every node is feasible.
inline NodeId best_server(const Topology& t, const std::vector<NodeId>& members, const std::vector<bool>& can_host = {}) {
  std::vector<NodeId> sorted = members;
  std::sort(sorted.begin(), sorted.end());
  NodeId best = kNoNode;
  double best_value = 0.0;
  for (NodeId c : sorted) {
    if (!can_host.empty() && !can_host.at(c)) continue;
    const double v = compute_zms_index(t, members, c).value;
    if (best == kNoNode || (v < best_value && !detail::cost_equal(v, best_value))) {
      best = c;
      best_value = v;
    }
  }
  if (best == kNoNode) throw NoFeasibleHost("no member can host the management server");
  return best;
}

inline ZonePlan select_zms(const Topology& t, ZonePlan plan, const std::vector<bool>& can_host = {}) {
  plan.zms.assign(plan.members.size(), kNoNode);
  for (ZoneId z = 0; z < plan.members.size(); ++z) plan.zms[z] = best_server(t, plan.members[z], can_host);
  return plan;
}

// Zones adjacent to `v` other than its own, ascending.
inline std::vector<ZoneId> foreign_zones(const Topology& t, const ZonePlan& plan, NodeId v) {
  std::vector<ZoneId> out;
  for (NodeId w : t.neighbors(v))
    if (plan.assignment[w] != plan.assignment[v]) out.push_back(plan.assignment[w]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Connectivity of each zone's induced subgraph.
inline bool zones_connected(const Topology& t, const ZonePlan& plan) {
  for (const auto& m : plan.members) {
    std::vector<bool> keep(t.size(), false);
    for (NodeId v : m) keep[v] = true;
    if (!t.is_connected(keep)) return false;
  }
  return true;
}

//   node_id zone_id            (one line per node)
//   zone zone_id zms node_id   (one line per zone)
inline void write_zone_plan(std::ostream& os, const ZonePlan& plan) {
  for (NodeId v = 0; v < plan.assignment.size(); ++v) os << v << ' ' << plan.assignment[v] << '\n';
  for (ZoneId z = 0; z < plan.members.size(); ++z) {
    os << "zone " << z << " zms ";
    if (plan.zms.size() > z && plan.zms[z] != kNoNode)
      os << plan.zms[z];
    else
      os << '-';
    os << '\n';
  }
}

}  // namespace meshfair
