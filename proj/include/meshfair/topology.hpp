#pragma once

// Static mesh topology: node placement, radio adjacency, per-node delay
// indices, and the path queries the rest of the library routes with.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "meshfair/error.hpp"
#include "meshfair/rng.hpp"

namespace meshfair {

using NodeId = std::uint32_t;

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct Area {
  double width = 0.0;
  double height = 0.0;
};

struct DelayRange {
  double min = 1.0;
  double max = 10.0;
};

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

namespace detail {

inline bool cost_equal(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace detail

class Topology {
 public:
  Topology() = default;

  // Geometric constructor: adjacency is every pair within radio_range.
  Topology(std::vector<Position> positions, double radio_range, std::vector<double> delay_index)
      : positions_(std::move(positions)), radio_range_(radio_range), delay_(std::move(delay_index)) {
    check_common();
    adjacency_.assign(positions_.size(), {});
    for (NodeId a = 0; a < size(); ++a) {
      for (NodeId b = a + 1; b < size(); ++b) {
        if (detail::distance(positions_[a], positions_[b]) <= radio_range_) {
          adjacency_[a].push_back(b);
          adjacency_[b].push_back(a);
        }
      }
    }
  }

  // Explicit-edge constructor for fixtures and imported files. Positions are
  // carried along but adjacency is taken verbatim, so graphs that are not
  // geometrically consistent (or not connected) can be built on purpose.
  static Topology from_edges(std::vector<Position> positions, double radio_range, std::vector<double> delay_index,
                             const std::vector<std::pair<NodeId, NodeId>>& edges) {
    Topology t;
    t.positions_ = std::move(positions);
    t.radio_range_ = radio_range;
    t.delay_ = std::move(delay_index);
    t.check_common();
    t.adjacency_.assign(t.positions_.size(), {});
    for (auto [a, b] : edges) {
      if (a >= t.size() || b >= t.size()) throw UnknownNode("edge references node outside [0, N)");
      if (a == b) throw InvalidArgument("self-loop edge " + std::to_string(a));
      auto& la = t.adjacency_[a];
      if (std::find(la.begin(), la.end(), b) != la.end()) continue;
      la.push_back(b);
      t.adjacency_[b].push_back(a);
    }
    for (auto& l : t.adjacency_) std::sort(l.begin(), l.end());
    return t;
  }

  // Convenience for tests: positions on a line, unit spacing.
  static Topology from_edges(std::vector<double> delay_index, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    std::vector<Position> pos(delay_index.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = {static_cast<double>(i), 0.0};
    return from_edges(std::move(pos), 1.0, std::move(delay_index), edges);
  }

  NodeId size() const { return static_cast<NodeId>(positions_.size()); }
  double radio_range() const { return radio_range_; }
  bool contains(NodeId a) const { return a < size(); }

  const Position& position(NodeId a) const {
    require(a);
    return positions_[a];
  }
  double delay_index(NodeId a) const {
    require(a);
    return delay_[a];
  }
  const std::vector<double>& delay_indices() const { return delay_; }

  // Ascending NodeId order.
  std::span<const NodeId> neighbors(NodeId a) const {
    require(a);
    return adjacency_[a];
  }
  std::size_t degree(NodeId a) const { return neighbors(a).size(); }

  bool adjacent(NodeId a, NodeId b) const {
    auto n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
  }

  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& l : adjacency_) twice += l.size();
    return twice / 2;
  }

  // Every adjacency pair once, with a < b, in lexicographic order.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId a = 0; a < size(); ++a)
      for (NodeId b : adjacency_[a])
        if (a < b) out.emplace_back(a, b);
    return out;
  }

  // Connectivity of the subgraph induced by nodes with keep[v] == true.
  // An empty keep vector means "all nodes".
  bool is_connected(const std::vector<bool>& keep = {}) const {
    auto kept = [&](NodeId v) { return keep.empty() || keep[v]; };
    NodeId start = size();
    std::size_t total = 0;
    for (NodeId v = 0; v < size(); ++v) {
      if (!kept(v)) continue;
      ++total;
      if (start == size()) start = v;
    }
    if (total <= 1) return true;
    std::vector<bool> seen(size(), false);
    std::vector<NodeId> stack{start};
    seen[start] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : adjacency_[u]) {
        if (seen[v] || !kept(v)) continue;
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
    }
    return reached == total;
  }

  friend bool operator==(const Topology& a, const Topology& b) {
    if (a.size() != b.size() || a.radio_range_ != b.radio_range_) return false;
    for (NodeId i = 0; i < a.size(); ++i) {
      if (a.positions_[i].x != b.positions_[i].x || a.positions_[i].y != b.positions_[i].y) return false;
    }
    return a.delay_ == b.delay_ && a.adjacency_ == b.adjacency_;
  }

  void require(NodeId a) const {
    if (!contains(a)) throw UnknownNode("unknown node " + std::to_string(a));
  }

 private:
  void check_common() const {
    if (delay_.size() != positions_.size()) throw InvalidArgument("delay index count does not match node count");
    if (!(radio_range_ > 0.0)) throw InvalidArgument("radio range must be positive");
    for (double d : delay_)
      if (!(d > 0.0)) throw InvalidArgument("delay index must be strictly positive");
  }

  std::vector<Position> positions_;
  double radio_range_ = 1.0;
  std::vector<double> delay_;
  std::vector<std::vector<NodeId>> adjacency_;
};

inline constexpr int kDefaultTopologyRetries = 64;

// Uniform placement in the area and integer delay indices uniform over
// [ceil(min), floor(max)]. A disconnected draw is thrown away and the next
// seed tried; after `retries` failures ConnectivityFailure is raised.
inline Topology generate_topology(std::size_t n, Area area, double radio_range, DelayRange delays, std::uint64_t seed,
                                  int retries = kDefaultTopologyRetries) {
  if (n < 2) throw InvalidArgument("topology needs at least 2 nodes");
  if (!(area.width > 0.0) || !(area.height > 0.0)) throw InvalidArgument("area sides must be positive");
  if (!(radio_range > 0.0)) throw InvalidArgument("radio range must be positive");
  if (!(delays.min > 0.0) || delays.min > delays.max) throw InvalidArgument("delay index range must satisfy 0 < min <= max");
  const auto lo = static_cast<std::uint64_t>(std::ceil(delays.min));
  const auto hi = static_cast<std::uint64_t>(std::floor(delays.max));
  if (lo > hi) throw InvalidArgument("delay index range contains no whole value");

  for (int attempt = 0; attempt <= retries; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<Position> pos(n);
    for (auto& p : pos) {
      p.x = rng.uniform(0.0, area.width);
      p.y = rng.uniform(0.0, area.height);
    }
    std::vector<double> delay(n);
    for (auto& d : delay) d = static_cast<double>(rng.uniform_int(lo, hi));
    Topology t(std::move(pos), radio_range, std::move(delay));
    if (t.is_connected()) return t;
  }
  throw ConnectivityFailure("no connected topology for n=" + std::to_string(n) + " range=" + std::to_string(radio_range) +
                            " after " + std::to_string(retries + 1) + " draws");
}

struct Path {
  std::vector<NodeId> nodes;
  double total_cost = 0.0;

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

// Cost of walking `nodes`: every delay index except the first node's.
inline double path_cost(const Topology& t, std::span<const NodeId> nodes) {
  double c = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) c += t.delay_index(nodes[i]);
  return c;
}

// Minimum cost from every node to `dst` under the node-weighted cost rule.
// Nodes flagged in `excluded` are never entered (the destination itself must
// not be excluded). Unreachable entries are kInfiniteCost.
class DelayField {
 public:
  DelayField(const Topology& t, NodeId dst, const std::vector<bool>* excluded = nullptr) : dst_(dst) {
    t.require(dst);
    cost_.assign(t.size(), kInfiniteCost);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    cost_[dst] = 0.0;
    pq.emplace(0.0, dst);
    while (!pq.empty()) {
      auto [c, u] = pq.top();
      pq.pop();
      if (c > cost_[u]) continue;
      // Stepping w -> u costs u's delay index.
      const double step = c + t.delay_index(u);
      for (NodeId w : t.neighbors(u)) {
        if (excluded && (*excluded)[w]) continue;
        if (step < cost_[w] && !detail::cost_equal(step, cost_[w])) {
          cost_[w] = step;
          pq.emplace(step, w);
        }
      }
    }
  }

  NodeId destination() const { return dst_; }
  double cost_from(NodeId v) const { return cost_[v]; }
  bool reachable(NodeId v) const { return cost_[v] != kInfiniteCost; }

  // Lexicographically smallest minimum-cost path from src. At each step the
  // smallest-id neighbor that stays on some optimal path is taken, which
  // yields the lexicographically smallest optimal sequence.
  Path trace(const Topology& t, NodeId src, const std::vector<bool>* excluded = nullptr) const {
    t.require(src);
    if (!reachable(src)) throw Unreachable("no path from " + std::to_string(src) + " to " + std::to_string(dst_));
    Path p;
    p.nodes.push_back(src);
    NodeId u = src;
    while (u != dst_) {
      NodeId next = u;
      for (NodeId v : t.neighbors(u)) {
        if (excluded && (*excluded)[v]) continue;
        if (!reachable(v)) continue;
        if (detail::cost_equal(t.delay_index(v) + cost_[v], cost_[u])) {
          next = v;
          break;
        }
      }
      p.nodes.push_back(next);
      u = next;
    }
    p.total_cost = path_cost(t, p.nodes);
    return p;
  }

 private:
  NodeId dst_;
  std::vector<double> cost_;
};

inline Path shortest_delay_path(const Topology& t, NodeId src, NodeId dst) {
  t.require(src);
  t.require(dst);
  if (src == dst) return Path{{src}, 0.0};
  return DelayField(t, dst).trace(t, src);
}

// Breadth-first hop distances to `dst` plus the number of distinct
// minimum-hop paths from each node, used to draw a uniformly random
// minimum-hop route.
class HopField {
 public:
  HopField(const Topology& t, NodeId dst, const std::vector<bool>* excluded = nullptr) : dst_(dst) {
    t.require(dst);
    constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
    hops_.assign(t.size(), kNone);
    paths_.assign(t.size(), 0.0);
    std::vector<NodeId> order{dst};
    hops_[dst] = 0;
    paths_[dst] = 1.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      NodeId u = order[i];
      for (NodeId w : t.neighbors(u)) {
        if (excluded && (*excluded)[w]) continue;
        if (hops_[w] == kNone) {
          hops_[w] = hops_[u] + 1;
          order.push_back(w);
        }
        if (hops_[w] == hops_[u] + 1) paths_[w] += paths_[u];
      }
    }
  }

  bool reachable(NodeId v) const { return hops_[v] != std::numeric_limits<std::uint32_t>::max(); }
  std::uint32_t hops_from(NodeId v) const { return hops_[v]; }
  double path_count(NodeId v) const { return paths_[v]; }

  // Next hops are chosen with probability proportional to the number of
  // minimum-hop paths through them, so every minimum-hop path is equally
  // likely. Returns an empty node list when src cannot reach dst.
  Path sample(const Topology& t, NodeId src, Rng& rng, const std::vector<bool>* excluded = nullptr) const {
    Path p;
    if (!reachable(src)) return p;
    p.nodes.push_back(src);
    NodeId u = src;
    while (u != dst_) {
      double total = 0.0;
      for (NodeId v : t.neighbors(u))
        if (on_route(u, v, excluded)) total += paths_[v];
      double pick = rng.uniform() * total;
      NodeId next = u;
      for (NodeId v : t.neighbors(u)) {
        if (!on_route(u, v, excluded)) continue;
        next = v;
        pick -= paths_[v];
        if (pick < 0.0) break;
      }
      p.nodes.push_back(next);
      u = next;
    }
    p.total_cost = path_cost(t, p.nodes);
    return p;
  }

 private:
  bool on_route(NodeId u, NodeId v, const std::vector<bool>* excluded) const {
    if (excluded && (*excluded)[v]) return false;
    return reachable(v) && hops_[v] + 1 == hops_[u];
  }

  NodeId dst_;
  std::vector<std::uint32_t> hops_;
  std::vector<double> paths_;
};

// ---------------------------------------------------------------------------
// Text format
//
//   nodes N range R
//   id x y delay_index        (N lines, positions with 3 fractional digits)
//   edges
//   a b                       (one line per adjacency pair, a < b)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Shortest text that reads back to exactly v; whole numbers print plainly.
inline std::string shortest(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace detail

inline void write_topology(std::ostream& os, const Topology& t) {
  os << "nodes " << t.size() << " range " << detail::fixed3(t.radio_range()) << '\n';
  for (NodeId i = 0; i < t.size(); ++i) {
    const auto& p = t.position(i);
    os << i << ' ' << detail::fixed3(p.x) << ' ' << detail::fixed3(p.y) << ' ' << detail::shortest(t.delay_index(i))
       << '\n';
  }
  os << "edges\n";
  for (auto [a, b] : t.edges()) os << a << ' ' << b << '\n';
}

inline Topology read_topology(std::istream& is) {
  std::string word;
  std::size_t n = 0;
  double range = 0.0;
  if (!(is >> word) || word != "nodes" || !(is >> n) || !(is >> word) || word != "range" || !(is >> range))
    throw ParseError("topology header must be 'nodes N range R'");
  std::vector<Position> pos(n);
  std::vector<double> delay(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t id = 0;
    if (!(is >> id >> pos[i].x >> pos[i].y >> delay[i])) throw ParseError("bad node line " + std::to_string(i));
    if (id != i) throw ParseError("node lines must be dense and ordered; expected id " + std::to_string(i));
  }
  if (!(is >> word) || word != "edges") throw ParseError("expected 'edges' section");
  std::vector<std::pair<NodeId, NodeId>> edges;
  NodeId a = 0, b = 0;
  while (is >> a >> b) {
    if (a >= b) throw ParseError("edge lines must satisfy a < b");
    edges.emplace_back(a, b);
  }
  if (!is.eof()) throw ParseError("trailing garbage after edges");
  return Topology::from_edges(std::move(pos), range, std::move(delay), edges);
}

}  // namespace meshfair
