#pragma once

// The fairness algorithm run by a management server (central or zone):
// per-neighbor transaction ledgers, the three consistency tests, NAM
// penalty/decay, credit accounting, blacklisting and traffic admission.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "meshfair/error.hpp"
#include "meshfair/topology.hpp"

namespace meshfair {

// Counters node `a` keeps about one neighbor `b` over one update interval.
struct LedgerCounters {
  std::uint64_t input = 0;        // I: packets a received from b
  std::uint64_t output = 0;       // O: packets a sent to b
  std::uint64_t generated = 0;    // S: packets a originated and sent to b
  std::uint64_t terminated = 0;   // T: packets from b that ended at a
  std::uint64_t from_origin = 0;  // OFN: received from b and originated by b

  friend bool operator==(const LedgerCounters&, const LedgerCounters&) = default;
};

// One node's ledger: neighbor -> counters, ascending neighbor order.
class TransactionLedger {
 public:
  LedgerCounters& at(NodeId neighbor) { return entries_[neighbor]; }
  const std::map<NodeId, LedgerCounters>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  void reset() { entries_.clear(); }

  struct Totals {
    std::uint64_t input = 0, output = 0, generated = 0, terminated = 0;
  };

  Totals totals() const {
    Totals s;
    for (const auto& [_, c] : entries_) {
      s.input += c.input;
      s.output += c.output;
      s.generated += c.generated;
      s.terminated += c.terminated;
    }
    return s;
  }

  friend bool operator==(const TransactionLedger&, const TransactionLedger&) = default;

 private:
  std::map<NodeId, LedgerCounters> entries_;
};

// Forwarded-packet count, from the output side: sum O - sum S.
inline double forwarded_count(const TransactionLedger& l) {
  const auto s = l.totals();
  return static_cast<double>(s.output) - static_cast<double>(s.generated);
}

// Same quantity from the input side: sum I - sum T.
inline double forwarded_count_from_input(const TransactionLedger& l) {
  const auto s = l.totals();
  return static_cast<double>(s.input) - static_cast<double>(s.terminated);
}

struct WireSizes {
  std::uint64_t header_bytes = 32;
  std::uint64_t per_neighbor_bytes = 20;
  std::uint64_t per_listed_node_bytes = 8;

  std::uint64_t report_bytes(std::size_t entries) const { return header_bytes + per_neighbor_bytes * entries; }
  std::uint64_t notification_bytes(std::size_t listed) const { return header_bytes + per_listed_node_bytes * listed; }

  friend bool operator==(const WireSizes&, const WireSizes&) = default;
};

struct FairnessReport {
  NodeId reporter = kNoNodeId;
  NodeId server = kNoNodeId;
  std::uint64_t sequence = 0;
  // Own-server reports carry the full ledger; reports to a neighboring
  // zone's server carry only the entries for that zone's nodes.
  bool full = true;
  TransactionLedger snapshot;
  std::uint64_t message_size = 0;

  static constexpr NodeId kNoNodeId = static_cast<NodeId>(-1);
};

struct MpifaParams {
  double penalty = 1.0;        // X
  double decay = 3.0;          // Y, > 1
  double nam_threshold = 14.0;
  double forward_reward = 1.0;  // beta
  double generation_cost = 0.5; // delta
  double min_credit = 0.0;
  double initial_credit = 100.0;

  void validate() const {
    if (!(penalty > 0.0)) throw InvalidArgument("penalty X must be > 0");
    if (!(decay > 1.0)) throw InvalidArgument("decay factor Y must be > 1");
    if (!(forward_reward > 0.0)) throw InvalidArgument("forwarding reward must be > 0");
    if (!(generation_cost > 0.0)) throw InvalidArgument("generation cost must be > 0");
    if (!(nam_threshold >= 0.0)) throw InvalidArgument("NAM threshold must be >= 0");
  }

  friend bool operator==(const MpifaParams&, const MpifaParams&) = default;
};

enum class Test : std::uint8_t {
  OutputMatchesInput,    // O_{a,b} = I_{b,a}
  GeneratedMatchesOfn,   // S_{a,b} = OFN_{b,a}
  FlowBalance,           // sum I - sum T = sum O - sum S, for node a alone
  MissingReport,         // a node in scope sent nothing this interval
};

inline const char* test_name(Test t) {
  switch (t) {
    case Test::OutputMatchesInput: return "1a";
    case Test::GeneratedMatchesOfn: return "1b";
    case Test::FlowBalance: return "1c";
    case Test::MissingReport: return "missing";
  }
  return "?";
}

// (a, b, test). Flow-balance failures have a == b.
struct Failure {
  NodeId a = 0;
  NodeId b = 0;
  Test test = Test::OutputMatchesInput;

  friend bool operator==(const Failure&, const Failure&) = default;
  friend auto operator<=>(const Failure& x, const Failure& y) {
    return std::tie(x.a, x.b, x.test) <=> std::tie(y.a, y.b, y.test);
  }
};

// NAM matrix, credit database and blacklist of one management server.
//
// `members` are the nodes the server manages: it expects their full reports,
// keeps their credit, and may blacklist them. `associates` are out-of-scope
// neighbors of members (other zones' border nodes) whose pair tests with
// members the server also runs, using their partial reports.
class FairnessServerState {
 public:
  FairnessServerState() = default;

  FairnessServerState(NodeId server, std::size_t network_size, const std::vector<NodeId>& members,
                      const std::vector<NodeId>& associates, MpifaParams params)
      : server_(server), n_(network_size), params_(params) {
    params_.validate();
    member_.assign(n_, false);
    in_scope_.assign(n_, false);
    for (NodeId m : members) {
      if (m >= n_) throw UnknownNode("member outside network");
      member_[m] = true;
      in_scope_[m] = true;
    }
    for (NodeId a : associates) {
      if (a >= n_) throw UnknownNode("associate outside network");
      in_scope_[a] = true;
    }
    nam_.assign(n_ * n_, 0.0);
    cdb_.assign(n_, 0.0);
    for (NodeId m : members) cdb_[m] = params_.initial_credit;
    blacklisted_.assign(n_, false);
    removed_.assign(n_, false);
  }

  NodeId server() const { return server_; }
  std::size_t network_size() const { return n_; }
  const MpifaParams& params() const { return params_; }
  bool is_member(NodeId v) const { return v < n_ && member_[v]; }
  bool in_scope(NodeId v) const { return v < n_ && in_scope_[v]; }

  std::vector<NodeId> members() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < n_; ++v)
      if (member_[v]) out.push_back(v);
    return out;
  }
  std::vector<NodeId> scope() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < n_; ++v)
      if (in_scope_[v]) out.push_back(v);
    return out;
  }

  double nam(NodeId i, NodeId j) const { return nam_[index(i, j)]; }
  void set_nam(NodeId i, NodeId j, double v) { nam_[index(i, j)] = v; }

  // Row sum over nodes still active in this server's view: blacklisted
  // nodes have left the network and no longer count against anyone.
  double nam_row_sum(NodeId i) const {
    double s = 0.0;
    for (NodeId j = 0; j < n_; ++j)
      if (!blacklisted_[j] && !removed_[j]) s += nam_[index(i, j)];
    return s;
  }

  double credit(NodeId v) const { return cdb_.at(v); }
  void set_credit(NodeId v, double c) { cdb_.at(v) = c; }

  bool is_blacklisted(NodeId v) const { return v < n_ && blacklisted_[v]; }
  const std::vector<NodeId>& blacklist() const { return blacklist_order_; }

  // Record a blacklist fact learned from outside (e.g. another zone).
  // Only affects which pairs are tested; it never adds to this server's
  // own blacklist decisions.
  void mark_removed(NodeId v) {
    if (v < n_) removed_[v] = true;
  }
  bool is_removed(NodeId v) const { return v < n_ && (blacklisted_[v] || removed_[v]); }

  // Credit changes and blacklist additions since the last sync to the CMS.
  std::map<NodeId, double>& pending_credit_deltas() { return pending_deltas_; }
  std::vector<NodeId>& pending_blacklist() { return pending_blacklist_; }

  friend bool operator==(const FairnessServerState&, const FairnessServerState&) = default;

 private:
  friend void apply_penalties(FairnessServerState&, const std::vector<Failure>&);
  friend std::vector<NodeId> refresh_blacklist(FairnessServerState&);

  std::size_t index(NodeId i, NodeId j) const {
    if (i >= n_ || j >= n_) throw UnknownNode("NAM index outside network");
    return static_cast<std::size_t>(i) * n_ + j;
  }

  NodeId server_ = 0;
  std::size_t n_ = 0;
  MpifaParams params_;
  std::vector<bool> member_;
  std::vector<bool> in_scope_;
  std::vector<double> nam_;
  std::vector<double> cdb_;
  std::vector<bool> blacklisted_;
  std::vector<NodeId> blacklist_order_;
  std::vector<bool> removed_;
  std::map<NodeId, double> pending_deltas_;
  std::vector<NodeId> pending_blacklist_;
};

namespace detail {

// reporter -> the report this server received from it (at most one).
inline std::map<NodeId, const FairnessReport*> index_reports(const std::vector<FairnessReport>& reports) {
  std::map<NodeId, const FairnessReport*> by;
  for (const auto& r : reports) by.emplace(r.reporter, &r);
  return by;
}

inline LedgerCounters counters_of(const std::map<NodeId, const FairnessReport*>& by, NodeId a, NodeId b) {
  auto it = by.find(a);
  if (it == by.end()) return {};
  const auto& e = it->second->snapshot.entries();
  auto jt = e.find(b);
  return jt == e.end() ? LedgerCounters{} : jt->second;
}

}  // namespace detail

// Runs the three tests over one interval's reports. Pairs are adjacent
// (a, b) with at least one member, both in scope and neither removed. A
// member without a report fails every pair test it takes part in plus its
// own flow balance. Associates without a report are taken as having had
// no transactions with this zone. Output is sorted and duplicate-free.
inline std::vector<Failure> verify_reports(const FairnessServerState& state, const Topology& t,
                                           const std::vector<FairnessReport>& reports) {
  const auto by = detail::index_reports(reports);
  auto active = [&](NodeId v) { return state.in_scope(v) && !state.is_removed(v); };
  auto missing = [&](NodeId v) { return state.is_member(v) && by.find(v) == by.end(); };

  std::vector<Failure> out;
  for (NodeId a = 0; a < t.size(); ++a) {
    if (!active(a)) continue;
    for (NodeId b : t.neighbors(a)) {
      if (b <= a || !active(b)) continue;
      if (!state.is_member(a) && !state.is_member(b)) continue;
      if (missing(a) || missing(b)) {
        out.push_back({a, b, Test::MissingReport});
        continue;
      }
      const auto ab = detail::counters_of(by, a, b);
      const auto ba = detail::counters_of(by, b, a);
      if (ab.output != ba.input || ba.output != ab.input) out.push_back({a, b, Test::OutputMatchesInput});
      if (ab.generated != ba.from_origin || ba.generated != ab.from_origin)
        out.push_back({a, b, Test::GeneratedMatchesOfn});
    }
  }
  for (NodeId a = 0; a < t.size(); ++a) {
    if (!state.is_member(a) || state.is_removed(a)) continue;
    auto it = by.find(a);
    if (it == by.end()) {
      out.push_back({a, a, Test::MissingReport});
      continue;
    }
    if (!it->second->full) continue;
    const auto& l = it->second->snapshot;
    if (forwarded_count_from_input(l) != forwarded_count(l)) out.push_back({a, a, Test::FlowBalance});
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Penalty then decay. Each failing pair adds X to both directed entries
// (a node-only failure adds X to its diagonal entry). Then, once per
// penalized node p, NAM[i][p] is divided by Y for every node i in scope
// that did not fail together with p this interval.
inline void apply_penalties(FairnessServerState& s, const std::vector<Failure>& failures) {
  std::set<std::pair<NodeId, NodeId>> pairs;
  std::set<NodeId> solo;
  for (const auto& f : failures) {
    if (f.a == f.b)
      solo.insert(f.a);
    else
      pairs.emplace(std::min(f.a, f.b), std::max(f.a, f.b));
  }
  std::map<NodeId, std::set<NodeId>> partners;
  for (auto [a, b] : pairs) {
    s.nam_[s.index(a, b)] += s.params_.penalty;
    s.nam_[s.index(b, a)] += s.params_.penalty;
    partners[a].insert(b);
    partners[b].insert(a);
  }
  for (NodeId a : solo) {
    s.nam_[s.index(a, a)] += s.params_.penalty;
    partners[a];
  }
  for (const auto& [p, ps] : partners) {
    for (NodeId i = 0; i < s.n_; ++i) {
      if (i == p || ps.count(i) || !s.in_scope_[i]) continue;
      s.nam_[s.index(i, p)] /= s.params_.decay;
    }
  }
}

// CDB[a] += F_a * beta - (sum S) * delta for every member with a full report.
inline void update_credits(FairnessServerState& s, const std::vector<FairnessReport>& reports) {
  const auto& p = s.params();
  for (const auto& r : reports) {
    if (!r.full || !s.is_member(r.reporter) || s.is_blacklisted(r.reporter)) continue;
    const auto totals = r.snapshot.totals();
    const double delta =
        forwarded_count(r.snapshot) * p.forward_reward - static_cast<double>(totals.generated) * p.generation_cost;
    s.set_credit(r.reporter, s.credit(r.reporter) + delta);
    if (delta != 0.0) s.pending_credit_deltas()[r.reporter] += delta;
  }
}

// Members whose active row sum exceeds the threshold are blacklisted for the
// rest of the run. Returns the newly blacklisted nodes, ascending.
inline std::vector<NodeId> refresh_blacklist(FairnessServerState& s) {
  std::vector<NodeId> fresh;
  for (NodeId i = 0; i < s.n_; ++i) {
    if (!s.member_[i] || s.blacklisted_[i]) continue;
    if (s.nam_row_sum(i) > s.params_.nam_threshold) fresh.push_back(i);
  }
  for (NodeId i : fresh) {
    s.blacklisted_[i] = true;
    s.blacklist_order_.push_back(i);
    s.pending_blacklist_.push_back(i);
  }
  return fresh;
}

inline bool admit_traffic(const FairnessServerState& s, NodeId a) {
  return !s.is_blacklisted(a) && s.credit(a) >= s.params().min_credit;
}

}  // namespace meshfair
