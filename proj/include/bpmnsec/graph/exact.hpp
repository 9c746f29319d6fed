#pragma once

#include <functional>
#include <map>
#include <queue>
#include <utility>
#include <vector>

#include "bpmnsec/distribution.hpp"
#include "bpmnsec/graph/attack_graph.hpp"

namespace bpmnsec::graph {

/// Earliest compromise time of every node given per-node local times.
///
/// Entry nodes arrive at their local time. An OR node arrives at its local
/// time plus its earliest parent; an AND node at its local time plus its
/// latest parent, and only once every parent has arrived. Defense nodes,
/// nodes guarded by an enabled defense, and AND nodes without parents never
/// arrive (+inf). Label-setting in (time, node id) order.
/// When `rank` is given it receives each node's finalization index (or
/// SIZE_MAX), which critical_path uses to break zero-time cycles.
inline std::vector<double> exact_arrival(const AttackGraph& g, const std::vector<double>& local,
                                         std::vector<std::size_t>* rank = nullptr) {
  const std::size_t n = g.size();
  if (local.size() != n) throw GraphError(Stage::Simulate, "local time vector does not match graph size");
  std::vector<double> arrival(n, kInfinity);
  std::vector<char> done(n, 0);
  std::vector<char> dead(n, 0);
  std::vector<std::size_t> pending(n, 0);
  std::vector<double> latest(n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    dead[i] = g.node(i).kind == NodeKind::Defense || g.blocked(i);
    pending[i] = g.parents(i).size();
  }

  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  if (rank) rank->assign(n, static_cast<std::size_t>(-1));
  std::size_t order = 0;
  auto offer = [&](NodeId v, double t) {
    if (dead[v] || done[v] || !(t < arrival[v])) return;
    arrival[v] = t;
    pq.emplace(t, v);
  };
  for (NodeId i = 0; i < n; ++i)
    if (g.node(i).kind == NodeKind::Entry) offer(i, local[i]);

  while (!pq.empty()) {
    auto [t, v] = pq.top();
    pq.pop();
    if (done[v] || t > arrival[v]) continue;
    done[v] = 1;
    if (rank) (*rank)[v] = order++;
    for (NodeId c : g.children(v)) {
      const auto& child = g.node(c);
      if (child.kind == NodeKind::And) {
        latest[c] = std::max(latest[c], t);
        if (--pending[c] == 0) offer(c, latest[c] + local[c]);
      } else if (child.kind == NodeKind::Or) {
        offer(c, t + local[c]);
      }
    }
  }
  for (NodeId i = 0; i < n; ++i)
    if (!done[i]) arrival[i] = kInfinity;
  return arrival;
}

/// Local times from deterministic distributions keyed by node.
inline std::vector<double> exact_arrival(const AttackGraph& g, const std::map<NodeId, double>& deterministicTtc) {
  std::vector<double> local(g.size(), 0.0);
  for (NodeId i = 0; i < g.size(); ++i) {
    auto it = deterministicTtc.find(i);
    if (it != deterministicTtc.end()) {
      local[i] = it->second;
    } else if (g.node(i).ttc.is_deterministic()) {
      local[i] = g.node(i).ttc.sample(0.5);
    } else {
      throw GraphError(Stage::Simulate, "node '" + g.node(i).label() + "' has a random TTC and no deterministic value");
    }
  }
  return exact_arrival(g, local);
}

/// Nodes that explain the arrival at `goal`: an OR node follows its earliest
/// parent (lowest id on ties), an AND node all its parents. Post-order, so
/// every node follows its causes. The synthetic entry node is omitted.
/// With `rank` from exact_arrival only parents finalized earlier qualify.
inline std::vector<NodeId> critical_path(const AttackGraph& g, const std::vector<double>& arrival, NodeId goal,
                                         const std::vector<std::size_t>* rank = nullptr) {
  if (goal >= g.size() || !(arrival.at(goal) < kInfinity))
    throw GraphError(Stage::Simulate, "goal not reached in this sample");
  std::vector<NodeId> out;
  std::vector<char> seen(g.size(), 0);
  std::function<void(NodeId)> visit = [&](NodeId v) {
    if (seen[v]) return;
    seen[v] = 1;
    const auto& node = g.node(v);
    if (node.kind == NodeKind::Entry) return;
    const auto& ps = g.parents(v);
    if (node.kind == NodeKind::And) {
      for (NodeId p : ps) visit(p);
    } else {
      NodeId best = g.size();
      for (NodeId p : ps)
        if (arrival[p] < kInfinity && (!rank || (*rank)[p] < (*rank)[v]) &&
            (best == g.size() || arrival[p] < arrival[best]))
          best = p;
      if (best != g.size()) visit(best);
    }
    out.push_back(v);
  };
  visit(goal);
  return out;
}

}  // namespace bpmnsec::graph
