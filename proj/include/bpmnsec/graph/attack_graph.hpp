#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/distribution.hpp"
#include "bpmnsec/enrich/enrich.hpp"
#include "bpmnsec/error.hpp"
#include "bpmnsec/mal/language.hpp"
#include "bpmnsec/mapping/instance_model.hpp"

namespace bpmnsec::graph {

enum class NodeKind { Or, And, Defense, Entry };

inline std::string_view node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Or: return "or";
    case NodeKind::And: return "and";
    case NodeKind::Defense: return "defense";
    case NodeKind::Entry: return "entry";
  }
  return "?";
}

inline NodeKind node_kind_from_name(std::string_view n) {
  if (n == "or") return NodeKind::Or;
  if (n == "and") return NodeKind::And;
  if (n == "defense") return NodeKind::Defense;
  if (n == "entry") return NodeKind::Entry;
  throw GraphError(Stage::Compile, "unknown node kind '" + std::string(n) + "'");
}

using NodeId = std::size_t;

struct StepNode {
  std::string asset;
  std::string step;
  NodeKind kind = NodeKind::Or;
  Distribution ttc = Distribution::instant();
  std::optional<bool> defenseEnabled;  // set on Defense nodes only

  std::string label() const { return asset + ":" + step; }
  bool operator==(const StepNode&) const = default;
};

/// Step-level AND/OR graph. An edge out of a Defense node means the defense
/// blocks its target; every other edge means "compromise enables".
class AttackGraph {
 public:
  static constexpr std::string_view kEntryAsset = "attacker";

  const std::vector<StepNode>& nodes() const { return nodes_; }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  const std::vector<NodeId>& entry_nodes() const { return entries_; }
  const std::vector<NodeId>& goal_nodes() const { return goals_; }
  const StepNode& node(NodeId n) const { return nodes_.at(n); }
  std::size_t size() const { return nodes_.size(); }

  /// Attack parents, ascending.
  const std::vector<NodeId>& parents(NodeId n) const { return parents_.at(n); }
  /// Defense parents, ascending.
  const std::vector<NodeId>& blockers(NodeId n) const { return blockers_.at(n); }
  const std::vector<NodeId>& children(NodeId n) const { return children_.at(n); }

  std::optional<NodeId> find(std::string_view asset, std::string_view step) const {
    auto it = index_.find(std::string(asset) + ":" + std::string(step));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<NodeId> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// True when an enabled defense guards the node.
  bool blocked(NodeId n) const {
    for (auto d : blockers_.at(n))
      if (nodes_[d].defenseEnabled.value_or(false)) return true;
    return false;
  }

  NodeId add_node(StepNode s) {
    const auto label = s.label();
    if (index_.count(label)) throw GraphError(Stage::Compile, "duplicate node '" + label + "'");
    nodes_.push_back(std::move(s));
    parents_.emplace_back();
    blockers_.emplace_back();
    children_.emplace_back();
    index_.emplace(label, nodes_.size() - 1);
    return nodes_.size() - 1;
  }

  /// Adds an edge once; duplicates are ignored.
  void add_edge(NodeId from, NodeId to) {
    if (from >= nodes_.size() || to >= nodes_.size()) throw GraphError(Stage::Compile, "edge endpoint out of range");
    if (nodes_[to].kind == NodeKind::Entry) throw GraphError(Stage::Compile, "entry nodes take no parents");
    auto& list = nodes_[from].kind == NodeKind::Defense ? blockers_[to] : parents_[to];
    auto pos = std::lower_bound(list.begin(), list.end(), from);
    if (pos != list.end() && *pos == from) return;
    list.insert(pos, from);
    children_[from].insert(std::lower_bound(children_[from].begin(), children_[from].end(), to), to);
    edges_.emplace_back(from, to);
  }

  void add_entry(NodeId n) {
    if (std::find(entries_.begin(), entries_.end(), n) == entries_.end()) entries_.push_back(n);
  }
  void add_goal(NodeId n) {
    if (std::find(goals_.begin(), goals_.end(), n) == goals_.end()) goals_.push_back(n);
  }
  void clear_goals() { goals_.clear(); }

  void set_defense(NodeId n, bool enabled) {
    if (nodes_.at(n).kind != NodeKind::Defense)
      throw GraphError(Stage::Compile, "'" + nodes_[n].label() + "' is not a defense");
    nodes_[n].defenseEnabled = enabled;
  }
  void set_ttc(NodeId n, Distribution d) { nodes_.at(n).ttc = d; }

  bool operator==(const AttackGraph& o) const {
    return nodes_ == o.nodes_ && parents_ == o.parents_ && blockers_ == o.blockers_ && entries_ == o.entries_ &&
           goals_ == o.goals_;
  }

 private:
  std::vector<StepNode> nodes_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> blockers_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> entries_;
  std::vector<NodeId> goals_;
  std::map<std::string, NodeId> index_;
};

struct CompileResult {
  AttackGraph graph;
  std::vector<std::string> warnings;
};

/// Instantiates every step of every asset and wires step targets through the
/// model's links. Nodes are numbered by asset id, then declaration order.
inline CompileResult compile(const enrich::EnrichedModel& em, const mal::MalLanguage& lang) {
  const mapping::InstanceModel m = em.combined();
  try {
    mapping::validate_instance(m, lang);
  } catch (const MappingError& e) {
    throw GraphError(Stage::Compile, std::string("model does not validate: ") + e.what());
  }
  CompileResult out;
  auto& g = out.graph;
  for (const auto& a : m.assets) {
    const auto& def = lang.asset(a.type);
    for (const auto& s : def.attackSteps)
      g.add_node({a.id, s.name, s.kind == mal::StepKind::And ? NodeKind::And : NodeKind::Or, s.ttc, std::nullopt});
    for (const auto& d : def.defenses)
      g.add_node({a.id, d.name, NodeKind::Defense, Distribution::instant(),
                  m.enabledDefenses.count(a.id + ":" + d.name) > 0});
  }

  // (asset, association, toRight) -> neighbor ids
  std::map<std::tuple<std::string, std::size_t, bool>, std::vector<std::string>> adj;
  for (const auto& l : m.links) {
    auto idx = mapping::find_association(lang, l.association, m.find(l.left)->type, m.find(l.right)->type);
    adj[{l.left, *idx, true}].push_back(l.right);
    adj[{l.right, *idx, false}].push_back(l.left);
  }

  auto wire = [&](const mapping::AssetInstance& a, NodeId from, const std::vector<mal::ResolvedPath>& targets) {
    for (const auto& rp : targets) {
      std::set<std::string> frontier{a.id};
      for (const auto& hop : rp.hops) {
        std::set<std::string> next;
        for (const auto& id : frontier) {
          auto it = adj.find({id, hop.association, hop.toRight});
          if (it != adj.end()) next.insert(it->second.begin(), it->second.end());
        }
        frontier = std::move(next);
      }
      for (const auto& id : frontier) {
        if (auto to = g.find(id, rp.step)) {
          g.add_edge(from, *to);
        } else {
          out.warnings.push_back("dropped edge " + g.node(from).label() + " -> " + id + ":" + rp.step +
                                 " (no such step on the linked asset)");
        }
      }
    }
  };
  for (const auto& a : m.assets) {
    const auto& def = lang.asset(a.type);
    for (const auto& s : def.attackSteps) wire(a, *g.find(a.id, s.name), s.targets);
    for (const auto& d : def.defenses) wire(a, *g.find(a.id, d.name), d.targets);
  }

  for (const auto& [key, dist] : em.ttc_overrides()) {
    auto n = g.find(key.first, key.second);
    if (!n || g.node(*n).kind == NodeKind::Defense)
      throw GraphError(Stage::Compile, "TTC override targets missing attack step '" + key.first + ":" + key.second + "'");
    g.set_ttc(*n, dist);
  }
  return out;
}

/// Parses `asset:step`, splitting at the last colon.
inline std::pair<std::string, std::string> split_step_ref(std::string_view ref) {
  auto sep = ref.rfind(':');
  if (sep == std::string_view::npos || sep == 0 || sep + 1 == ref.size())
    throw ConfigError("step reference '" + std::string(ref) + "' is not of the form <asset>:<step>");
  return {std::string(ref.substr(0, sep)), std::string(ref.substr(sep + 1))};
}

/// Copy of `g` with a synthetic Entry node feeding `entries` and with `goals`
/// designated. Both lists are `(asset, step)` pairs naming attack steps.
inline AttackGraph attach(const AttackGraph& g, const std::vector<std::pair<std::string, std::string>>& entries,
                          const std::vector<std::pair<std::string, std::string>>& goals) {
  AttackGraph out = g;
  auto resolve = [&](const std::pair<std::string, std::string>& ref, const char* what) {
    auto n = out.find(ref.first, ref.second);
    if (!n) throw GraphError(Stage::Simulate, std::string(what) + " '" + ref.first + ":" + ref.second + "' is not a graph node");
    if (out.node(*n).kind == NodeKind::Defense || out.node(*n).kind == NodeKind::Entry)
      throw GraphError(Stage::Simulate, std::string(what) + " '" + ref.first + ":" + ref.second + "' is not an attack step");
    return *n;
  };
  if (!entries.empty()) {
    auto entry = out.find(AttackGraph::kEntryAsset, "entry");
    if (!entry) entry = out.add_node({std::string(AttackGraph::kEntryAsset), "entry", NodeKind::Entry, Distribution::instant(), std::nullopt});
    out.add_entry(*entry);
    for (const auto& e : entries) out.add_edge(*entry, resolve(e, "entry"));
  }
  out.clear_goals();
  for (const auto& gl : goals) out.add_goal(resolve(gl, "goal"));
  return out;
}

/// Copy with one defense switched.
inline AttackGraph toggle_defense(const AttackGraph& g, NodeId n, bool enabled) {
  AttackGraph out = g;
  out.set_defense(n, enabled);
  return out;
}

inline nlohmann::json graph_to_json(const AttackGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId i = 0; i < g.size(); ++i) {
    const auto& n = g.node(i);
    nlohmann::json j = {{"id", i}, {"asset", n.asset}, {"step", n.step}, {"kind", node_kind_name(n.kind)}, {"ttc", n.ttc}};
    if (n.defenseEnabled) j["defenseEnabled"] = *n.defenseEnabled;
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  return {{"schema", "bpmnsec.graph/1"}, {"nodes", nodes}, {"edges", edges}, {"entryNodes", g.entry_nodes()},
          {"goalNodes", g.goal_nodes()}};
}

inline AttackGraph graph_from_json(const nlohmann::json& j) {
  AttackGraph g;
  for (const auto& n : j.at("nodes")) {
    StepNode s{n.at("asset").get<std::string>(), n.at("step").get<std::string>(),
               node_kind_from_name(n.at("kind").get<std::string>()), n.at("ttc").get<Distribution>(), std::nullopt};
    if (n.contains("defenseEnabled")) s.defenseEnabled = n.at("defenseEnabled").get<bool>();
    g.add_node(std::move(s));
  }
  for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  for (const auto& e : j.at("entryNodes")) g.add_entry(e.get<NodeId>());
  for (const auto& e : j.at("goalNodes")) g.add_goal(e.get<NodeId>());
  return g;
}

namespace detail {

inline std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

/// DOT rendering: OR ellipse, AND double ellipse, Defense box, goals starred.
inline std::string graph_to_dot(const AttackGraph& g) {
  std::ostringstream o;
  o << "digraph attack_graph {\n  rankdir=LR;\n";
  for (NodeId i = 0; i < g.size(); ++i) {
    const auto& n = g.node(i);
    const bool goal = std::find(g.goal_nodes().begin(), g.goal_nodes().end(), i) != g.goal_nodes().end();
    std::string attrs;
    switch (n.kind) {
      case NodeKind::Or: attrs = "shape=ellipse"; break;
      case NodeKind::And: attrs = "shape=ellipse, peripheries=2"; break;
      case NodeKind::Defense: attrs = n.defenseEnabled.value_or(false) ? "shape=box, style=filled, fillcolor=palegreen" : "shape=box"; break;
      case NodeKind::Entry: attrs = "shape=diamond"; break;
    }
    o << "  n" << i << " [label=\"" << (goal ? "★ " : "") << detail::dot_escape(n.label()) << "\", " << attrs << "];\n";
  }
  for (const auto& [a, b] : g.edges()) {
    o << "  n" << a << " -> n" << b;
    if (g.node(a).kind == NodeKind::Defense) o << " [style=dashed, arrowhead=tee]";
    o << ";\n";
  }
  o << "}\n";
  return o.str();
}

}  // namespace bpmnsec::graph
