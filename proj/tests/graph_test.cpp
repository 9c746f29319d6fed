#include <gtest/gtest.h>

#include <array>
#include <random>

#include "bpmnsec/bpmn/parser.hpp"
#include "bpmnsec/enrich/enrich.hpp"
#include "bpmnsec/graph/attack_graph.hpp"
#include "bpmnsec/graph/exact.hpp"
#include "bpmnsec/mal/corelang.hpp"
#include "bpmnsec/mapping/mapper.hpp"
#include "oracles.hpp"

namespace {

using namespace bpmnsec;
using namespace bpmnsec::graph;
using testing_support::fixture;
using testing_support::slurp;

StepNode node(const std::string& asset, NodeKind kind = NodeKind::Or, Distribution ttc = Distribution::instant()) {
  return {asset, "s", kind, ttc, kind == NodeKind::Defense ? std::optional<bool>(false) : std::nullopt};
}

NodeId entry(AttackGraph& g) {
  auto e = g.add_node({"attacker", "entry", NodeKind::Entry, Distribution::instant(), std::nullopt});
  g.add_entry(e);
  return e;
}

std::vector<double> locals(const AttackGraph& g) {
  std::vector<double> l(g.size());
  for (NodeId i = 0; i < g.size(); ++i) l[i] = g.node(i).ttc.sample(0.5);
  return l;
}

TEST(Exact, Chain) {
  AttackGraph g;
  const auto e = entry(g);
  const auto a = g.add_node(node("a", NodeKind::Or, Distribution::constant(2)));
  const auto b = g.add_node(node("b", NodeKind::Or, Distribution::constant(3)));
  g.add_edge(e, a);
  g.add_edge(a, b);
  const auto t = exact_arrival(g, locals(g));
  EXPECT_EQ(t, (std::vector<double>{0, 2, 5}));
}

TEST(Exact, AndWaitsForAllParents) {
  AttackGraph g;
  const auto e = entry(g);
  const auto a = g.add_node(node("a", NodeKind::Or, Distribution::constant(1)));
  const auto b = g.add_node(node("b", NodeKind::Or, Distribution::constant(4)));
  const auto c = g.add_node(node("c", NodeKind::And, Distribution::constant(0.5)));
  const auto orphan = g.add_node(node("orphan", NodeKind::And));
  g.add_edge(e, a);
  g.add_edge(e, b);
  g.add_edge(a, c);
  g.add_edge(b, c);
  auto t = exact_arrival(g, locals(g));
  EXPECT_DOUBLE_EQ(t[c], 4.5);
  EXPECT_TRUE(std::isinf(t[orphan]));

  const auto d = g.add_node(node("d", NodeKind::Defense));
  g.add_edge(d, b);
  EXPECT_DOUBLE_EQ(exact_arrival(g, locals(g))[c], 4.5);  // disabled defense
  g.set_defense(d, true);
  t = exact_arrival(g, locals(g));
  EXPECT_TRUE(std::isinf(t[b]));
  EXPECT_TRUE(std::isinf(t[c]));
  EXPECT_TRUE(std::isinf(t[d]));
}

TEST(Exact, ZeroTimeCycleTerminates) {
  AttackGraph g;
  const auto e = entry(g);
  const auto a = g.add_node(node("a"));
  const auto b = g.add_node(node("b"));
  const auto c = g.add_node(node("c", NodeKind::And));
  g.add_edge(e, a);
  g.add_edge(a, b);
  g.add_edge(b, a);
  g.add_edge(b, c);
  g.add_edge(c, b);
  std::vector<std::size_t> rank;
  const auto t = exact_arrival(g, locals(g), &rank);
  EXPECT_EQ(t[b], 0.0);
  EXPECT_EQ(t[c], 0.0);
  const auto path = critical_path(g, t, c, &rank);
  EXPECT_EQ(path, (std::vector<NodeId>{a, b, c}));
}

TEST(Exact, MatchesFixedPointOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto g = testing_support::random_dag(rng);
    const auto l = locals(g);
    ASSERT_EQ(exact_arrival(g, l), testing_support::fixed_point_arrival(g, l)) << "graph " << i;
  }
}

TEST(CriticalPath, Diamond) {
  AttackGraph g;
  const auto e = entry(g);
  const auto x = g.add_node(node("x", NodeKind::Or, Distribution::constant(1)));
  const auto y = g.add_node(node("y", NodeKind::Or, Distribution::constant(3)));
  const auto z = g.add_node(node("z", NodeKind::Or, Distribution::constant(1)));
  for (auto p : {x, y}) {
    g.add_edge(e, p);
    g.add_edge(p, z);
  }
  auto t = exact_arrival(g, locals(g));
  EXPECT_EQ(critical_path(g, t, z), (std::vector<NodeId>{x, z}));

  AttackGraph h;
  const auto he = entry(h);
  const auto hx = h.add_node(node("x", NodeKind::Or, Distribution::constant(1)));
  const auto hy = h.add_node(node("y", NodeKind::Or, Distribution::constant(3)));
  const auto hz = h.add_node(node("z", NodeKind::And, Distribution::constant(1)));
  for (auto p : {hx, hy}) {
    h.add_edge(he, p);
    h.add_edge(p, hz);
  }
  t = exact_arrival(h, locals(h));
  EXPECT_EQ(critical_path(h, t, hz), (std::vector<NodeId>{hx, hy, hz}));
  EXPECT_DOUBLE_EQ(t[hz], 4.0);
}

TEST(CriticalPath, UnreachedGoalThrows) {
  AttackGraph g;
  entry(g);
  const auto lone = g.add_node(node("lone"));
  const auto t = exact_arrival(g, locals(g));
  EXPECT_THROW(critical_path(g, t, lone), GraphError);
}

TEST(Graph, ToggleDefenseIsAnInvolution) {
  std::mt19937_64 rng(11);
  testing_support::RandomGraphOptions o;
  o.defenseProbability = 0.3;
  for (int i = 0; i < 100; ++i) {
    const auto g = testing_support::random_dag(rng, o);
    for (NodeId n = 0; n < g.size(); ++n) {
      if (g.node(n).kind != NodeKind::Defense) continue;
      const bool was = *g.node(n).defenseEnabled;
      EXPECT_EQ(toggle_defense(toggle_defense(g, n, !was), n, was), g);
    }
  }
}

TEST(Graph, RejectsMalformedEdits) {
  AttackGraph g;
  const auto e = entry(g);
  const auto a = g.add_node(node("a"));
  EXPECT_THROW(g.add_node(node("a")), GraphError);
  EXPECT_THROW(g.add_edge(a, e), GraphError);
  EXPECT_THROW(g.add_edge(a, 99), GraphError);
  EXPECT_THROW(g.set_defense(a, true), GraphError);
  g.add_edge(e, a);
  g.add_edge(e, a);
  EXPECT_EQ(g.edges().size(), 1u);
}

TEST(Graph, AttachValidatesReferences) {
  AttackGraph g;
  g.add_node(node("a"));
  const auto d = g.add_node(node("d", NodeKind::Defense));
  (void)d;
  EXPECT_THROW(attach(g, {{"a", "s"}}, {{"nope", "s"}}), GraphError);
  EXPECT_THROW(attach(g, {{"d", "s"}}, {{"a", "s"}}), GraphError);
  const auto h = attach(g, {{"a", "s"}}, {{"a", "s"}});
  ASSERT_EQ(h.entry_nodes().size(), 1u);
  EXPECT_EQ(h.node(h.entry_nodes()[0]).asset, "attacker");
  EXPECT_EQ(h.goal_nodes().size(), 1u);
  EXPECT_THROW(split_step_ref("nocolon"), ConfigError);
  EXPECT_EQ(split_step_ref("a/b:c:d"), (std::pair<std::string, std::string>{"a/b:c", "d"}));
}

TEST(Graph, JsonRoundTripAndDot) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    auto g = testing_support::random_dag(rng);
    g.add_goal(g.size() - 1);
    EXPECT_EQ(graph_from_json(graph_to_json(g)), g);
  }
  AttackGraph g;
  const auto e = entry(g);
  const auto a = g.add_node(node("a", NodeKind::And));
  g.add_edge(e, a);
  g.add_goal(a);
  const auto dot = graph_to_dot(g);
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("★"), std::string::npos);
  EXPECT_NE(dot.find("peripheries=2"), std::string::npos);
}

mal::MalLanguage listing_language() {
  std::array<mal::UnresolvedLanguage, 2> units{mal::parse_mal({slurp(fixture("listing1.mal")), "listing1.mal"}),
                                               mal::parse_mal({"category System { asset Data { | read } }", "stub"})};
  return mal::resolve_language(units);
}

TEST(Compile, ListingModel) {
  const auto lang = listing_language();
  mapping::InstanceModel m;
  m.assets = {{"c", "Connection", "c", {"synthetic:test"}},
              {"app", "Application", "app", {"synthetic:test"}},
              {"u", "User", "u", {"synthetic:test"}},
              {"pw", "Password", "pw", {"synthetic:test"}}};
  m.links = {{"Acc", "c", "app"}, {"Cred", "app", "pw"}, {"Cred", "u", "pw"}};
  const auto g = compile(enrich::unenriched(m), lang).graph;
  auto id = [&](const char* label) { return *g.find(label); };
  EXPECT_EQ(g.node(id("app:access")).kind, NodeKind::And);
  auto parents = [&](const char* label) {
    const auto& ps = g.parents(id(label));
    return std::set<NodeId>(ps.begin(), ps.end());
  };
  EXPECT_EQ(parents("app:access"), (std::set<NodeId>{id("app:authenticate"), id("app:connect")}));
  EXPECT_EQ(parents("pw:obtain"), (std::set<NodeId>{id("u:phish")}));
  EXPECT_EQ(parents("app:authenticate"), (std::set<NodeId>{id("app:guessedPwd"), id("pw:obtain")}));
  EXPECT_EQ(g.node(id("u:phish")).ttc, Distribution::exponential(0.1));

  // Entry at the connection and at phishing; access needs both branches.
  auto h = attach(g, {{"c", "access"}, {"u", "attemptPhishing"}}, {{"app", "access"}});
  std::map<NodeId, double> fixed{{*h.find("u:phish"), 10.0}, {*h.find("app:guessedPwd"), 50.0}};
  const auto t = exact_arrival(h, fixed);
  EXPECT_DOUBLE_EQ(t[*h.find("app:access")], 10.0);
}

TEST(Compile, CaseStudyModel) {
  const auto pm = bpmn::parse_bpmn_file(fixture("italy-invoicing.bpmn"));
  const auto mapped = mapping::map_process(pm, mal::corelang_subset());
  const auto r = compile(enrich::unenriched(mapped.model), mal::corelang_subset());
  const auto& g = r.graph;
  const auto mitm = g.find("MessageFlow_Request/conn:manInTheMiddle");
  const auto auth = g.find("MessageFlow_Request/conn:senderAuthentication");
  ASSERT_TRUE(mitm && auth);
  EXPECT_EQ(g.node(*auth).kind, NodeKind::Defense);
  EXPECT_FALSE(g.blockers(*mitm).empty());
  // Every asset contributes its steps; no node points at itself.
  for (const auto& [from, to] : g.edges()) EXPECT_NE(from, to);
  EXPECT_EQ(compile(enrich::unenriched(mapped.model), mal::corelang_subset()).graph, g);
}

}  // namespace
