#include <gtest/gtest.h>

#include <random>

#include "bpmnsec/graph/simulate.hpp"
#include "oracles.hpp"

namespace {

using namespace bpmnsec;
using namespace bpmnsec::graph;

constexpr double kOneMinusInvE = 0.6321205588285577;  // 1 - e^-1

// NaN percentiles make field-wise equality useless; compare serialized forms.
std::string dump(const SimResult& r) { return sim_result_to_json(r, true).dump(); }

AttackGraph single_exp_edge(double rate) {
  AttackGraph g;
  g.add_node({"src", "s", NodeKind::Or, Distribution::instant(), std::nullopt});
  const auto t = g.add_node({"dst", "s", NodeKind::Or, Distribution::exponential(rate), std::nullopt});
  g.add_edge(0, t);
  return g;
}

SimConfig goal_config(std::vector<StepRef> entry, std::vector<StepRef> goals, std::size_t samples) {
  SimConfig c;
  c.attackerEntry = std::move(entry);
  c.goals = std::move(goals);
  c.samples = samples;
  return c;
}

TEST(Simulate, ExponentialCalibration) {
  auto cfg = goal_config({{"src", "s"}}, {{"dst", "s"}}, 100000);
  cfg.horizonDays = 10.0;
  const auto r = simulate(single_exp_edge(0.1), cfg);
  EXPECT_NEAR(r.perGoal.at("dst:s").successRateAtHorizon, kOneMinusInvE, 0.02);
  // Median of Exp(0.1) is ln 2 / 0.1.
  EXPECT_NEAR(r.perGoal.at("dst:s").p50, std::log(2.0) / 0.1, 0.2);
  EXPECT_DOUBLE_EQ(r.stepRates.at("src:s"), 1.0);
  EXPECT_FALSE(r.stepRates.count("attacker:entry"));
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(5);
  testing_support::RandomGraphOptions o;
  o.exponential = true;
  for (int i = 0; i < 20; ++i) {
    const auto g = testing_support::random_dag(rng, o);
    std::vector<StepRef> goals;
    for (NodeId n = 1; n < g.size(); ++n)
      if (g.node(n).kind != NodeKind::Defense) goals.emplace_back(g.node(n).asset, g.node(n).step);
    if (goals.empty()) continue;
    auto cfg = goal_config({}, goals, 500);
    cfg.horizonDays = 20.0;
    const auto one = simulate(g, cfg);
    cfg.threads = 4;
    EXPECT_EQ(dump(simulate(g, cfg)), dump(one));
    cfg.threads = 0;
    EXPECT_EQ(dump(simulate(g, cfg)), dump(one));
  }
}

TEST(Simulate, SeedSelectsStream) {
  auto cfg = goal_config({{"src", "s"}}, {{"dst", "s"}}, 1000);
  const auto g = single_exp_edge(0.1);
  const auto a = simulate(g, cfg);
  EXPECT_EQ(dump(simulate(g, cfg)), dump(a));
  cfg.seed = 43;
  EXPECT_NE(simulate(g, cfg).perGoal.at("dst:s").arrivalSamples, a.perGoal.at("dst:s").arrivalSamples);
}

TEST(Simulate, DeterministicGraphMatchesExact) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto g = testing_support::random_dag(rng);
    std::vector<StepRef> goals;
    for (NodeId n = 1; n < g.size(); ++n)
      if (g.node(n).kind != NodeKind::Defense) goals.emplace_back(g.node(n).asset, g.node(n).step);
    if (goals.empty()) continue;
    const auto r = simulate(g, goal_config({}, goals, 1));
    std::vector<double> local(g.size());
    for (NodeId n = 0; n < g.size(); ++n) local[n] = g.node(n).ttc.sample(0.5);
    const auto oracle = testing_support::fixed_point_arrival(g, local);
    for (const auto& [asset, step] : goals)
      EXPECT_EQ(r.perGoal.at(asset + ":" + step).arrivalSamples[0], oracle[*g.find(asset, step)]);
  }
}

TEST(Simulate, SummaryStatistics) {
  AttackGraph g;
  g.add_node({"src", "s", NodeKind::Or, Distribution::instant(), std::nullopt});
  g.add_node({"mid", "s", NodeKind::Or, Distribution::constant(3), std::nullopt});
  g.add_node({"dst", "s", NodeKind::Or, Distribution::exponential(0.5), std::nullopt});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  auto cfg = goal_config({{"src", "s"}}, {{"mid", "s"}, {"dst", "s"}}, 2000);
  const auto r = simulate(g, cfg);
  const auto& mid = r.perGoal.at("mid:s");
  EXPECT_EQ(mid.successRateAtHorizon, 1.0);
  EXPECT_EQ(mid.p5, 3.0);
  EXPECT_EQ(mid.p95, 3.0);
  EXPECT_EQ(mid.criticalPath, (std::vector<std::string>{"src:s", "mid:s"}));
  const auto& dst = r.perGoal.at("dst:s");
  EXPECT_LE(dst.p5, dst.p50);
  EXPECT_LE(dst.p50, dst.p95);
  std::size_t counted = 0;
  for (const auto& [path, n] : dst.pathCounts) counted += n;
  EXPECT_EQ(static_cast<double>(counted) / 2000.0, dst.successRateAtHorizon);
}

TEST(Simulate, UnreachableGoalHasNanPercentiles) {
  AttackGraph g;
  g.add_node({"src", "s", NodeKind::Or, Distribution::instant(), std::nullopt});
  g.add_node({"dst", "s", NodeKind::Or, Distribution::unreachable(), std::nullopt});
  g.add_edge(0, 1);
  const auto r = simulate(g, goal_config({{"src", "s"}}, {{"dst", "s"}}, 10));
  EXPECT_EQ(r.perGoal.at("dst:s").successRateAtHorizon, 0.0);
  EXPECT_TRUE(std::isnan(r.perGoal.at("dst:s").p50));
  EXPECT_TRUE(r.perGoal.at("dst:s").criticalPath.empty());
}

TEST(Simulate, RejectsBadConfig) {
  const auto g = single_exp_edge(1.0);
  auto cfg = goal_config({{"src", "s"}}, {{"dst", "s"}}, 0);
  EXPECT_THROW(simulate(g, cfg), GraphError);
  cfg.samples = 10;
  cfg.horizonDays = 0.0;
  EXPECT_THROW(simulate(g, cfg), GraphError);
  cfg.horizonDays = 1.0;
  cfg.goals.clear();
  EXPECT_THROW(simulate(g, cfg), GraphError);
  try {
    simulate(g, goal_config({{"src", "s"}}, {{"nowhere", "s"}}, 10));
  } catch (const Error& e) {
    EXPECT_EQ(e.stage(), Stage::Simulate);
  }
}

TEST(Simulate, JsonRoundTrip) {
  auto cfg = goal_config({{"src", "s"}}, {{"dst", "s"}}, 300);
  cfg.horizonDays = 5.0;
  const auto r = simulate(single_exp_edge(0.05), cfg);
  EXPECT_EQ(dump(sim_result_from_json(sim_result_to_json(r, true))), dump(r));
  const auto brief = sim_result_to_json(r, false);
  EXPECT_FALSE(brief.at("perGoal").at("dst:s").contains("arrivalSamples"));
}

}  // namespace
