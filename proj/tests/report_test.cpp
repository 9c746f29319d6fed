#include <gtest/gtest.h>

#include "bpmnsec/bpmn/parser.hpp"
#include "bpmnsec/mal/corelang.hpp"
#include "bpmnsec/mapping/mapper.hpp"
#include "bpmnsec/report/annotate.hpp"
#include "bpmnsec/report/emit.hpp"
#include "bpmnsec/report/report.hpp"
#include "oracles.hpp"

namespace {

using namespace bpmnsec;
using namespace bpmnsec::report;
using testing_support::fixture;

const double inf = kInfinity;

/// A run whose goal `g:x` is reached at the listed times.
VariantRun run(const std::string& variant, const std::string& entry, std::vector<double> arrivals,
               std::vector<std::string> path = {"a:x", "g:x"}) {
  graph::SimResult r;
  r.samples = arrivals.size();
  r.horizonDays = 10.0;
  r.seed = 1;
  graph::GoalResult gr;
  std::size_t within = 0;
  for (double a : arrivals)
    if (a <= 10.0) ++within;
  gr.arrivalSamples = std::move(arrivals);
  gr.successRateAtHorizon = static_cast<double>(within) / static_cast<double>(gr.arrivalSamples.size());
  if (within) gr.pathCounts[path] = within;
  gr.criticalPath = within ? path : std::vector<std::string>{};
  r.perGoal["g:x"] = gr;
  r.stepRates["g:x"] = gr.successRateAtHorizon;
  r.stepRates["a:x"] = 1.0;
  return {variant, entry, r};
}

TEST(Aggregate, WeightsVariantsAndAveragesEntrySets) {
  const std::vector<VariantRun> runs{run("v0", "e1", {1, 2, 3, 50}), run("v1", "e1", {inf, inf, inf, 4}),
                                     run("v0", "e2", {1, 1, 1, 1}), run("v1", "e2", {inf, inf, inf, inf})};
  const auto r = aggregate(runs, {{"v0", 0.25}, {"v1", 0.75}});
  const auto& g = r.aggregated.at("g:x");
  // v0: (0.75 + 1) / 2, v1: (0.25 + 0) / 2.
  EXPECT_NEAR(g.successRate, 0.25 * 0.875 + 0.75 * 0.125, 1e-12);
  EXPECT_NEAR(g.minVariantRate, 0.125, 1e-12);
  EXPECT_NEAR(g.maxVariantRate, 0.875, 1e-12);
  EXPECT_NEAR(r.stepRates.at("g:x"), g.successRate, 1e-12);
  EXPECT_EQ(r.entrySets, (std::vector<std::string>{"e1", "e2"}));
  EXPECT_EQ(r.perVariant.at("v1").at("e1").at("g:x").successRate, 0.25);
  ASSERT_EQ(r.pathDistribution.at("g:x").size(), 1u);
  EXPECT_NEAR(r.pathDistribution.at("g:x")[0].share, 1.0, 1e-12);
  EXPECT_LE(g.p5, g.p50);
  EXPECT_LE(g.p50, g.p95);
}

TEST(Aggregate, PathSharesAndContainment) {
  std::vector<VariantRun> runs{run("v0", "e", {1, 1, 1, 1}, {"a:x", "g:x"}), run("v1", "e", {1, 1, 1, 1}, {"a:x", "b:x", "g:x"})};
  const auto r = aggregate(runs, {{"v0", 0.5}, {"v1", 0.5}});
  const auto& top = r.topPaths.at("g:x");
  ASSERT_EQ(top.size(), 2u);
  // The shorter path is contained in both observed paths.
  EXPECT_EQ(top[0].path, (std::vector<std::string>{"a:x", "g:x"}));
  EXPECT_NEAR(top[0].share, 1.0, 1e-12);
  EXPECT_NEAR(top[1].share, 0.5, 1e-12);
}

TEST(Aggregate, RejectsInconsistentRuns) {
  EXPECT_THROW(aggregate({run("v0", "e", {1})}, {{"v0", 0.5}}), ReportError);
  EXPECT_THROW(aggregate({run("v0", "e", {1})}, {{"v1", 1.0}}), ReportError);
  EXPECT_THROW(aggregate({run("v0", "e", {1}), run("v0", "e", {1})}, {{"v0", 1.0}}), ReportError);
  EXPECT_THROW(aggregate({run("v0", "e1", {1}), run("v1", "e2", {1})}, {{"v0", 0.5}, {"v1", 0.5}}), ReportError);
  EXPECT_TRUE(aggregate({}, {}).aggregated.empty());
}

TEST(Aggregate, UnreachedGoalSerializesNull) {
  const auto r = aggregate({run("v0", "e", {inf, inf})}, {{"v0", 1.0}});
  const auto j = report_to_json(r);
  EXPECT_TRUE(j.at("aggregated").at("g:x").at("p50").is_null());
  EXPECT_EQ(j.at("aggregated").at("g:x").at("successRate"), 0.0);
}

TEST(ReportJson, RoundTrip) {
  auto r = aggregate({run("v0", "e", {1, 2, inf}), run("v1", "e", {3, 4, 5})}, {{"v0", 0.4}, {"v1", 0.6}});
  r.variantLabels["v0"] = "tomcat 9.0.30";
  r.perBpmnElement["T"] = ElementRisk{"Task, \"quoted\"", "ServiceTask", 0.5, {"T/app"}};
  r.pathShare["g:x"]["T"] = 0.25;
  const auto text = emit_json(r);
  EXPECT_EQ(text.back(), '\n');
  const auto back = parse_report(text);
  EXPECT_EQ(emit_json(back), text);
  EXPECT_THROW(parse_report("{\"schema\": \"other\"}"), ReportError);
  EXPECT_THROW(parse_report("not json"), ReportError);
}

TEST(ReportCsv, HeaderQuotingAndLineEnds) {
  auto r = aggregate({run("v0", "e", {1, 2})}, {{"v0", 1.0}});
  r.perBpmnElement["T1"] = ElementRisk{"Task, \"one\"", "ServiceTask", 0.5, {}};
  r.perBpmnElement["T2"] = ElementRisk{"plain", "ScriptTask", 0.0, {}};
  r.pathShare["g:x"]["T1"] = 0.25;
  const auto csv = emit_csv(r);
  EXPECT_EQ(csv,
            "element_id,element_name,element_kind,goal,risk,path_share\r\n"
            "T1,\"Task, \"\"one\"\"\",ServiceTask,g:x,0.5,0.25\r\n"
            "T2,plain,ScriptTask,g:x,0.0,0.0\r\n");
}

TEST(ReportDot, DrawsMostFrequentPath) {
  auto r = aggregate({run("v0", "e", {1, 2}, {"a:x", "g:x"})}, {{"v0", 1.0}});
  mapping::InstanceModel m;
  m.assets = {{"a", "Application", "Engine", {"E"}}, {"g", "Data", "Invoice", {"D"}}};
  m.links = {{"DataHolding", "a", "g"}};
  const auto dot = emit_dot(r, m);
  EXPECT_NE(dot.find("digraph attack_path"), std::string::npos);
  EXPECT_NE(dot.find("★ Invoice"), std::string::npos);
  EXPECT_NE(dot.find("a0 -> a1 [color=red"), std::string::npos);
  EXPECT_NE(dot.find("style=dashed"), std::string::npos);
  EXPECT_EQ(emit(r, Format::Dot, m), dot);
  EXPECT_EQ(emit_dot(aggregate({run("v0", "e", {inf})}, {{"v0", 1.0}}), m), "digraph attack_path {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n}\n");
}

TEST(Annotate, RiskIsMaxAccessRateOverTracedAssets) {
  const auto pm = bpmn::parse_bpmn_file(fixture("italy-invoicing.bpmn"));
  const auto& lang = mal::corelang_subset();
  const auto mapped = mapping::map_process(pm, lang);
  Report r;
  r.stepRates["Participant_Integration/app:fullAccess"] = 0.7;
  r.stepRates["MessageFlow_Request/conn:manInTheMiddle"] = 0.9;
  r.stepRates["MessageFlow_Request/app:fullAccess"] = 0.2;
  r.stepRates["Message_SdIProd/data:write"] = 0.4;
  r.stepRates["Message_SdIProd/data:read"] = 0.95;  // not the access step
  r.pathDistribution["g"] = {{{"MessageFlow_Request/conn:manInTheMiddle", "Message_SdIProd/data:write"}, 0.6},
                             {{"Participant_Integration/app:fullAccess"}, 0.4}};
  const auto a = annotate(pm, mapped.model, mapped.trace, lang, r);
  EXPECT_EQ(a.sourceDigest, pm.sourceDigest);
  EXPECT_DOUBLE_EQ(a.elements.at("Participant_Integration").risk, 0.7);
  EXPECT_DOUBLE_EQ(a.elements.at("Process_Invoicing").risk, 0.7);
  EXPECT_DOUBLE_EQ(a.elements.at("MessageFlow_Request").risk, 0.9);
  EXPECT_DOUBLE_EQ(a.elements.at("Message_SdIProd").risk, 0.4);
  EXPECT_DOUBLE_EQ(a.elements.at("Gateway_Mode").risk, 0.0);
  EXPECT_EQ(a.elements.at("MessageFlow_Request").kind, "MessageFlow");
  EXPECT_NEAR(r.pathShare.at("g").at("MessageFlow_Request"), 0.6, 1e-12);
  EXPECT_NEAR(r.pathShare.at("g").at("Participant_Integration"), 0.4, 1e-12);
  EXPECT_EQ(r.perBpmnElement.size(), a.elements.size());
  const auto j = annotations_to_json(a);
  EXPECT_EQ(j.at("schema"), "bpmnsec.annotations/1");

  EXPECT_EQ(access_step_for(lang, "Credentials"), "write");
  EXPECT_EQ(access_step_for(lang, "Exploit"), "use");
}

}  // namespace
