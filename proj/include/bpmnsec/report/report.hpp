#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/error.hpp"
#include "bpmnsec/graph/simulate.hpp"

namespace bpmnsec::report {

inline constexpr std::string_view kReportSchema = "bpmnsec.report/1";
inline constexpr std::size_t kTopPathsPerGoal = 5;
inline constexpr std::size_t kPathCandidates = 256;

/// One simulation: a configuration variant under one attacker entry set.
struct VariantRun {
  std::string variantId;
  std::string entrySet;
  graph::SimResult result;
};

struct GoalSummary {
  double successRate = 0.0;
  double p5 = std::nan("");
  double p50 = std::nan("");
  double p95 = std::nan("");
  std::vector<std::string> criticalPath;
};

struct AggregatedGoal {
  double successRate = 0.0;
  double p5 = std::nan("");
  double p50 = std::nan("");
  double p95 = std::nan("");
  double minVariantRate = 0.0;
  double maxVariantRate = 0.0;
};

struct WeightedPath {
  std::vector<std::string> path;
  double share = 0.0;  // of weighted successful samples
};

struct ElementRisk {
  std::string name;
  std::string kind;
  double risk = 0.0;
  std::vector<std::string> assets;
};

struct Report {
  std::size_t samples = 0;
  double horizonDays = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> variantWeights;
  std::map<std::string, std::string> variantLabels;
  std::vector<std::string> entrySets;
  /// variant -> entry set -> goal -> summary
  std::map<std::string, std::map<std::string, std::map<std::string, GoalSummary>>> perVariant;
  std::map<std::string, AggregatedGoal> aggregated;
  /// Weighted reach rate of every attack step.
  std::map<std::string, double> stepRates;
  /// goal -> distinct critical paths with their weighted share.
  std::map<std::string, std::vector<WeightedPath>> pathDistribution;
  /// goal -> most frequent sub-paths; `share` is the fraction of successful
  /// samples whose critical path contains the path's node set.
  std::map<std::string, std::vector<WeightedPath>> topPaths;
  std::map<std::string, ElementRisk> perBpmnElement;
  /// goal -> element -> fraction of successful samples whose critical path
  /// touches an asset of the element.
  std::map<std::string, std::map<std::string, double>> pathShare;
};

namespace detail {

/// Deterministic weighted resample: `k` evenly spaced order statistics.
inline void resample_into(std::vector<double>& pool, const std::vector<double>& sorted, std::size_t k) {
  if (sorted.empty()) return;
  for (std::size_t i = 0; i < k; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(q * static_cast<double>(sorted.size())));
    pool.push_back(sorted[idx]);
  }
}

}  // namespace detail

/// Combines runs. Every run's variant needs a weight; weights must sum to one
/// and every variant must be run under every entry set. Rates are weighted
/// over variants and averaged over entry sets.
inline Report aggregate(const std::vector<VariantRun>& runs, const std::map<std::string, double>& weights) {
  Report r;
  if (runs.empty()) return r;
  double sum = 0.0;
  for (const auto& [id, w] : weights) {
    if (!(w >= 0.0)) throw ReportError("variant '" + id + "' has a negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ReportError("variant weights sum to " + nlohmann::json(sum).dump() + ", not 1");
  std::set<std::string> entrySets, variants;
  std::map<std::pair<std::string, std::string>, const VariantRun*> byKey;
  for (const auto& run : runs) {
    if (!weights.count(run.variantId)) throw ReportError("missing weight for variant '" + run.variantId + "'");
    if (!byKey.emplace(std::pair{run.variantId, run.entrySet}, &run).second)
      throw ReportError("duplicate run for variant '" + run.variantId + "' and entry set '" + run.entrySet + "'");
    entrySets.insert(run.entrySet);
    variants.insert(run.variantId);
  }
  for (const auto& v : variants)
    for (const auto& e : entrySets)
      if (!byKey.count({v, e})) throw ReportError("variant '" + v + "' has no run for entry set '" + e + "'");

  const auto& first = runs.front().result;
  r.samples = first.samples;
  r.horizonDays = first.horizonDays;
  r.seed = first.seed;
  r.entrySets.assign(entrySets.begin(), entrySets.end());
  for (const auto& v : variants) r.variantWeights[v] = weights.at(v);
  const double perEntry = 1.0 / static_cast<double>(entrySets.size());
  auto runWeight = [&](const VariantRun& run) { return weights.at(run.variantId) * perEntry; };

  std::set<std::string> goals;
  for (const auto& run : runs)
    for (const auto& [g, _] : run.result.perGoal) goals.insert(g);

  for (const auto& run : runs) {
    auto& dst = r.perVariant[run.variantId][run.entrySet];
    for (const auto& [g, gr] : run.result.perGoal)
      dst[g] = GoalSummary{gr.successRateAtHorizon, gr.p5, gr.p50, gr.p95, gr.criticalPath};
    for (const auto& [label, rate] : run.result.stepRates) r.stepRates[label] += runWeight(run) * rate;
  }

  std::size_t poolSize = 0;
  for (const auto& run : runs) poolSize = std::max(poolSize, run.result.samples);

  for (const auto& g : goals) {
    AggregatedGoal ag;
    std::map<std::string, double> variantRate;
    std::vector<double> pool;
    std::map<std::vector<std::string>, double> dist;
    double successMass = 0.0;
    for (const auto& run : runs) {
      auto it = run.result.perGoal.find(g);
      if (it == run.result.perGoal.end()) throw ReportError("run of variant '" + run.variantId + "' lacks goal '" + g + "'");
      const auto& gr = it->second;
      const double w = runWeight(run);
      ag.successRate += w * gr.successRateAtHorizon;
      variantRate[run.variantId] += perEntry * gr.successRateAtHorizon;
      std::vector<double> finite;
      for (double a : gr.arrivalSamples)
        if (std::isfinite(a)) finite.push_back(a);
      std::sort(finite.begin(), finite.end());
      const double frac = gr.arrivalSamples.empty() ? 0.0 : static_cast<double>(finite.size()) / static_cast<double>(gr.arrivalSamples.size());
      detail::resample_into(pool, finite, static_cast<std::size_t>(std::llround(w * frac * static_cast<double>(poolSize))));
      const double samples = static_cast<double>(run.result.samples);
      for (const auto& [path, count] : gr.pathCounts) dist[path] += w * static_cast<double>(count) / samples;
      successMass += w * gr.successRateAtHorizon;
    }
    std::sort(pool.begin(), pool.end());
    ag.p5 = graph::detail::percentile(pool, 0.05);
    ag.p50 = graph::detail::percentile(pool, 0.50);
    ag.p95 = graph::detail::percentile(pool, 0.95);
    ag.minVariantRate = kInfinity;
    ag.maxVariantRate = -kInfinity;
    for (const auto& [v, rate] : variantRate) {
      ag.minVariantRate = std::min(ag.minVariantRate, rate);
      ag.maxVariantRate = std::max(ag.maxVariantRate, rate);
    }
    // Guard the bound check against rounding in the weighted sum.
    ag.successRate = std::clamp(ag.successRate, ag.minVariantRate, ag.maxVariantRate);
    r.aggregated[g] = ag;

    auto& pd = r.pathDistribution[g];
    if (successMass > 0.0)
      for (const auto& [path, mass] : dist) pd.push_back({path, mass / successMass});

    // Candidate sub-paths are the most common observed paths, scored by
    // containment over all observed paths.
    std::vector<std::set<std::string>> sets;
    for (const auto& p : pd) sets.emplace_back(p.path.begin(), p.path.end());
    std::vector<std::size_t> order(pd.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pd[a].share > pd[b].share; });
    if (order.size() > kPathCandidates) order.resize(kPathCandidates);
    std::vector<WeightedPath> top;
    for (auto c : order) {
      double share = 0.0;
      for (std::size_t o = 0; o < pd.size(); ++o)
        if (std::includes(sets[o].begin(), sets[o].end(), sets[c].begin(), sets[c].end())) share += pd[o].share;
      top.push_back({pd[c].path, std::min(1.0, share)});
    }
    std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
      return a.share != b.share ? a.share > b.share : a.path < b.path;
    });
    if (top.size() > kTopPathsPerGoal) top.resize(kTopPathsPerGoal);
    r.topPaths[g] = std::move(top);
  }
  return r;
}

namespace detail {

inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
inline double num_from(const nlohmann::json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

inline nlohmann::json paths_json(const std::vector<WeightedPath>& ps) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : ps) a.push_back({{"path", p.path}, {"share", p.share}});
  return a;
}
inline std::vector<WeightedPath> paths_from(const nlohmann::json& j) {
  std::vector<WeightedPath> out;
  for (const auto& p : j) out.push_back({p.at("path").get<std::vector<std::string>>(), p.at("share").get<double>()});
  return out;
}

}  // namespace detail

inline nlohmann::json report_to_json(const Report& r) {
  using detail::num;
  nlohmann::json perVariant = nlohmann::json::object();
  for (const auto& [v, byEntry] : r.perVariant) {
    nlohmann::json ej = nlohmann::json::object();
    for (const auto& [e, byGoal] : byEntry) {
      nlohmann::json gj = nlohmann::json::object();
      for (const auto& [g, s] : byGoal)
        gj[g] = {{"successRate", s.successRate}, {"p5", num(s.p5)}, {"p50", num(s.p50)}, {"p95", num(s.p95)},
                 {"criticalPath", s.criticalPath}};
      ej[e] = std::move(gj);
    }
    perVariant[v] = std::move(ej);
  }
  nlohmann::json aggregated = nlohmann::json::object();
  for (const auto& [g, a] : r.aggregated)
    aggregated[g] = {{"successRate", a.successRate}, {"p5", num(a.p5)},   {"p50", num(a.p50)}, {"p95", num(a.p95)},
                     {"minVariantRate", num(a.minVariantRate)}, {"maxVariantRate", num(a.maxVariantRate)}};
  nlohmann::json dist = nlohmann::json::object(), top = nlohmann::json::object();
  for (const auto& [g, ps] : r.pathDistribution) dist[g] = detail::paths_json(ps);
  for (const auto& [g, ps] : r.topPaths) top[g] = detail::paths_json(ps);
  nlohmann::json elements = nlohmann::json::object();
  for (const auto& [id, e] : r.perBpmnElement)
    elements[id] = {{"name", e.name}, {"kind", e.kind}, {"risk", e.risk}, {"assets", e.assets}};
  return {{"schema", kReportSchema},
          {"samples", r.samples},
          {"horizonDays", r.horizonDays},
          {"seed", r.seed},
          {"variants", {{"weights", r.variantWeights}, {"labels", r.variantLabels}}},
          {"entrySets", r.entrySets},
          {"perVariant", perVariant},
          {"aggregated", aggregated},
          {"stepRates", r.stepRates},
          {"pathDistribution", dist},
          {"topPaths", top},
          {"perBpmnElement", elements},
          {"pathShare", r.pathShare}};
}

inline Report report_from_json(const nlohmann::json& j) {
  using detail::num_from;
  if (j.value("schema", "") != kReportSchema) throw ReportError("not a " + std::string(kReportSchema) + " document");
  Report r;
  j.at("samples").get_to(r.samples);
  j.at("horizonDays").get_to(r.horizonDays);
  j.at("seed").get_to(r.seed);
  j.at("variants").at("weights").get_to(r.variantWeights);
  j.at("variants").at("labels").get_to(r.variantLabels);
  j.at("entrySets").get_to(r.entrySets);
  for (const auto& [v, ej] : j.at("perVariant").items())
    for (const auto& [e, gj] : ej.items())
      for (const auto& [g, s] : gj.items())
        r.perVariant[v][e][g] = GoalSummary{s.at("successRate").get<double>(), num_from(s.at("p5")), num_from(s.at("p50")),
                                            num_from(s.at("p95")), s.at("criticalPath").get<std::vector<std::string>>()};
  for (const auto& [g, a] : j.at("aggregated").items())
    r.aggregated[g] = AggregatedGoal{a.at("successRate").get<double>(), num_from(a.at("p5")), num_from(a.at("p50")),
                                     num_from(a.at("p95")), num_from(a.at("minVariantRate")), num_from(a.at("maxVariantRate"))};
  j.at("stepRates").get_to(r.stepRates);
  for (const auto& [g, ps] : j.at("pathDistribution").items()) r.pathDistribution[g] = detail::paths_from(ps);
  for (const auto& [g, ps] : j.at("topPaths").items()) r.topPaths[g] = detail::paths_from(ps);
  for (const auto& [id, e] : j.at("perBpmnElement").items())
    r.perBpmnElement[id] = ElementRisk{e.at("name").get<std::string>(), e.at("kind").get<std::string>(),
                                       e.at("risk").get<double>(), e.at("assets").get<std::vector<std::string>>()};
  j.at("pathShare").get_to(r.pathShare);
  return r;
}

}  // namespace bpmnsec::report
