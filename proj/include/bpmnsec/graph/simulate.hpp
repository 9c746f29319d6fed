#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/graph/attack_graph.hpp"
#include "bpmnsec/graph/exact.hpp"

namespace bpmnsec::graph {

using StepRef = std::pair<std::string, std::string>;  // (asset id, step)

struct SimConfig {
  std::size_t samples = 10000;
  double horizonDays = 100.0;
  std::uint64_t seed = 42;
  std::vector<StepRef> attackerEntry;
  std::vector<StepRef> goals;
  /// 0 picks the hardware concurrency. Results do not depend on it.
  unsigned threads = 1;
};

struct GoalResult {
  std::vector<double> arrivalSamples;  // per sample index, +inf when unreached
  double successRateAtHorizon = 0.0;
  /// Over finite samples; NaN when no sample reaches the goal.
  double p5 = std::nan("");
  double p50 = std::nan("");
  double p95 = std::nan("");
  /// Path of the lower-median sample among those within the horizon.
  std::vector<std::string> criticalPath;
  /// Distinct per-sample critical paths (within the horizon) and their counts.
  std::map<std::vector<std::string>, std::size_t> pathCounts;

  bool operator==(const GoalResult&) const = default;
};

struct SimResult {
  std::size_t samples = 0;
  double horizonDays = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, GoalResult> perGoal;  // keyed by node label
  /// Fraction of samples in which each attack step is reached within the horizon.
  std::map<std::string, double> stepRates;

  bool operator==(const SimResult&) const = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform in (0, 1) from (seed, sample, node key). Streams depend on the
/// node label, not its index, so editing one part of a graph leaves the
/// draws of every other node unchanged.
inline double uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t nodeKey) {
  const std::uint64_t x = splitmix64(splitmix64(splitmix64(seed) ^ sample) ^ nodeKey);
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

/// Linear interpolation between closest ranks of a sorted sample.
inline double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace detail

/// Local times of one sample.
inline std::vector<double> draw_sample(const AttackGraph& g, std::uint64_t seed, std::uint64_t sample,
                                       const std::vector<std::uint64_t>& keys) {
  std::vector<double> local(g.size());
  for (NodeId i = 0; i < g.size(); ++i) {
    const auto& d = g.node(i).ttc;
    local[i] = d.is_exponential() ? d.sample(detail::uniform(seed, sample, keys[i])) : d.sample(0.5);
  }
  return local;
}

inline std::vector<std::uint64_t> node_keys(const AttackGraph& g) {
  std::vector<std::uint64_t> keys(g.size());
  for (NodeId i = 0; i < g.size(); ++i) keys[i] = detail::fnv1a(g.node(i).label());
  return keys;
}

/// Monte Carlo over independent samples. Same seed and graph give the same
/// result for any thread count.
inline SimResult simulate(const AttackGraph& base, const SimConfig& cfg) {
  if (cfg.samples == 0) throw GraphError(Stage::Simulate, "samples must be positive");
  if (!(cfg.horizonDays > 0.0)) throw GraphError(Stage::Simulate, "horizon must be positive");
  if (cfg.goals.empty()) throw GraphError(Stage::Simulate, "no goals given");
  const AttackGraph g = attach(base, cfg.attackerEntry, cfg.goals);
  const auto keys = node_keys(g);
  const auto& goals = g.goal_nodes();
  const std::size_t n = g.size();

  // Per sample: goal arrivals, critical paths for goals within the horizon,
  // and the nodes reached within the horizon.
  std::vector<std::vector<double>> goalArrivals(goals.size(), std::vector<double>(cfg.samples));
  std::vector<std::vector<std::vector<NodeId>>> paths(goals.size(), std::vector<std::vector<NodeId>>(cfg.samples));
  std::vector<std::vector<std::uint32_t>> reachedCounts;

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.samples));
  reachedCounts.assign(threads, std::vector<std::uint32_t>(n, 0));

  auto work = [&](unsigned t) {
    std::vector<std::size_t> rank;
    for (std::size_t s = t; s < cfg.samples; s += threads) {
      const auto local = draw_sample(g, cfg.seed, s, keys);
      const auto arrival = exact_arrival(g, local, &rank);
      for (NodeId i = 0; i < n; ++i)
        if (arrival[i] <= cfg.horizonDays) ++reachedCounts[t][i];
      for (std::size_t k = 0; k < goals.size(); ++k) {
        goalArrivals[k][s] = arrival[goals[k]];
        if (arrival[goals[k]] <= cfg.horizonDays) paths[k][s] = critical_path(g, arrival, goals[k], &rank);
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  SimResult r;
  r.samples = cfg.samples;
  r.horizonDays = cfg.horizonDays;
  r.seed = cfg.seed;
  const double total = static_cast<double>(cfg.samples);
  for (NodeId i = 0; i < n; ++i) {
    const auto kind = g.node(i).kind;
    if (kind == NodeKind::Defense || kind == NodeKind::Entry) continue;
    std::uint64_t c = 0;
    for (const auto& rc : reachedCounts) c += rc[i];
    r.stepRates[g.node(i).label()] = static_cast<double>(c) / total;
  }
  auto labels = [&](const std::vector<NodeId>& p) {
    std::vector<std::string> out;
    for (auto id : p) out.push_back(g.node(id).label());
    return out;
  };
  for (std::size_t k = 0; k < goals.size(); ++k) {
    GoalResult gr;
    gr.arrivalSamples = std::move(goalArrivals[k]);
    std::vector<double> finite;
    std::vector<std::pair<double, std::size_t>> within;
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      const double a = gr.arrivalSamples[s];
      if (std::isfinite(a)) finite.push_back(a);
      if (a <= cfg.horizonDays) within.emplace_back(a, s);
    }
    gr.successRateAtHorizon = static_cast<double>(within.size()) / total;
    std::sort(finite.begin(), finite.end());
    gr.p5 = detail::percentile(finite, 0.05);
    gr.p50 = detail::percentile(finite, 0.50);
    gr.p95 = detail::percentile(finite, 0.95);
    for (const auto& [a, s] : within) ++gr.pathCounts[labels(paths[k][s])];
    if (!within.empty()) {
      std::sort(within.begin(), within.end());
      gr.criticalPath = labels(paths[k][within[(within.size() - 1) / 2].second]);
    }
    r.perGoal[g.node(goals[k]).label()] = std::move(gr);
  }
  return r;
}

namespace detail {

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
inline double null_as(const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

}  // namespace detail

/// Non-finite numbers are written as null. Per-sample arrivals are included
/// only when `withSamples` is set.
inline nlohmann::json sim_result_to_json(const SimResult& r, bool withSamples = false) {
  nlohmann::json goals = nlohmann::json::object();
  for (const auto& [label, g] : r.perGoal) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& [p, c] : g.pathCounts) paths.push_back({{"path", p}, {"count", c}});
    nlohmann::json j = {{"successRateAtHorizon", g.successRateAtHorizon},
                        {"p5", detail::finite_or_null(g.p5)},
                        {"p50", detail::finite_or_null(g.p50)},
                        {"p95", detail::finite_or_null(g.p95)},
                        {"criticalPath", g.criticalPath},
                        {"pathCounts", paths}};
    if (withSamples) {
      nlohmann::json arr = nlohmann::json::array();
      for (double a : g.arrivalSamples) arr.push_back(detail::finite_or_null(a));
      j["arrivalSamples"] = std::move(arr);
    }
    goals[label] = std::move(j);
  }
  return {{"samples", r.samples}, {"horizonDays", r.horizonDays}, {"seed", r.seed}, {"perGoal", goals},
          {"stepRates", r.stepRates}};
}

inline SimResult sim_result_from_json(const nlohmann::json& j) {
  SimResult r;
  j.at("samples").get_to(r.samples);
  j.at("horizonDays").get_to(r.horizonDays);
  j.at("seed").get_to(r.seed);
  j.at("stepRates").get_to(r.stepRates);
  for (const auto& [label, gj] : j.at("perGoal").items()) {
    GoalResult g;
    g.successRateAtHorizon = gj.at("successRateAtHorizon").get<double>();
    g.p5 = detail::null_as(gj.at("p5"), std::nan(""));
    g.p50 = detail::null_as(gj.at("p50"), std::nan(""));
    g.p95 = detail::null_as(gj.at("p95"), std::nan(""));
    gj.at("criticalPath").get_to(g.criticalPath);
    for (const auto& pc : gj.at("pathCounts")) g.pathCounts[pc.at("path").get<std::vector<std::string>>()] = pc.at("count").get<std::size_t>();
    if (gj.contains("arrivalSamples"))
      for (const auto& a : gj.at("arrivalSamples")) g.arrivalSamples.push_back(detail::null_as(a, kInfinity));
    r.perGoal[label] = std::move(g);
  }
  return r;
}

}  // namespace bpmnsec::graph
