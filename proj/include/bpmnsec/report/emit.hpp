#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/mapping/instance_model.hpp"
#include "bpmnsec/report/report.hpp"

namespace bpmnsec::report {

enum class Format { Json, Csv, Dot };

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

inline std::string fmt(double x) { return std::isfinite(x) ? nlohmann::json(x).dump() : std::string(); }

}  // namespace detail

inline std::string emit_json(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

/// RFC 4180, CRLF line ends, one row per (element, goal).
inline std::string emit_csv(const Report& r) {
  std::string out = "element_id,element_name,element_kind,goal,risk,path_share\r\n";
  for (const auto& [id, e] : r.perBpmnElement) {
    for (const auto& [goal, _] : r.aggregated) {
      double share = 0.0;
      if (auto g = r.pathShare.find(goal); g != r.pathShare.end())
        if (auto s = g->second.find(id); s != g->second.end()) share = s->second;
      out += detail::csv_field(id) + "," + detail::csv_field(e.name) + "," + detail::csv_field(e.kind) + "," +
             detail::csv_field(goal) + "," + detail::fmt(e.risk) + "," + detail::fmt(share) + "\r\n";
    }
  }
  return out;
}

/// The most frequent critical path of the first goal, drawn over the
/// instance topology: one node per asset on the path, links between them,
/// and the attack order as numbered bold edges.
inline std::string emit_dot(const Report& r, const mapping::InstanceModel& m) {
  std::ostringstream o;
  o << "digraph attack_path {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n";
  const WeightedPath* top = nullptr;
  std::string goal;
  for (const auto& [g, paths] : r.topPaths) {
    if (paths.empty()) continue;
    // The most frequent full path, not a shared prefix of several.
    const auto& dist = r.pathDistribution.at(g);
    const WeightedPath* best = nullptr;
    for (const auto& wp : dist)
      if (!best || wp.share > best->share) best = &wp;
    top = best;
    goal = g;
    break;
  }
  if (top) {
    const std::string goalAsset = goal.substr(0, goal.rfind(':'));
    std::vector<std::string> assetOrder;
    std::map<std::string, std::vector<std::string>> steps;
    for (const auto& label : top->path) {
      const auto sep = label.rfind(':');
      const auto asset = label.substr(0, sep);
      if (!steps.count(asset)) assetOrder.push_back(asset);
      steps[asset].push_back(label.substr(sep + 1));
    }
    o << "  label=" << detail::dot_quote("goal " + goal + ", share " + detail::fmt(top->share)) << ";\n";
    std::map<std::string, std::size_t> ids;
    for (const auto& asset : assetOrder) {
      const auto* a = m.find(asset);
      const std::string name = a ? a->name : asset;
      const std::string type = a ? a->type : "?";
      std::string stepList;
      for (const auto& s : steps[asset]) stepList += (stepList.empty() ? "" : ", ") + s;
      const auto id = ids.size();
      ids[asset] = id;
      o << "  a" << id << " [label=" << detail::dot_quote((asset == goalAsset ? "★ " : "") + name + "\n" + type + "\n" + stepList);
      if (asset == goalAsset) o << ", penwidth=2";
      o << "];\n";
    }
    for (const auto& l : m.links) {
      auto a = ids.find(l.left), b = ids.find(l.right);
      if (a != ids.end() && b != ids.end())
        o << "  a" << a->second << " -> a" << b->second << " [dir=none, style=dashed, color=gray, label="
          << detail::dot_quote(l.association) << "];\n";
    }
    std::size_t order = 1;
    std::string prev;
    for (const auto& label : top->path) {
      const auto asset = label.substr(0, label.rfind(':'));
      if (!prev.empty() && asset != prev)
        o << "  a" << ids[prev] << " -> a" << ids[asset] << " [color=red, penwidth=2, label=" << detail::dot_quote(std::to_string(order++))
          << "];\n";
      prev = asset;
    }
  }
  o << "}\n";
  return o.str();
}

inline std::string emit(const Report& r, Format f, const mapping::InstanceModel& m = {}) {
  switch (f) {
    case Format::Json: return emit_json(r);
    case Format::Csv: return emit_csv(r);
    case Format::Dot: return emit_dot(r, m);
  }
  return {};
}

inline Report parse_report(std::string_view json) {
  try {
    return report_from_json(nlohmann::json::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace bpmnsec::report
