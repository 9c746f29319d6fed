#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/bpmn/model.hpp"
#include "bpmnsec/mal/language.hpp"
#include "bpmnsec/mapping/instance_model.hpp"
#include "bpmnsec/report/report.hpp"

namespace bpmnsec::report {

/// Step whose compromise stands for "the attacker controls this asset".
inline std::string access_step_for(const mal::MalLanguage& lang, std::string_view type) {
  static const std::vector<std::pair<std::string_view, std::string_view>> table{
      {"Application", "fullAccess"}, {"Connection", "manInTheMiddle"}, {"Data", "write"},   {"Identity", "assume"},
      {"User", "phish"},             {"Vulnerability", "exploit"},     {"Exploit", "use"},
  };
  for (const auto& [base, step] : table)
    if (lang.is_a(type, base)) return std::string(step);
  return "access";
}

/// Risk sidecar for a process model; the model file itself is never touched.
struct AnnotatedModel {
  std::string sourceDigest;
  std::map<std::string, ElementRisk> elements;
};

/// Fills `r.perBpmnElement` and `r.pathShare` and returns the sidecar. An
/// element's risk is the highest reach rate, within the horizon, of the
/// access-equivalent step of any asset traced to it.
inline AnnotatedModel annotate(const bpmn::ProcessModel& pm, const mapping::InstanceModel& m,
                               const mapping::MappingTrace& trace, const mal::MalLanguage& lang, Report& r) {
  AnnotatedModel out;
  out.sourceDigest = pm.sourceDigest;
  for (const auto& [id, e] : pm.elements)
    out.elements[id] = ElementRisk{e.name, std::string(bpmn::kind_name(e.kind)), 0.0, {}};
  for (const auto& f : pm.flows)
    out.elements[f.id] = ElementRisk{f.name, std::string(bpmn::flow_kind_name(f.kind)) + "Flow", 0.0, {}};

  std::map<std::string, std::set<std::string>> elementNodes;  // element -> access-step labels
  std::map<std::string, std::set<std::string>> elementAssets;
  for (const auto& [element, assets] : trace.perBpmnElement) {
    auto it = out.elements.find(element);
    if (it == out.elements.end()) throw ReportError("mapping trace references unknown element '" + element + "'");
    for (const auto& assetId : assets) {
      const auto* a = m.find(assetId);
      if (!a) continue;  // merged away or not part of this model
      it->second.assets.push_back(assetId);
      elementAssets[element].insert(assetId);
      const auto label = assetId + ":" + access_step_for(lang, a->type);
      auto rate = r.stepRates.find(label);
      if (rate != r.stepRates.end()) it->second.risk = std::max(it->second.risk, std::clamp(rate->second, 0.0, 1.0));
    }
    std::sort(it->second.assets.begin(), it->second.assets.end());
  }

  r.pathShare.clear();
  for (const auto& [goal, dist] : r.pathDistribution) {
    auto& shares = r.pathShare[goal];
    for (const auto& [element, assets] : elementAssets) {
      double share = 0.0;
      for (const auto& wp : dist) {
        const bool touches = std::any_of(wp.path.begin(), wp.path.end(), [&](const std::string& label) {
          return assets.count(label.substr(0, label.rfind(':'))) > 0;
        });
        if (touches) share += wp.share;
      }
      shares[element] = std::min(1.0, share);
    }
  }
  r.perBpmnElement = out.elements;
  return out;
}

inline nlohmann::json annotations_to_json(const AnnotatedModel& a) {
  nlohmann::json elements = nlohmann::json::object();
  for (const auto& [id, e] : a.elements)
    elements[id] = {{"name", e.name}, {"kind", e.kind}, {"risk", e.risk}, {"assets", e.assets}};
  return {{"schema", "bpmnsec.annotations/1"}, {"sourceDigest", a.sourceDigest}, {"elements", elements}};
}

}  // namespace bpmnsec::report
