#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bpmnsec/bpmn/model.hpp"
#include "bpmnsec/bpmn/surface.hpp"
#include "bpmnsec/mapping/instance_model.hpp"

namespace bpmnsec::mapping {

/// Mapping rows. Each BPMN kind that carries an attack surface maps through
/// exactly one of these.
enum class Rule {
  Collaboration,    // Application (+ Connection to the parent scope)
  Data,             // Data
  Trigger,          // Application + Connection (timer/condition starts)
  UserInteraction,  // User + Identity + Credentials
  Activity,         // Application + Connection
  DataStore,        // Application + Connection
  Connecting,       // Application + Connection (conditional/message flows)
};

inline std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::Collaboration: return "collaboration";
    case Rule::Data: return "data";
    case Rule::Trigger: return "trigger";
    case Rule::UserInteraction: return "user-interaction";
    case Rule::Activity: return "activity";
    case Rule::DataStore: return "data-store";
    case Rule::Connecting: return "connecting";
  }
  return "?";
}

struct MappingRules {
  std::map<bpmn::ElementKind, Rule> elements;
  std::map<bpmn::FlowKind, Rule> flows;
};

inline const MappingRules& default_rules() {
  using K = bpmn::ElementKind;
  static const MappingRules rules{
      {
          {K::Participant, Rule::Collaboration},
          {K::Process, Rule::Collaboration},
          {K::SubProcess, Rule::Collaboration},
          {K::EventSubProcess, Rule::Collaboration},
          {K::MessageStart, Rule::Data},
          {K::MessageEnd, Rule::Data},
          {K::Message, Rule::Data},
          {K::DataObject, Rule::Data},
          {K::StartTimer, Rule::Trigger},
          {K::StartCondition, Rule::Trigger},
          {K::ComplexGateway, Rule::Trigger},
          {K::UserTask, Rule::UserInteraction},
          {K::ManualTask, Rule::UserInteraction},
          {K::ScriptTask, Rule::Activity},
          {K::ServiceTask, Rule::Activity},
          {K::SendTask, Rule::Activity},
          {K::ReceiveTask, Rule::Activity},
          {K::BusinessRuleTask, Rule::Activity},
          {K::CallActivity, Rule::Activity},
          {K::DataStore, Rule::DataStore},
      },
      {
          {bpmn::FlowKind::ConditionalSequence, Rule::Connecting},
          {bpmn::FlowKind::Message, Rule::Connecting},
      },
  };
  return rules;
}

struct MappingResult {
  InstanceModel model;
  MappingTrace trace;
};

namespace detail {

class Mapper {
 public:
  Mapper(const bpmn::ProcessModel& m, const mal::MalLanguage& lang, const MappingRules& rules)
      : m_(m), lang_(lang), rules_(rules) {}

  MappingResult run() {
    for (const char* t : {"Application", "Connection", "Data", "User", "Identity", "Credentials"})
      if (!lang_.has_asset(t)) throw MappingError(std::string("language lacks required asset type '") + t + "'");

    for (const auto& p : m_.participants) participant(p);
    for (const auto& [id, e] : m_.elements) element(e);
    std::vector<const bpmn::FlowEdge*> flows;
    for (const auto& f : m_.flows) flows.push_back(&f);
    std::sort(flows.begin(), flows.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (const auto* f : flows) flow(*f);

    out_.model.normalize();
    validate_instance(out_.model, lang_);
    return std::move(out_);
  }

 private:
  static std::string display(const bpmn::BpmnElement& e) { return e.name.empty() ? e.id : e.name; }

  std::string add_asset(const std::string& id, const std::string& type, const std::string& name,
                        const std::string& element) {
    if (!created_.insert(id).second) return id;
    out_.model.assets.push_back(AssetInstance{id, type, name, {element}});
    out_.trace.perBpmnElement[element].push_back(id);
    return id;
  }

  void trace_alias(const std::string& element, const std::string& assetId) {
    auto& list = out_.trace.perBpmnElement[element];
    if (std::find(list.begin(), list.end(), assetId) == list.end()) list.push_back(assetId);
    for (auto& a : out_.model.assets) {
      if (a.id == assetId && std::find(a.provenance.begin(), a.provenance.end(), element) == a.provenance.end())
        a.provenance.push_back(element);
    }
  }

  void link(const std::string& assoc, const std::string& left, const std::string& right) {
    out_.model.links.push_back(Link{assoc, left, right});
  }

  void count(Rule r) { ++out_.trace.perRule[std::string(rule_name(r))]; }

  void participant(const bpmn::Participant& p) {
    const auto& e = m_.elements.at(p.id);
    const std::string app = add_asset(p.id + "/app", "Application", display(e), p.id);
    count(Rule::Collaboration);
    if (!p.processRef.empty() && m_.find(p.processRef)) {
      scopeApp_[p.processRef] = app;
      trace_alias(p.processRef, app);
    }
  }

  /// Application standing for a scope (process or sub-process).
  std::string scope_app(const std::string& scopeId) {
    if (auto it = scopeApp_.find(scopeId); it != scopeApp_.end()) return it->second;
    const auto* e = m_.find(scopeId);
    if (!e || !bpmn::is_scope(e->kind)) return {};
    const std::string app = add_asset(scopeId + "/app", "Application", display(*e), scopeId);
    scopeApp_[scopeId] = app;
    if (e->kind != bpmn::ElementKind::Process) {
      const std::string conn = add_asset(scopeId + "/conn", "Connection", display(*e) + " connection", scopeId);
      link("AppConnection", conn, app);
      const std::string parent = enclosing_app(*e);
      if (!parent.empty()) link("AppConnection", conn, parent);
    }
    return app;
  }

  std::string enclosing_app(const bpmn::BpmnElement& e) { return e.parent.empty() ? std::string{} : scope_app(e.parent); }

  /// Application that sends or receives on behalf of an element.
  std::string endpoint_app(const std::string& id) {
    const auto* e = m_.find(id);
    if (!e) return {};
    if (e->kind == bpmn::ElementKind::Participant) return id + "/app";
    if (bpmn::is_scope(e->kind)) return scope_app(id);
    auto rule = rules_.elements.find(e->kind);
    if (rule != rules_.elements.end() &&
        (rule->second == Rule::Activity || rule->second == Rule::Trigger || rule->second == Rule::DataStore))
      return id + "/app";
    return enclosing_app(*e);
  }

  void app_with_connection(const std::string& id, const std::string& name, const std::string& peer) {
    const std::string app = add_asset(id + "/app", "Application", name, id);
    const std::string conn = add_asset(id + "/conn", "Connection", name + " connection", id);
    link("AppConnection", conn, app);
    if (!peer.empty()) link("AppConnection", conn, peer);
  }

  void element(const bpmn::BpmnElement& e) {
    auto rule = rules_.elements.find(e.kind);
    if (rule == rules_.elements.end()) {
      if (!bpmn::surface_tags(e.kind).empty())
        throw MappingError("element '" + e.id + "' of kind " + std::string(bpmn::kind_name(e.kind)) +
                           " has an attack surface but no mapping rule");
      return;
    }
    switch (rule->second) {
      case Rule::Collaboration:
        if (e.kind == bpmn::ElementKind::Participant) return;  // handled up front
        if (scopeApp_.count(e.id)) return;                     // process owned by a participant
        scope_app(e.id);
        break;
      case Rule::Data: {
        const std::string data = add_asset(e.id + "/data", "Data", display(e), e.id);
        const std::string holder = enclosing_app(e);
        if (!holder.empty()) link("DataHolding", holder, data);
        break;
      }
      case Rule::Trigger:
      case Rule::Activity:
      case Rule::DataStore:
        app_with_connection(e.id, display(e), enclosing_app(e));
        break;
      case Rule::UserInteraction: {
        const std::string user = add_asset(e.id + "/user", "User", display(e) + " user", e.id);
        const std::string identity = add_asset(e.id + "/identity", "Identity", display(e) + " identity", e.id);
        const std::string creds = add_asset(e.id + "/credentials", "Credentials", display(e) + " credentials", e.id);
        link("UserAssignedIdentities", user, identity);
        link("IdentityCredentials", identity, creds);
        const std::string engine = enclosing_app(e);
        if (!engine.empty()) link("AppAccess", identity, engine);
        break;
      }
      case Rule::Connecting:
        break;
    }
    count(rule->second);
  }

  void flow(const bpmn::FlowEdge& f) {
    using bpmn::ElementKind;
    if (f.kind == bpmn::FlowKind::DataAssociation) {
      data_association(f);
      return;
    }
    auto rule = rules_.flows.find(f.kind);
    if (rule == rules_.flows.end()) {
      if (!bpmn::surface_tags(f.kind).empty())
        throw MappingError("flow '" + f.id + "' has an attack surface but no mapping rule");
      return;
    }
    count(rule->second);
    const std::string name = f.name.empty() ? f.id : f.name;
    if (f.kind == bpmn::FlowKind::ConditionalSequence) {
      const auto* src = m_.find(f.source);
      app_with_connection(f.id, name, src ? enclosing_app(*src) : std::string{});
      return;
    }
    // Message flow: one connection for the remote leg, shared by request and
    // response, joining both endpoints and the flow's own application.
    const std::string source = endpoint_app(f.source);
    const std::string target = endpoint_app(f.target);
    app_with_connection(f.id, name, source);
    const std::string conn = f.id + "/conn";
    if (!target.empty()) link("AppConnection", conn, target);

    std::vector<std::string> carried;
    if (auto it = f.attrs.find("messageRef"); it != f.attrs.end() && created_.count(it->second + "/data"))
      carried.push_back(it->second + "/data");
    for (const auto* endId : {&f.source, &f.target}) {
      const auto* e = m_.find(*endId);
      if (e && (e->kind == ElementKind::MessageStart || e->kind == ElementKind::MessageEnd) &&
          created_.count(e->id + "/data"))
        carried.push_back(e->id + "/data");
    }
    for (const auto& data : carried) {
      link("DataInTransit", conn, data);
      for (const auto* app : {&source, &target})
        if (!app->empty()) link("DataHolding", *app, data);
    }
  }

  void data_association(const bpmn::FlowEdge& f) {
    for (const auto& [dataSide, otherSide] : {std::pair{f.source, f.target}, std::pair{f.target, f.source}}) {
      const auto* d = m_.find(dataSide);
      if (!d) continue;
      const std::string app = endpoint_app(otherSide);
      if (app.empty()) continue;
      if (d->kind == bpmn::ElementKind::DataObject && created_.count(d->id + "/data")) {
        link("DataHolding", app, d->id + "/data");
      } else if (d->kind == bpmn::ElementKind::DataStore && created_.count(d->id + "/conn") && app != d->id + "/app") {
        link("AppConnection", d->id + "/conn", app);
      }
    }
  }

  const bpmn::ProcessModel& m_;
  const mal::MalLanguage& lang_;
  const MappingRules& rules_;
  MappingResult out_;
  std::set<std::string> created_;
  std::map<std::string, std::string> scopeApp_;
};

}  // namespace detail

/// Translates a process model into a coreLang instance model. Elements and
/// flows are visited in id order, so the result is deterministic.
inline MappingResult map_process(const bpmn::ProcessModel& m, const mal::MalLanguage& lang,
                                 const MappingRules& rules = default_rules()) {
  return detail::Mapper(m, lang, rules).run();
}

enum class MergePolicy { PerTask, PerTechnology };

/// Optionally collapses script-task applications that share a script
/// language into one application.
inline MappingResult merge_strategy(const MappingResult& in, const bpmn::ProcessModel& pm, MergePolicy policy) {
  if (policy == MergePolicy::PerTask) return in;

  std::map<std::string, std::vector<std::string>> byLanguage;  // language -> app ids
  for (const auto& a : in.model.assets) {
    if (a.type != "Application" || a.provenance.size() != 1) continue;
    const auto* e = pm.find(a.provenance.front());
    if (!e || e->kind != bpmn::ElementKind::ScriptTask || a.id != e->id + "/app") continue;
    std::string lang = "unspecified";
    if (auto it = e->attrs.find("scriptFormat"); it != e->attrs.end() && !it->second.empty()) lang = it->second;
    std::transform(lang.begin(), lang.end(), lang.begin(), [](unsigned char c) { return std::tolower(c); });
    byLanguage[lang].push_back(a.id);
  }

  MappingResult out = in;
  std::map<std::string, std::string> rename;
  for (const auto& [lang, apps] : byLanguage) {
    if (apps.size() < 2) continue;
    AssetInstance merged{"scripts-" + lang + "/app", "Application", lang + " script engine", {}};
    for (const auto& id : apps) {
      rename[id] = merged.id;
      const auto* a = in.model.find(id);
      merged.provenance.insert(merged.provenance.end(), a->provenance.begin(), a->provenance.end());
    }
    std::sort(merged.provenance.begin(), merged.provenance.end());
    out.model.assets.push_back(std::move(merged));
  }
  std::erase_if(out.model.assets, [&](const AssetInstance& a) { return rename.count(a.id) > 0; });
  for (auto& l : out.model.links) {
    if (auto it = rename.find(l.left); it != rename.end()) l.left = it->second;
    if (auto it = rename.find(l.right); it != rename.end()) l.right = it->second;
  }
  for (auto& [element, ids] : out.trace.perBpmnElement) {
    for (auto& id : ids)
      if (auto it = rename.find(id); it != rename.end()) id = it->second;
  }
  out.model.normalize();
  return out;
}

}  // namespace bpmnsec::mapping
