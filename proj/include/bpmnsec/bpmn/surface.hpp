#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "bpmnsec/bpmn/model.hpp"

namespace bpmnsec::bpmn {

enum class SurfaceTag { Condition, Expression, ServiceCall, Script, Collaboration, DataFlow };

inline std::string_view surface_tag_name(SurfaceTag t) {
  switch (t) {
    case SurfaceTag::Condition: return "Condition";
    case SurfaceTag::Expression: return "Expression";
    case SurfaceTag::ServiceCall: return "ServiceCall";
    case SurfaceTag::Script: return "Script";
    case SurfaceTag::Collaboration: return "Collaboration";
    case SurfaceTag::DataFlow: return "DataFlow";
  }
  return "?";
}

using TagSet = std::set<SurfaceTag>;

/// Attack-surface tags per element kind. Control-flow elements the engine
/// manages (plain events, most gateways, lanes) get none.
inline TagSet surface_tags(ElementKind k) {
  using K = ElementKind;
  using T = SurfaceTag;
  switch (k) {
    case K::DataObject:
    case K::DataStore:
    case K::Message:
    case K::MessageStart:
      return {T::DataFlow};
    case K::Participant:
    case K::Process:
    case K::SubProcess:
    case K::EventSubProcess:
      return {T::Collaboration};
    case K::StartTimer:
    case K::BusinessRuleTask:
      return {T::Expression};
    case K::StartCondition:
    case K::ComplexGateway:
      return {T::Condition};
    case K::MessageEnd:
      return {T::Condition, T::DataFlow};
    case K::UserTask:
    case K::ServiceTask:
    case K::SendTask:
    case K::ReceiveTask:
    case K::ManualTask:
    case K::CallActivity:
      return {T::ServiceCall};
    case K::ScriptTask:
      return {T::Script};
    default:
      return {};
  }
}

inline TagSet surface_tags(FlowKind k) {
  switch (k) {
    case FlowKind::ConditionalSequence: return {SurfaceTag::Condition};
    case FlowKind::Message: return {SurfaceTag::Expression, SurfaceTag::DataFlow};
    default: return {};
  }
}

/// Tags keyed by element or flow id; `relevant` holds ids with at least one tag.
struct SurfaceReport {
  std::map<std::string, TagSet> perElement;
  std::set<std::string> relevant;
};

inline SurfaceReport classify_surface(const ProcessModel& m) {
  SurfaceReport r;
  auto record = [&](const std::string& id, TagSet tags) {
    if (!tags.empty()) r.relevant.insert(id);
    r.perElement[id] = std::move(tags);
  };
  for (const auto& [id, e] : m.elements) record(id, surface_tags(e.kind));
  for (const auto& f : m.flows) record(f.id, surface_tags(f.kind));
  return r;
}

}  // namespace bpmnsec::bpmn
