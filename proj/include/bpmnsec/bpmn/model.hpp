#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bpmnsec::bpmn {

inline constexpr std::string_view kBpmnModelNs = "http://www.omg.org/spec/BPMN/20100524/MODEL";

/// Closed enumeration of BPMN element kinds the ingest stage distinguishes.
enum class ElementKind {
  Process,
  Participant,
  Lane,
  SubProcess,
  EventSubProcess,
  NoneStart,
  MessageStart,
  StartTimer,
  StartCondition,
  StartError,
  StartCompensation,
  StartParallel,
  StartEscalation,
  StartSignal,
  StartMultiple,
  NoneEnd,
  MessageEnd,
  EndError,
  CancelEnd,
  EndCompensation,
  EndSignal,
  EndMultiple,
  TerminateEnd,
  EndEscalation,
  IntermediateEvent,
  Task,
  UserTask,
  ScriptTask,
  ServiceTask,
  SendTask,
  ReceiveTask,
  ManualTask,
  BusinessRuleTask,
  CallActivity,
  ExclusiveGateway,
  EventBasedGateway,
  InclusiveGateway,
  ParallelGateway,
  ComplexGateway,
  DataObject,
  DataStore,
  Message,
  Unsupported,
};

inline constexpr std::array<std::pair<ElementKind, std::string_view>, 43> kElementKindNames{{
    {ElementKind::Process, "Process"},
    {ElementKind::Participant, "Participant"},
    {ElementKind::Lane, "Lane"},
    {ElementKind::SubProcess, "SubProcess"},
    {ElementKind::EventSubProcess, "EventSubProcess"},
    {ElementKind::NoneStart, "NoneStart"},
    {ElementKind::MessageStart, "MessageStart"},
    {ElementKind::StartTimer, "StartTimer"},
    {ElementKind::StartCondition, "StartCondition"},
    {ElementKind::StartError, "StartError"},
    {ElementKind::StartCompensation, "StartCompensation"},
    {ElementKind::StartParallel, "StartParallel"},
    {ElementKind::StartEscalation, "StartEscalation"},
    {ElementKind::StartSignal, "StartSignal"},
    {ElementKind::StartMultiple, "StartMultiple"},
    {ElementKind::NoneEnd, "NoneEnd"},
    {ElementKind::MessageEnd, "MessageEnd"},
    {ElementKind::EndError, "EndError"},
    {ElementKind::CancelEnd, "CancelEnd"},
    {ElementKind::EndCompensation, "EndCompensation"},
    {ElementKind::EndSignal, "EndSignal"},
    {ElementKind::EndMultiple, "EndMultiple"},
    {ElementKind::TerminateEnd, "TerminateEnd"},
    {ElementKind::EndEscalation, "EndEscalation"},
    {ElementKind::IntermediateEvent, "IntermediateEvent"},
    {ElementKind::Task, "Task"},
    {ElementKind::UserTask, "UserTask"},
    {ElementKind::ScriptTask, "ScriptTask"},
    {ElementKind::ServiceTask, "ServiceTask"},
    {ElementKind::SendTask, "SendTask"},
    {ElementKind::ReceiveTask, "ReceiveTask"},
    {ElementKind::ManualTask, "ManualTask"},
    {ElementKind::BusinessRuleTask, "BusinessRuleTask"},
    {ElementKind::CallActivity, "CallActivity"},
    {ElementKind::ExclusiveGateway, "ExclusiveGateway"},
    {ElementKind::EventBasedGateway, "EventBasedGateway"},
    {ElementKind::InclusiveGateway, "InclusiveGateway"},
    {ElementKind::ParallelGateway, "ParallelGateway"},
    {ElementKind::ComplexGateway, "ComplexGateway"},
    {ElementKind::DataObject, "DataObject"},
    {ElementKind::DataStore, "DataStore"},
    {ElementKind::Message, "Message"},
    {ElementKind::Unsupported, "Unsupported"},
}};

inline std::string_view kind_name(ElementKind k) {
  for (const auto& [kind, name] : kElementKindNames)
    if (kind == k) return name;
  return "Unsupported";
}

inline std::optional<ElementKind> kind_from_name(std::string_view n) {
  for (const auto& [kind, name] : kElementKindNames)
    if (name == n) return kind;
  return std::nullopt;
}

inline bool is_start_event(ElementKind k) { return k >= ElementKind::NoneStart && k <= ElementKind::StartMultiple; }
inline bool is_end_event(ElementKind k) { return k >= ElementKind::NoneEnd && k <= ElementKind::EndEscalation; }
inline bool is_activity(ElementKind k) { return k >= ElementKind::Task && k <= ElementKind::CallActivity; }
inline bool is_gateway(ElementKind k) { return k >= ElementKind::ExclusiveGateway && k <= ElementKind::ComplexGateway; }
inline bool is_scope(ElementKind k) {
  return k == ElementKind::Process || k == ElementKind::SubProcess || k == ElementKind::EventSubProcess;
}

enum class FlowKind { Sequence, ConditionalSequence, Default, Message, DataAssociation };

inline constexpr std::array<std::pair<FlowKind, std::string_view>, 5> kFlowKindNames{{
    {FlowKind::Sequence, "Sequence"},
    {FlowKind::ConditionalSequence, "ConditionalSequence"},
    {FlowKind::Default, "Default"},
    {FlowKind::Message, "Message"},
    {FlowKind::DataAssociation, "DataAssociation"},
}};

inline std::string_view flow_kind_name(FlowKind k) {
  for (const auto& [kind, name] : kFlowKindNames)
    if (kind == k) return name;
  return "Sequence";
}

struct BpmnElement {
  std::string id;
  ElementKind kind = ElementKind::Unsupported;
  std::string name;
  /// Containing process or sub-process; empty for top-level elements.
  std::string parent;
  /// Script body, condition, timer expression, implementation hints, vendor
  /// attributes (keyed `{namespace}local`) and raw extension elements.
  std::map<std::string, std::string> attrs;

  bool operator==(const BpmnElement&) const = default;
};

struct FlowEdge {
  std::string id;
  FlowKind kind = FlowKind::Sequence;
  std::string source;
  std::string target;
  std::optional<std::string> conditionExpr;
  std::string name;
  std::map<std::string, std::string> attrs;

  bool operator==(const FlowEdge&) const = default;
};

struct Participant {
  std::string id;
  std::string name;
  std::string processRef;
  std::vector<std::string> containedElementIds;

  bool operator==(const Participant&) const = default;
};

/// Graph view of a BPMN document. The source file is never written; the
/// digest lets callers prove that.
struct ProcessModel {
  std::map<std::string, BpmnElement> elements;
  std::vector<FlowEdge> flows;
  std::vector<Participant> participants;
  std::string sourceDigest;

  const BpmnElement* find(std::string_view id) const {
    auto it = elements.find(std::string(id));
    return it == elements.end() ? nullptr : &it->second;
  }

  /// Participant whose process (transitively) contains `id`, or whose own id
  /// is `id`.
  const Participant* participant_of(std::string_view id) const {
    for (const auto& p : participants) {
      if (p.id == id || p.processRef == id) return &p;
      for (const auto& e : p.containedElementIds)
        if (e == id) return &p;
    }
    return nullptr;
  }

  bool operator==(const ProcessModel&) const = default;
};

}  // namespace bpmnsec::bpmn
