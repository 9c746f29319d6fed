#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <expat.h>

#include "bpmnsec/bpmn/model.hpp"
#include "bpmnsec/digest.hpp"
#include "bpmnsec/error.hpp"

namespace bpmnsec::bpmn {

namespace detail {

struct QName {
  std::string ns;
  std::string local;
};

inline QName split_name(const char* raw) {
  std::string_view s(raw);
  auto sep = s.find(' ');
  if (sep == std::string_view::npos) return {"", std::string(s)};
  return {std::string(s.substr(0, sep)), std::string(s.substr(sep + 1))};
}

inline const std::set<std::string, std::less<>>& structural_tags() {
  // BPMN tags that carry detail for an enclosing element rather than being
  // model elements themselves.
  static const std::set<std::string, std::less<>> tags{
      "incoming", "outgoing", "flowNodeRef", "sourceRef", "targetRef", "ioSpecification", "dataInput",
      "dataOutput", "inputSet", "outputSet", "dataInputRefs", "dataOutputRefs", "property", "textAnnotation",
      "text", "association", "group", "category", "categoryValue", "multiInstanceLoopCharacteristics",
      "standardLoopCharacteristics", "loopCardinality", "completionCondition", "timeDate", "timeCycle",
      "timeDuration", "condition", "assignment", "from", "to", "transformation", "performer", "potentialOwner",
      "humanPerformer", "resourceRole", "resourceAssignmentExpression", "formalExpression", "expression",
      "interface", "operation", "inMessageRef", "outMessageRef", "error", "escalation", "signal",
      "itemDefinition", "import", "dataState", "laneSet", "childLaneSet", "collaboration", "relationship",
      "extension", "correlationKey", "correlationPropertyRef", "messageFlowRef", "participantMultiplicity",
      "participantRef", "resource", "script", "conditionExpression", "activationCondition", "documentation",
      "messageEventDefinition", "timerEventDefinition", "conditionalEventDefinition", "errorEventDefinition",
      "escalationEventDefinition", "compensateEventDefinition", "signalEventDefinition", "cancelEventDefinition",
      "terminateEventDefinition", "linkEventDefinition", "dataInputAssociation", "dataOutputAssociation",
      "eventDefinitionRef", "supportedInterfaceRef", "ioBinding", "lane"};
  return tags;
}

class IngestParser {
 public:
  explicit IngestParser(std::string_view bytes) : bytes_(bytes) {}

  ProcessModel run() {
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
        XML_ParserCreateNS(nullptr, ' '), &XML_ParserFree);
    if (!parser) throw IngestError("cannot allocate XML parser");
    parser_ = parser.get();
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &IngestParser::on_start, &IngestParser::on_end);
    XML_SetCharacterDataHandler(parser_, &IngestParser::on_text);
    if (XML_Parse(parser_, bytes_.data(), static_cast<int>(bytes_.size()), XML_TRUE) == XML_STATUS_ERROR) {
      if (!callback_error_.empty()) throw IngestError(callback_error_);
      throw IngestError("malformed XML at line " + std::to_string(XML_GetCurrentLineNumber(parser_)) + ", column " +
                        std::to_string(XML_GetCurrentColumnNumber(parser_)) + ": " +
                        XML_ErrorString(XML_GetErrorCode(parser_)));
    }
    if (!callback_error_.empty()) throw IngestError(callback_error_);
    if (!saw_root_) throw IngestError("document has no BPMN definitions element");
    finish();
    model_.sourceDigest = sha256_hex(bytes_);
    return std::move(model_);
  }

 private:
  enum class Role { Root, Container, Element, Flow, DataAssoc, Text, Skip, Extension };

  struct Frame {
    QName name;
    Role role = Role::Container;
    std::string owner;  // element or flow id this frame contributes to
    std::string text;
    long rawStart = 0;
  };

  struct PendingEvent {
    std::vector<std::string> defs;
    bool parallelMultiple = false;
    bool start = true;
  };

  struct PendingAssoc {
    std::string id;
    std::string activity;
    bool input = true;
    std::vector<std::string> sources;
    std::string target;
  };

  static void XMLCALL on_start(void* ud, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<IngestParser*>(ud);
    try {
      self->start(split_name(name), atts);
    } catch (const std::exception& e) {
      self->abort(e.what());
    }
  }
  static void XMLCALL on_end(void* ud, const XML_Char*) {
    auto* self = static_cast<IngestParser*>(ud);
    // Expat still reports the end of an empty element whose start aborted.
    if (!self->callback_error_.empty() || self->frames_.empty()) return;
    try {
      self->end();
    } catch (const std::exception& e) {
      self->abort(e.what());
    }
  }
  static void XMLCALL on_text(void* ud, const XML_Char* s, int len) {
    auto* self = static_cast<IngestParser*>(ud);
    if (!self->frames_.empty() && self->frames_.back().role == Role::Text) self->frames_.back().text.append(s, len);
  }

  void abort(const std::string& msg) {
    if (callback_error_.empty()) callback_error_ = msg;
    XML_StopParser(parser_, XML_FALSE);
  }

  bool inside(Role r) const {
    return std::any_of(frames_.begin(), frames_.end(), [&](const Frame& f) { return f.role == r; });
  }

  const std::string& scope() const {
    static const std::string none;
    return scopes_.empty() ? none : scopes_.back();
  }

  void claim_id(const std::string& id) {
    if (id.empty()) throw IngestError("BPMN element without id");
    if (!ids_.insert(id).second) throw IngestError("duplicate id '" + id + "'");
  }

  BpmnElement& add_element(const std::string& id, ElementKind kind, const char** atts, const std::string& parent) {
    claim_id(id);
    BpmnElement e;
    e.id = id;
    e.kind = kind;
    e.parent = parent;
    read_attrs(atts, e.name, e.attrs);
    order_.push_back(id);
    return model_.elements.emplace(id, std::move(e)).first->second;
  }

  static void read_attrs(const char** atts, std::string& name, std::map<std::string, std::string>& out) {
    for (int i = 0; atts[i]; i += 2) {
      QName q = split_name(atts[i]);
      std::string value = atts[i + 1];
      if (q.ns.empty()) {
        if (q.local == "id") continue;
        if (q.local == "name") {
          name = value;
          continue;
        }
        out[q.local] = value;
      } else {
        out["{" + q.ns + "}" + q.local] = value;
      }
    }
  }

  static std::string attr(const char** atts, std::string_view local) {
    for (int i = 0; atts[i]; i += 2) {
      QName q = split_name(atts[i]);
      if (q.ns.empty() && q.local == local) return atts[i + 1];
    }
    return {};
  }

  static std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
  }

  std::string owner() const {
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it)
      if (!it->owner.empty()) return it->owner;
    return {};
  }

  void start(QName q, const char** atts) {
    Frame f;
    f.name = q;
    if (inside(Role::Skip) || inside(Role::Extension)) {
      f.role = Role::Skip;
      frames_.push_back(std::move(f));
      return;
    }
    if (frames_.empty()) {
      if (q.ns != kBpmnModelNs || q.local != "definitions")
        throw IngestError("root element is not {" + std::string(kBpmnModelNs) + "}definitions");
      saw_root_ = true;
      f.role = Role::Root;
      frames_.push_back(std::move(f));
      return;
    }
    if (q.local == "extensionElements" && q.ns == kBpmnModelNs) {
      f.role = Role::Extension;
      f.owner = owner();
      f.rawStart = XML_GetCurrentByteIndex(parser_) + XML_GetCurrentByteCount(parser_);
      frames_.push_back(std::move(f));
      return;
    }
    if (q.ns != kBpmnModelNs) {
      // Diagram interchange and vendor elements outside extensionElements.
      f.role = Role::Skip;
      frames_.push_back(std::move(f));
      return;
    }

    const std::string id = attr(atts, "id");
    const std::string& l = q.local;
    f.role = Role::Container;

    if (l == "process") {
      add_element(id, ElementKind::Process, atts, "");
      f.role = Role::Element;
      f.owner = id;
      scopes_.push_back(id);
      scope_push_depth_.push_back(frames_.size());
    } else if (l == "subProcess" || l == "adHocSubProcess" || l == "transaction") {
      auto kind = attr(atts, "triggeredByEvent") == "true" ? ElementKind::EventSubProcess : ElementKind::SubProcess;
      add_element(id, kind, atts, scope());
      f.role = Role::Element;
      f.owner = id;
      scopes_.push_back(id);
      scope_push_depth_.push_back(frames_.size());
    } else if (l == "participant") {
      auto& e = add_element(id, ElementKind::Participant, atts, "");
      model_.participants.push_back(Participant{id, e.name, attr(atts, "processRef"), {}});
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "lane") {
      add_element(id, ElementKind::Lane, atts, scope());
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "message") {
      add_element(id, ElementKind::Message, atts, "");
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "startEvent" || l == "endEvent") {
      add_element(id, l == "startEvent" ? ElementKind::NoneStart : ElementKind::NoneEnd, atts, scope());
      pending_events_[id] = PendingEvent{{}, attr(atts, "parallelMultiple") == "true", l == "startEvent"};
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "intermediateCatchEvent" || l == "intermediateThrowEvent" || l == "boundaryEvent") {
      auto& e = add_element(id, ElementKind::IntermediateEvent, atts, scope());
      e.attrs["eventType"] = l;
      f.role = Role::Element;
      f.owner = id;
    } else if (auto kind = activity_or_gateway(l)) {
      add_element(id, *kind, atts, scope());
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "dataObject") {
      add_element(id, ElementKind::DataObject, atts, scope());
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "dataStore") {
      add_element(id, ElementKind::DataStore, atts, scope());
      f.role = Role::Element;
      f.owner = id;
    } else if (l == "dataObjectReference" || l == "dataStoreReference") {
      const std::string ref = attr(atts, l == "dataObjectReference" ? "dataObjectRef" : "dataStoreRef");
      if (!ref.empty()) {
        claim_id(id);
        aliases_[id] = ref;
        f.role = Role::Container;
      } else {
        add_element(id, l == "dataObjectReference" ? ElementKind::DataObject : ElementKind::DataStore, atts, scope());
        f.role = Role::Element;
        f.owner = id;
      }
    } else if (l == "sequenceFlow" || l == "messageFlow") {
      claim_id(id);
      FlowEdge edge;
      edge.id = id;
      edge.kind = l == "messageFlow" ? FlowKind::Message : FlowKind::Sequence;
      read_attrs(atts, edge.name, edge.attrs);
      edge.source = edge.attrs["sourceRef"];
      edge.target = edge.attrs["targetRef"];
      edge.attrs.erase("sourceRef");
      edge.attrs.erase("targetRef");
      model_.flows.push_back(std::move(edge));
      f.role = Role::Flow;
      f.owner = id;
    } else if (l == "dataInputAssociation" || l == "dataOutputAssociation") {
      PendingAssoc a;
      a.activity = owner();
      a.input = l == "dataInputAssociation";
      a.id = id.empty() ? a.activity + "#" + l + std::to_string(assocs_.size()) : id;
      assocs_.push_back(std::move(a));
      f.role = Role::DataAssoc;
    } else if (l == "conditionExpression" || l == "script" || l == "timeDate" || l == "timeCycle" ||
               l == "timeDuration" || l == "condition" || l == "activationCondition" || l == "flowNodeRef" ||
               l == "documentation" || ((l == "sourceRef" || l == "targetRef") && !frames_.empty() &&
                                        frames_.back().role == Role::DataAssoc)) {
      f.role = Role::Text;
    } else if (l.size() > 15 && l.ends_with("EventDefinition")) {
      auto ev = pending_events_.find(owner());
      if (ev != pending_events_.end()) ev->second.defs.push_back(l.substr(0, l.size() - 15));
      const std::string messageRef = attr(atts, "messageRef");
      if (!messageRef.empty() && model_.elements.count(owner())) model_.elements[owner()].attrs["messageRef"] = messageRef;
    } else if (structural_tags().count(l) == 0) {
      std::string uid = id.empty() ? "unsupported-" + std::to_string(++unsupported_) + "-" + l : id;
      auto& e = add_element(uid, ElementKind::Unsupported, atts, scope());
      e.attrs["tag"] = l;
      f.role = Role::Skip;
      f.owner = uid;
    }
    frames_.push_back(std::move(f));
  }

  static std::optional<ElementKind> activity_or_gateway(std::string_view l) {
    static constexpr std::pair<std::string_view, ElementKind> table[] = {
        {"task", ElementKind::Task},
        {"userTask", ElementKind::UserTask},
        {"scriptTask", ElementKind::ScriptTask},
        {"serviceTask", ElementKind::ServiceTask},
        {"sendTask", ElementKind::SendTask},
        {"receiveTask", ElementKind::ReceiveTask},
        {"manualTask", ElementKind::ManualTask},
        {"businessRuleTask", ElementKind::BusinessRuleTask},
        {"callActivity", ElementKind::CallActivity},
        {"exclusiveGateway", ElementKind::ExclusiveGateway},
        {"eventBasedGateway", ElementKind::EventBasedGateway},
        {"inclusiveGateway", ElementKind::InclusiveGateway},
        {"parallelGateway", ElementKind::ParallelGateway},
        {"complexGateway", ElementKind::ComplexGateway},
    };
    for (const auto& [tag, kind] : table)
      if (tag == l) return kind;
    return std::nullopt;
  }

  void end() {
    Frame f = std::move(frames_.back());
    frames_.pop_back();
    if (!scope_push_depth_.empty() && scope_push_depth_.back() == frames_.size()) {
      scope_push_depth_.pop_back();
      scopes_.pop_back();
    }
    if (f.role == Role::Extension) {
      long end = XML_GetCurrentByteIndex(parser_);
      std::string raw;
      if (end > f.rawStart) raw = std::string(bytes_.substr(static_cast<std::size_t>(f.rawStart), end - f.rawStart));
      if (auto it = model_.elements.find(f.owner); it != model_.elements.end()) {
        it->second.attrs["extensionElements"] = raw;
      } else if (auto* flow = find_flow(f.owner)) {
        flow->attrs["extensionElements"] = raw;
      }
      return;
    }
    if (f.role != Role::Text) return;
    const std::string text = trim(f.text);
    const std::string& l = f.name.local;
    const std::string target = owner();
    if (l == "conditionExpression") {
      if (auto* flow = find_flow(target)) flow->conditionExpr = text;
    } else if (l == "sourceRef" || l == "targetRef") {
      auto& a = assocs_.back();
      if (l == "sourceRef") a.sources.push_back(text);
      else a.target = text;
    } else if (auto it = model_.elements.find(target); it != model_.elements.end()) {
      auto& attrs = it->second.attrs;
      if (l == "flowNodeRef") {
        attrs["flowNodeRefs"] += (attrs["flowNodeRefs"].empty() ? "" : " ") + text;
      } else if (l == "timeDate" || l == "timeCycle" || l == "timeDuration") {
        attrs["timer"] = text;
        attrs["timerType"] = l;
      } else if (l == "condition" || l == "activationCondition") {
        attrs["condition"] = text;
      } else {
        attrs[l] = text;
      }
    }
  }

  FlowEdge* find_flow(const std::string& id) {
    for (auto& fl : model_.flows)
      if (fl.id == id) return &fl;
    return nullptr;
  }

  std::string resolve(const std::string& id) const {
    auto it = aliases_.find(id);
    return it == aliases_.end() ? id : it->second;
  }

  static ElementKind event_kind(const PendingEvent& ev) {
    if (ev.defs.empty()) return ev.start ? ElementKind::NoneStart : ElementKind::NoneEnd;
    if (ev.defs.size() > 1) {
      if (ev.start) return ev.parallelMultiple ? ElementKind::StartParallel : ElementKind::StartMultiple;
      return ElementKind::EndMultiple;
    }
    const std::string& d = ev.defs.front();
    if (ev.start) {
      if (d == "message") return ElementKind::MessageStart;
      if (d == "timer") return ElementKind::StartTimer;
      if (d == "conditional") return ElementKind::StartCondition;
      if (d == "error") return ElementKind::StartError;
      if (d == "compensate") return ElementKind::StartCompensation;
      if (d == "escalation") return ElementKind::StartEscalation;
      if (d == "signal") return ElementKind::StartSignal;
    } else {
      if (d == "message") return ElementKind::MessageEnd;
      if (d == "error") return ElementKind::EndError;
      if (d == "cancel") return ElementKind::CancelEnd;
      if (d == "compensate") return ElementKind::EndCompensation;
      if (d == "signal") return ElementKind::EndSignal;
      if (d == "terminate") return ElementKind::TerminateEnd;
      if (d == "escalation") return ElementKind::EndEscalation;
    }
    return ElementKind::Unsupported;
  }

  void finish() {
    for (const auto& [id, ev] : pending_events_) {
      auto& e = model_.elements.at(id);
      e.kind = event_kind(ev);
      if (e.kind == ElementKind::Unsupported) e.attrs["eventDefinitions"] = ev.defs.front();
    }

    for (const auto& a : assocs_) {
      claim_id(a.id);
      if (a.input) {
        for (const auto& s : a.sources)
          model_.flows.push_back(FlowEdge{a.sources.size() > 1 ? a.id + "#" + s : a.id, FlowKind::DataAssociation,
                                          resolve(s), a.activity, std::nullopt, "", {}});
      } else if (!a.target.empty()) {
        model_.flows.push_back(FlowEdge{a.id, FlowKind::DataAssociation, a.activity, resolve(a.target), std::nullopt, "", {}});
      }
    }

    for (auto& flow : model_.flows) {
      flow.source = resolve(flow.source);
      flow.target = resolve(flow.target);
      if (!model_.elements.count(flow.source) || !model_.elements.count(flow.target))
        throw IngestError("flow '" + flow.id + "' references unknown element '" +
                          (model_.elements.count(flow.source) ? flow.target : flow.source) + "'");
      if (flow.kind == FlowKind::Sequence) {
        if (flow.conditionExpr) {
          flow.kind = FlowKind::ConditionalSequence;
        } else {
          const auto& src = model_.elements.at(flow.source).attrs;
          if (auto it = src.find("default"); it != src.end() && it->second == flow.id) flow.kind = FlowKind::Default;
        }
      }
    }

    for (auto& p : model_.participants) {
      if (p.processRef.empty()) continue;
      for (const auto& [id, e] : model_.elements) {
        std::string cur = e.parent;
        for (std::size_t guard = 0; !cur.empty() && guard < model_.elements.size(); ++guard) {
          if (cur == p.processRef) {
            p.containedElementIds.push_back(id);
            break;
          }
          cur = model_.elements.at(cur).parent;
        }
      }
    }
  }

  std::string_view bytes_;
  XML_Parser parser_ = nullptr;
  std::string callback_error_;
  bool saw_root_ = false;
  ProcessModel model_;
  std::vector<Frame> frames_;
  std::vector<std::string> scopes_;
  std::vector<std::size_t> scope_push_depth_;
  std::set<std::string> ids_;
  std::vector<std::string> order_;
  std::map<std::string, PendingEvent> pending_events_;
  std::vector<PendingAssoc> assocs_;
  std::map<std::string, std::string> aliases_;
  int unsupported_ = 0;
};

}  // namespace detail

/// Parses BPMN 2.0 XML. The input is only read; `sourceDigest` records its
/// SHA-256 so callers can verify it was left untouched.
inline ProcessModel parse_bpmn(std::string_view xmlBytes) { return detail::IngestParser(xmlBytes).run(); }

inline ProcessModel parse_bpmn_file(const std::string& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    throw IngestError(e.what());
  }
  return parse_bpmn(bytes);
}

}  // namespace bpmnsec::bpmn
