#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/error.hpp"
#include "bpmnsec/mal/language.hpp"

namespace bpmnsec::mapping {

inline constexpr std::string_view kSyntheticPrefix = "synthetic:";

struct AssetInstance {
  std::string id;
  std::string type;
  std::string name;
  /// BPMN element ids this asset stands for, or `synthetic:` tags.
  std::vector<std::string> provenance;

  bool operator==(const AssetInstance&) const = default;
};

struct Link {
  std::string association;
  std::string left;
  std::string right;

  auto operator<=>(const Link&) const = default;
};

/// Concrete coreLang instance derived from a process model.
struct InstanceModel {
  std::vector<AssetInstance> assets;
  std::vector<Link> links;
  /// Enabled defenses as "assetId:defenseName".
  std::set<std::string> enabledDefenses;

  const AssetInstance* find(std::string_view id) const {
    for (const auto& a : assets)
      if (a.id == id) return &a;
    return nullptr;
  }

  void normalize() {
    std::sort(assets.begin(), assets.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());
  }

  bool operator==(const InstanceModel&) const = default;
};

struct MappingTrace {
  std::map<std::string, std::vector<std::string>> perBpmnElement;
  std::map<std::string, std::size_t> perRule;

  bool operator==(const MappingTrace&) const = default;
};

inline bool is_synthetic(std::string_view provenance) { return provenance.starts_with(kSyntheticPrefix); }

/// Index of the association a link instantiates, matched by name and
/// endpoint types (names alone are not unique in MAL).
inline std::optional<std::size_t> find_association(const mal::MalLanguage& lang, std::string_view name,
                                                   std::string_view leftType, std::string_view rightType) {
  for (std::size_t i = 0; i < lang.associations.size(); ++i) {
    const auto& a = lang.associations[i];
    if (a.name == name && lang.is_a(leftType, a.leftAsset) && lang.is_a(rightType, a.rightAsset)) return i;
  }
  return std::nullopt;
}

/// Checks types, links, multiplicities and enabled defenses against the
/// language. Throws MappingError on the first violation.
inline void validate_instance(const InstanceModel& m, const mal::MalLanguage& lang) {
  std::map<std::string, const AssetInstance*, std::less<>> byId;
  for (const auto& a : m.assets) {
    if (!lang.has_asset(a.type)) throw MappingError("asset '" + a.id + "' has unknown type '" + a.type + "'");
    if (!byId.emplace(a.id, &a).second) throw MappingError("duplicate asset id '" + a.id + "'");
  }
  std::map<std::tuple<std::size_t, bool, std::string>, int> degree;
  for (const auto& l : m.links) {
    auto left = byId.find(l.left);
    auto right = byId.find(l.right);
    if (left == byId.end() || right == byId.end())
      throw MappingError("link " + l.association + " references unknown asset '" +
                         (left == byId.end() ? l.left : l.right) + "'");
    auto idx = find_association(lang, l.association, left->second->type, right->second->type);
    if (!idx)
      throw MappingError("link " + l.association + "(" + l.left + ", " + l.right +
                         ") matches no association for types " + left->second->type + " and " +
                         right->second->type);
    const auto& def = lang.associations[*idx];
    if (def.leftMultiplicity == mal::Multiplicity::One && ++degree[{*idx, false, l.right}] > 1)
      throw MappingError("asset '" + l.right + "' has more than one '" + def.leftRole + "' via " + def.name);
    if (def.rightMultiplicity == mal::Multiplicity::One && ++degree[{*idx, true, l.left}] > 1)
      throw MappingError("asset '" + l.left + "' has more than one '" + def.rightRole + "' via " + def.name);
  }
  for (const auto& d : m.enabledDefenses) {
    auto sep = d.rfind(':');
    auto it = sep == std::string::npos ? byId.end() : byId.find(d.substr(0, sep));
    if (it == byId.end() || !lang.asset(it->second->type).find_defense(d.substr(sep + 1)))
      throw MappingError("enabled defense '" + d + "' does not name a defense of an existing asset");
  }
}

inline void to_json(nlohmann::json& j, const AssetInstance& a) {
  j = {{"id", a.id}, {"type", a.type}, {"name", a.name}, {"provenance", a.provenance}};
}
inline void from_json(const nlohmann::json& j, AssetInstance& a) {
  j.at("id").get_to(a.id);
  j.at("type").get_to(a.type);
  j.at("name").get_to(a.name);
  j.at("provenance").get_to(a.provenance);
}
inline void to_json(nlohmann::json& j, const Link& l) {
  j = {{"association", l.association}, {"left", l.left}, {"right", l.right}};
}
inline void from_json(const nlohmann::json& j, Link& l) {
  j.at("association").get_to(l.association);
  j.at("left").get_to(l.left);
  j.at("right").get_to(l.right);
}

inline void to_json(nlohmann::json& j, const InstanceModel& m) {
  j = {{"schema", "bpmnsec.instance/1"}, {"assets", m.assets}, {"links", m.links}, {"enabledDefenses", m.enabledDefenses}};
}
inline void from_json(const nlohmann::json& j, InstanceModel& m) {
  j.at("assets").get_to(m.assets);
  j.at("links").get_to(m.links);
  if (j.contains("enabledDefenses")) j.at("enabledDefenses").get_to(m.enabledDefenses);
}

inline void to_json(nlohmann::json& j, const MappingTrace& t) {
  j = {{"perBpmnElement", t.perBpmnElement}, {"perRule", t.perRule}};
}

}  // namespace bpmnsec::mapping
