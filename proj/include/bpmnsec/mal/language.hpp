#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bpmnsec/mal/ast.hpp"
#include "bpmnsec/mal/parser.hpp"

namespace bpmnsec::mal {

/// One traversal over an association. `toRight` means the current asset sits
/// on the left side of the association and the hop lands on the right side.
struct RoleHop {
  std::size_t association = 0;
  bool toRight = true;
  std::string role;
  std::string targetAsset;
  bool operator==(const RoleHop&) const = default;
};

struct ResolvedPath {
  TargetPath path;
  std::vector<RoleHop> hops;
  std::string targetAsset;
  std::string step;
  bool operator==(const ResolvedPath&) const = default;
};

struct AttackStepDef {
  std::string name;
  StepKind kind = StepKind::Or;  // Or or And
  Distribution ttc = Distribution::instant();
  std::vector<ResolvedPath> targets;
  std::string declaredIn;
  bool operator==(const AttackStepDef&) const = default;
};

struct DefenseDef {
  std::string name;
  std::vector<ResolvedPath> targets;
  std::string declaredIn;
  bool operator==(const DefenseDef&) const = default;
};

struct AssetTypeDef {
  std::string name;
  std::string category;
  std::optional<std::string> extends;
  std::vector<AttackStepDef> attackSteps;
  std::vector<DefenseDef> defenses;

  const AttackStepDef* find_step(std::string_view n) const {
    for (const auto& s : attackSteps)
      if (s.name == n) return &s;
    return nullptr;
  }
  const DefenseDef* find_defense(std::string_view n) const {
    for (const auto& d : defenses)
      if (d.name == n) return &d;
    return nullptr;
  }
  bool operator==(const AssetTypeDef&) const = default;
};

struct AssociationDef {
  std::string leftAsset;
  std::string leftRole;
  Multiplicity leftMultiplicity = Multiplicity::Many;
  std::string name;
  Multiplicity rightMultiplicity = Multiplicity::Many;
  std::string rightRole;
  std::string rightAsset;
  bool operator==(const AssociationDef&) const = default;
};

/// Fully resolved language: inheritance flattened, every role path checked.
struct MalLanguage {
  std::map<std::string, AssetTypeDef, std::less<>> assets;
  std::vector<AssociationDef> associations;

  bool has_asset(std::string_view name) const { return assets.find(name) != assets.end(); }

  const AssetTypeDef& asset(std::string_view name) const {
    auto it = assets.find(name);
    if (it == assets.end()) throw LanguageError("unknown asset type '" + std::string(name) + "'");
    return it->second;
  }

  /// True when `type` equals `base` or inherits from it.
  bool is_a(std::string_view type, std::string_view base) const {
    std::string_view cur = type;
    for (std::size_t guard = 0; guard <= assets.size(); ++guard) {
      if (cur == base) return true;
      auto it = assets.find(cur);
      if (it == assets.end() || !it->second.extends) return false;
      cur = *it->second.extends;
    }
    return false;
  }

  /// Role lookup from an asset type; nullopt when no association offers it.
  std::optional<RoleHop> role(std::string_view assetType, std::string_view roleName) const {
    for (std::size_t i = 0; i < associations.size(); ++i) {
      const auto& a = associations[i];
      if (a.rightRole == roleName && is_a(assetType, a.leftAsset)) return RoleHop{i, true, a.rightRole, a.rightAsset};
      if (a.leftRole == roleName && is_a(assetType, a.rightAsset)) return RoleHop{i, false, a.leftRole, a.leftAsset};
    }
    return std::nullopt;
  }

  bool operator==(const MalLanguage&) const = default;
};

namespace detail {

struct AssetSource {
  const AssetDecl* decl = nullptr;
  std::string category;
  std::string origin;
};

inline std::vector<std::string> inheritance_order(const std::map<std::string, AssetSource>& decls) {
  std::vector<std::string> order;
  std::map<std::string, int> state;  // 0 new, 1 visiting, 2 done
  std::function<void(const std::string&, std::vector<std::string>&)> visit = [&](const std::string& name,
                                                                                 std::vector<std::string>& chain) {
    int& st = state[name];
    if (st == 2) return;
    const auto& src = decls.at(name);
    chain.push_back(name);
    if (st == 1) {
      std::string cyc;
      for (const auto& c : chain) cyc += (cyc.empty() ? "" : " -> ") + c;
      throw LanguageError(src.origin, src.decl->loc, "inheritance cycle: " + cyc);
    }
    st = 1;
    if (src.decl->extends) {
      if (!decls.count(*src.decl->extends))
        throw LanguageError(src.origin, src.decl->loc,
                            "asset '" + name + "' extends unknown asset '" + *src.decl->extends + "'");
      visit(*src.decl->extends, chain);
    }
    chain.pop_back();
    st = 2;
    order.push_back(name);
  };
  for (const auto& [name, _] : decls) {
    std::vector<std::string> chain;
    visit(name, chain);
  }
  return order;
}

}  // namespace detail

/// Resolves one or more parsed units into a single language. Units behave as
/// if concatenated, so a unit may extend or associate assets declared in an
/// earlier or later unit.
inline MalLanguage resolve_language(std::span<const UnresolvedLanguage> units) {
  std::map<std::string, detail::AssetSource> decls;
  for (const auto& unit : units) {
    for (const auto& cat : unit.categories) {
      for (const auto& a : cat.assets) {
        auto [it, inserted] = decls.emplace(a.name, detail::AssetSource{&a, cat.name, unit.origin});
        if (!inserted) throw LanguageError(unit.origin, a.loc, "duplicate asset '" + a.name + "'");
      }
    }
  }

  MalLanguage lang;
  for (const auto& unit : units) {
    for (const auto& a : unit.associations) {
      for (const auto* side : {&a.leftAsset, &a.rightAsset}) {
        if (!decls.count(*side))
          throw LanguageError(unit.origin, a.loc, "association '" + a.name + "' references unknown asset '" + *side + "'");
      }
      lang.associations.push_back(AssociationDef{a.leftAsset, a.leftRole, a.leftMultiplicity, a.name,
                                                 a.rightMultiplicity, a.rightRole, a.rightAsset});
    }
  }

  // Flatten inheritance parents-first; a child step with a parent's name
  // replaces the parent's definition entirely.
  struct Pending {
    std::vector<std::pair<const StepDecl*, std::string>> members;  // decl, declaring asset
  };
  std::map<std::string, Pending> flat;
  const auto order = detail::inheritance_order(decls);
  for (const auto& name : order) {
    const auto& src = decls.at(name);
    Pending p;
    if (src.decl->extends) p = flat.at(*src.decl->extends);
    std::set<std::string> own;
    for (const auto& step : src.decl->steps) {
      if (!own.insert(step.name).second)
        throw LanguageError(src.origin, step.loc, "duplicate step '" + step.name + "' in asset '" + name + "'");
    }
    std::erase_if(p.members, [&](const auto& m) { return own.count(m.first->name) > 0; });
    for (const auto& step : src.decl->steps) p.members.emplace_back(&step, name);
    flat.emplace(name, std::move(p));

    AssetTypeDef def;
    def.name = name;
    def.category = src.category;
    def.extends = src.decl->extends;
    lang.assets.emplace(name, std::move(def));
  }

  // Role names must be unambiguous from every asset type.
  for (const auto& [name, src] : decls) {
    std::set<std::string> roles;
    for (const auto& a : lang.associations) {
      std::vector<std::string> visible;
      if (lang.is_a(name, a.leftAsset)) visible.push_back(a.rightRole);
      if (lang.is_a(name, a.rightAsset)) visible.push_back(a.leftRole);
      for (const auto& r : visible) {
        if (!roles.insert(r).second)
          throw LanguageError(src.origin, src.decl->loc, "role '" + r + "' is ambiguous for asset '" + name + "'");
      }
    }
  }

  auto resolve_path = [&](const std::string& owner, const TargetPath& path, const std::string& origin) {
    ResolvedPath rp;
    rp.path = path;
    std::string cur = owner;
    for (std::size_t i = 0; i + 1 < path.segments.size(); ++i) {
      auto hop = lang.role(cur, path.segments[i]);
      if (!hop)
        throw LanguageError(origin, path.loc,
                            "cannot resolve '" + path.to_string() + "': asset '" + cur + "' has no role '" +
                                path.segments[i] + "'");
      cur = hop->targetAsset;
      rp.hops.push_back(*hop);
    }
    rp.targetAsset = cur;
    rp.step = path.step();
    const auto& members = flat.at(cur).members;
    auto it = std::find_if(members.begin(), members.end(), [&](const auto& m) { return m.first->name == rp.step; });
    if (it == members.end())
      throw LanguageError(origin, path.loc,
                          "cannot resolve '" + path.to_string() + "': asset '" + cur + "' has no step '" + rp.step + "'");
    if (it->first->kind == StepKind::Defense)
      throw LanguageError(origin, path.loc, "'" + path.to_string() + "' targets defense '" + rp.step + "', not an attack step");
    return rp;
  };

  for (const auto& name : order) {
    auto& def = lang.assets.at(name);
    for (const auto& [decl, declaredIn] : flat.at(name).members) {
      const auto& origin = decls.at(declaredIn).origin;
      std::vector<ResolvedPath> targets;
      for (const auto& t : decl->targets) targets.push_back(resolve_path(name, t, origin));
      if (decl->kind == StepKind::Defense) {
        def.defenses.push_back(DefenseDef{decl->name, std::move(targets), declaredIn});
      } else {
        def.attackSteps.push_back(
            AttackStepDef{decl->name, decl->kind, decl->ttc.value_or(Distribution::instant()), std::move(targets), declaredIn});
      }
    }
  }
  return lang;
}

inline MalLanguage resolve_language(const UnresolvedLanguage& unit) {
  return resolve_language(std::span<const UnresolvedLanguage>(&unit, 1));
}

inline MalLanguage load_language(const MalSource& src) { return resolve_language(parse_mal(src)); }

}  // namespace bpmnsec::mal
