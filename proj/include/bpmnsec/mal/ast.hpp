#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bpmnsec/distribution.hpp"
#include "bpmnsec/error.hpp"

namespace bpmnsec::mal {

struct MalSource {
  std::string text;
  std::string origin = "<memory>";
};

enum class StepKind { Or, And, Defense };

inline const char* step_kind_token(StepKind k) {
  switch (k) {
    case StepKind::Or: return "|";
    case StepKind::And: return "&";
    case StepKind::Defense: return "#";
  }
  return "?";
}

/// `app.connect` -> {"app", "connect"}; the last segment names a step.
struct TargetPath {
  std::vector<std::string> segments;
  SourceLoc loc;

  const std::string& step() const { return segments.back(); }
  std::string to_string() const {
    std::string out;
    for (const auto& s : segments) {
      if (!out.empty()) out += '.';
      out += s;
    }
    return out;
  }
  bool operator==(const TargetPath&) const = default;
};

struct StepDecl {
  StepKind kind = StepKind::Or;
  std::string name;
  std::optional<Distribution> ttc;
  std::vector<TargetPath> targets;
  SourceLoc loc;
  bool operator==(const StepDecl&) const = default;
};

struct AssetDecl {
  std::string name;
  std::optional<std::string> extends;
  std::vector<StepDecl> steps;
  SourceLoc loc;
  bool operator==(const AssetDecl&) const = default;
};

struct CategoryDecl {
  std::string name;
  std::vector<AssetDecl> assets;
  SourceLoc loc;
  bool operator==(const CategoryDecl&) const = default;
};

enum class Multiplicity { One, Many };

struct AssociationDecl {
  std::string leftAsset;
  std::string leftRole;
  Multiplicity leftMultiplicity = Multiplicity::Many;
  std::string name;
  Multiplicity rightMultiplicity = Multiplicity::Many;
  std::string rightRole;
  std::string rightAsset;
  SourceLoc loc;
  bool operator==(const AssociationDecl&) const = default;
};

/// Parse result before name resolution.
struct UnresolvedLanguage {
  std::string origin;
  std::vector<CategoryDecl> categories;
  std::vector<AssociationDecl> associations;

  // Origin is diagnostic metadata only.
  bool operator==(const UnresolvedLanguage& o) const {
    return categories == o.categories && associations == o.associations;
  }
};

}  // namespace bpmnsec::mal
