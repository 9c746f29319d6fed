#pragma once

#include <sstream>
#include <string>

#include "bpmnsec/mal/ast.hpp"

namespace bpmnsec::mal {

namespace detail {

inline std::string number_text(double v) { return nlohmann::json(v).dump(); }

inline std::string distribution_text(const Distribution& d) {
  if (d.is_instant()) return "Instant";
  if (d.is_constant()) return "Constant(" + number_text(d.days()) + ")";
  return "Exp(" + number_text(d.rate()) + ")";
}

inline const char* multiplicity_text(Multiplicity m) { return m == Multiplicity::One ? "1" : "*"; }

}  // namespace detail

/// Canonical source text for an AST; parse(print(ast)) == ast.
inline std::string print_mal(const UnresolvedLanguage& lang) {
  std::ostringstream os;
  for (const auto& cat : lang.categories) {
    os << "category " << cat.name << " {\n";
    for (const auto& asset : cat.assets) {
      os << "  asset " << asset.name;
      if (asset.extends) os << " extends " << *asset.extends;
      os << " {\n";
      for (const auto& step : asset.steps) {
        os << "    " << step_kind_token(step.kind) << ' ' << step.name;
        if (step.ttc) os << " [" << detail::distribution_text(*step.ttc) << ']';
        os << '\n';
        if (!step.targets.empty()) {
          os << "      -> ";
          for (std::size_t i = 0; i < step.targets.size(); ++i) {
            if (i) os << ",\n         ";
            os << step.targets[i].to_string();
          }
          os << '\n';
        }
      }
      os << "  }\n";
    }
    os << "}\n";
  }
  if (!lang.associations.empty()) {
    os << "associations {\n";
    for (const auto& a : lang.associations) {
      os << "  " << a.leftAsset << '[' << a.leftRole << "] " << detail::multiplicity_text(a.leftMultiplicity)
         << " <- " << a.name << " -> " << detail::multiplicity_text(a.rightMultiplicity) << " [" << a.rightRole
         << ']' << a.rightAsset << '\n';
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace bpmnsec::mal
