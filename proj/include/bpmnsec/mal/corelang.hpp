#pragma once

#include <string>

#include "bpmnsec/corelang_subset_source.hpp"
#include "bpmnsec/mal/language.hpp"

namespace bpmnsec::mal {

/// Bundled coreLang subset, parsed and resolved like any other `.mal` input.
inline MalSource corelang_subset_source() {
  return MalSource{std::string(kCoreLangSubsetSource), "corelang-subset.mal"};
}

inline const MalLanguage& corelang_subset() {
  static const MalLanguage lang = load_language(corelang_subset_source());
  return lang;
}

}  // namespace bpmnsec::mal
