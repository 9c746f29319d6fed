#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/bpmn/model.hpp"
#include "bpmnsec/digest.hpp"
#include "bpmnsec/enrich/nvd.hpp"
#include "bpmnsec/error.hpp"
#include "bpmnsec/mapping/instance_model.hpp"

namespace bpmnsec::enrich {

/// One catalog row. `match` is an exact asset id or a glob over asset ids
/// (`*` any run, `?` any character).
struct CatalogEntry {
  std::string match;
  std::string role;
  std::vector<Candidate> candidates;
  bool operator==(const CatalogEntry&) const = default;
};

struct ComponentCatalog {
  std::vector<CatalogEntry> entries;
  bool operator==(const ComponentCatalog&) const = default;
};

inline bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

inline void validate_catalog(const ComponentCatalog& c) {
  if (c.entries.empty()) throw EnrichError("catalog has no entries");
  for (const auto& e : c.entries) {
    if (e.match.empty()) throw EnrichError("catalog entry with empty match");
    if (e.candidates.empty()) throw EnrichError("catalog entry '" + e.match + "' lists no candidates");
    double sum = 0.0;
    for (const auto& cand : e.candidates) {
      if (!(cand.share >= 0.0 && cand.share <= 1.0))
        throw EnrichError("catalog entry '" + e.match + "': usage share of " + cand.product + " outside [0, 1]");
      if (!parse_version(cand.version))
        throw EnrichError("catalog entry '" + e.match + "': candidate " + cand.product + " has unparseable version '" +
                          cand.version + "'");
      sum += cand.share;
    }
    if (sum > 1.0 + 1e-9) throw EnrichError("catalog entry '" + e.match + "': usage shares sum above 1");
  }
}

inline void to_json(nlohmann::json& j, const Candidate& c) {
  j = {{"product", c.product}, {"version", c.version}, {"share", c.share}};
}
inline void from_json(const nlohmann::json& j, Candidate& c) {
  j.at("product").get_to(c.product);
  j.at("version").get_to(c.version);
  c.share = j.value("share", 1.0);
}
inline void to_json(nlohmann::json& j, const CatalogEntry& e) {
  j = {{"match", e.match}, {"role", e.role}, {"candidates", e.candidates}};
}
inline void from_json(const nlohmann::json& j, CatalogEntry& e) {
  j.at("match").get_to(e.match);
  e.role = j.value("role", e.match);
  j.at("candidates").get_to(e.candidates);
}

/// Catalog document: `{"catalog": 1, "entries": [...]}`.
inline ComponentCatalog parse_catalog(std::string_view text, const std::string& origin = "<catalog>") {
  ComponentCatalog c;
  try {
    auto doc = nlohmann::json::parse(text);
    if (doc.value("catalog", 0) != 1) throw EnrichError(origin + ": expected \"catalog\": 1");
    doc.at("entries").get_to(c.entries);
  } catch (const nlohmann::json::exception& e) {
    throw EnrichError(origin + ": " + e.what());
  }
  validate_catalog(c);
  return c;
}

inline ComponentCatalog load_catalog(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw EnrichError(e.what());
  }
  return parse_catalog(text, path);
}

/// A catalog-matched Application with its candidate list.
struct CatalogSlot {
  std::string assetId;
  std::string role;
  std::string participant;  // empty when the asset lies outside every pool
  std::vector<Candidate> candidates;
};

/// Entry for an asset: exact matches win, then the first matching glob.
inline const CatalogEntry* catalog_lookup(const ComponentCatalog& c, std::string_view assetId) {
  for (const auto& e : c.entries)
    if (e.match == assetId) return &e;
  for (const auto& e : c.entries)
    if (glob_match(e.match, assetId)) return &e;
  return nullptr;
}

/// Applications covered by the catalog, sorted by asset id.
inline std::vector<CatalogSlot> resolve_catalog(const ComponentCatalog& c, const mapping::InstanceModel& m,
                                                const bpmn::ProcessModel& pm) {
  std::vector<CatalogSlot> out;
  for (const auto& a : m.assets) {
    if (a.type != "Application") continue;
    const auto* e = catalog_lookup(c, a.id);
    if (!e) continue;
    CatalogSlot s{a.id, e->role, {}, e->candidates};
    for (const auto& prov : a.provenance) {
      if (const auto* p = pm.participant_of(prov)) {
        s.participant = p->id;
        break;
      }
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.assetId < b.assetId; });
  return out;
}

struct Exhaustive {};
struct OnePerParticipant {};
struct UsageShareFloor {
  double floor = 0.0;
};
using Pruning = std::variant<Exhaustive, OnePerParticipant, UsageShareFloor>;

/// `exhaustive`, `one-per-participant` or `share-floor:<f>`.
inline Pruning parse_pruning(std::string_view s) {
  if (s == "exhaustive") return Exhaustive{};
  if (s == "one-per-participant") return OnePerParticipant{};
  if (s.starts_with("share-floor:")) {
    const std::string num(s.substr(12));
    std::size_t used = 0;
    double f = 0.0;
    try {
      f = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || num.empty() || !(f >= 0.0 && f <= 1.0))
      throw ConfigError("share-floor needs a fraction in [0, 1], got '" + num + "'");
    return UsageShareFloor{f};
  }
  throw ConfigError("unknown pruning policy '" + std::string(s) + "' (exhaustive, one-per-participant, share-floor:<f>)");
}

inline std::string pruning_name(const Pruning& p) {
  if (std::holds_alternative<Exhaustive>(p)) return "exhaustive";
  if (std::holds_alternative<OnePerParticipant>(p)) return "one-per-participant";
  return "share-floor:" + nlohmann::json(std::get<UsageShareFloor>(p).floor).dump();
}

struct ConfigVariant {
  std::string id;
  std::map<std::string, Candidate> assignment;
  double weight = 1.0;
  bool operator==(const ConfigVariant&) const = default;
};

inline constexpr std::size_t kMaxVariants = 4096;

namespace detail {

/// A unit of choice: one or more slots that are decided together.
struct ChoiceGroup {
  std::vector<std::vector<std::pair<std::string, Candidate>>> options;  // per option: assignments
  std::vector<double> weights;
};

inline std::vector<ChoiceGroup> independent_groups(const std::vector<CatalogSlot>& slots, double floor) {
  std::vector<ChoiceGroup> groups;
  for (const auto& s : slots) {
    ChoiceGroup g;
    for (const auto& c : s.candidates) {
      if (c.share < floor) continue;
      g.options.push_back({{s.assetId, c}});
      g.weights.push_back(c.share);
    }
    if (g.options.empty())
      throw EnrichError("pruning leaves no candidate for asset '" + s.assetId + "'");
    groups.push_back(std::move(g));
  }
  return groups;
}

/// Same-role Applications of one participant share a product; versions of
/// that product still vary per Application. Option weight is the mean share
/// of the chosen member candidates.
inline std::vector<ChoiceGroup> participant_groups(const std::vector<CatalogSlot>& slots) {
  std::map<std::pair<std::string, std::string>, std::vector<const CatalogSlot*>> pools;
  std::vector<ChoiceGroup> groups;
  std::vector<CatalogSlot> loners;
  for (const auto& s : slots) {
    if (s.participant.empty()) {
      loners.push_back(s);
    } else {
      pools[{s.participant, s.role}].push_back(&s);
    }
  }
  for (const auto& [key, members] : pools) {
    std::set<std::string> common;
    for (const auto& c : members.front()->candidates) common.insert(c.product);
    for (const auto* m : members) {
      std::set<std::string> mine;
      for (const auto& c : m->candidates) mine.insert(c.product);
      std::erase_if(common, [&](const std::string& p) { return !mine.count(p); });
    }
    if (common.empty())
      throw EnrichError("Applications with role '" + key.second + "' in participant '" + key.first +
                        "' have no candidate product in common");
    ChoiceGroup g;
    for (const auto& product : common) {
      std::vector<std::vector<std::pair<std::string, Candidate>>> partial{{}};
      std::vector<double> shareSums{0.0};
      for (const auto* m : members) {
        std::vector<std::vector<std::pair<std::string, Candidate>>> next;
        std::vector<double> nextSums;
        for (std::size_t i = 0; i < partial.size(); ++i) {
          for (const auto& c : m->candidates) {
            if (c.product != product) continue;
            auto opt = partial[i];
            opt.emplace_back(m->assetId, c);
            next.push_back(std::move(opt));
            nextSums.push_back(shareSums[i] + c.share);
          }
        }
        partial = std::move(next);
        shareSums = std::move(nextSums);
        if (partial.size() > kMaxVariants) throw EnrichError("variant count exceeds " + std::to_string(kMaxVariants));
      }
      for (std::size_t i = 0; i < partial.size(); ++i) {
        g.options.push_back(std::move(partial[i]));
        g.weights.push_back(shareSums[i] / static_cast<double>(members.size()));
      }
    }
    groups.push_back(std::move(g));
  }
  auto rest = independent_groups(loners, 0.0);
  groups.insert(groups.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return groups;
}

}  // namespace detail

/// Enumerates configuration variants in a deterministic order. Weights are
/// renormalized to sum to one; all-zero raw weights become uniform.
inline std::vector<ConfigVariant> generate_variants(const std::vector<CatalogSlot>& slots, const Pruning& pruning) {
  if (slots.empty()) throw EnrichError("catalog matches no Application of the model");
  std::vector<detail::ChoiceGroup> groups;
  if (std::holds_alternative<OnePerParticipant>(pruning)) {
    groups = detail::participant_groups(slots);
  } else {
    const double floor = std::holds_alternative<UsageShareFloor>(pruning) ? std::get<UsageShareFloor>(pruning).floor : 0.0;
    groups = detail::independent_groups(slots, floor);
  }
  std::size_t total = 1;
  for (const auto& g : groups) {
    total *= g.options.size();
    if (total > kMaxVariants) throw EnrichError("variant count exceeds " + std::to_string(kMaxVariants));
  }

  std::vector<ConfigVariant> out;
  std::vector<std::size_t> idx(groups.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    ConfigVariant v;
    v.id = "v" + std::to_string(n);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (const auto& [asset, cand] : groups[g].options[idx[g]]) v.assignment[asset] = cand;
      v.weight *= groups[g].weights[idx[g]];
    }
    out.push_back(std::move(v));
    for (std::size_t g = groups.size(); g-- > 0;) {
      if (++idx[g] < groups[g].options.size()) break;
      idx[g] = 0;
    }
  }
  double sum = 0.0;
  for (const auto& v : out) sum += v.weight;
  for (auto& v : out) v.weight = sum > 0.0 ? v.weight / sum : 1.0 / static_cast<double>(out.size());
  return out;
}

inline void to_json(nlohmann::json& j, const ConfigVariant& v) {
  j = {{"id", v.id}, {"weight", v.weight}, {"assignment", v.assignment}};
}
inline void from_json(const nlohmann::json& j, ConfigVariant& v) {
  j.at("id").get_to(v.id);
  j.at("weight").get_to(v.weight);
  j.at("assignment").get_to(v.assignment);
}

}  // namespace bpmnsec::enrich
