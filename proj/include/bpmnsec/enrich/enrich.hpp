#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/distribution.hpp"
#include "bpmnsec/enrich/catalog.hpp"
#include "bpmnsec/enrich/nvd.hpp"
#include "bpmnsec/enrich/ttc.hpp"
#include "bpmnsec/mapping/instance_model.hpp"

namespace bpmnsec::enrich {

/// Attack step of an Application that receives the computed time-to-compromise.
inline constexpr std::string_view kExploitStep = "exploit";

struct AssetEnrichment {
  Candidate candidate;
  std::vector<std::string> matchedVulns;
  Distribution ttcDays = Distribution::unreachable();
  bool operator==(const AssetEnrichment&) const = default;
};

struct EnrichedModel {
  mapping::InstanceModel base;
  std::string variantId;
  double weight = 1.0;
  std::map<std::string, AssetEnrichment> perAsset;
  std::vector<mapping::AssetInstance> addedAssets;
  std::vector<mapping::Link> addedLinks;

  /// Base plus added assets and links, normalized.
  mapping::InstanceModel combined() const {
    mapping::InstanceModel m = base;
    m.assets.insert(m.assets.end(), addedAssets.begin(), addedAssets.end());
    m.links.insert(m.links.end(), addedLinks.begin(), addedLinks.end());
    m.normalize();
    return m;
  }

  /// TTC overrides keyed by (asset id, step name).
  std::map<std::pair<std::string, std::string>, Distribution> ttc_overrides() const {
    std::map<std::pair<std::string, std::string>, Distribution> out;
    for (const auto& [id, e] : perAsset) out.emplace(std::pair{id, std::string(kExploitStep)}, e.ttcDays);
    return out;
  }

  bool operator==(const EnrichedModel&) const = default;
};

/// Wraps a bare instance model so it can be compiled without enrichment.
inline EnrichedModel unenriched(mapping::InstanceModel m) {
  EnrichedModel e;
  e.base = std::move(m);
  e.variantId = "base";
  return e;
}

inline EnrichedModel enrich(const mapping::InstanceModel& m, const ConfigVariant& v, const VulnDb& db, AttackerSkill skill,
                            const TtcParamSet& params) {
  EnrichedModel out;
  out.base = m;
  out.variantId = v.id;
  out.weight = v.weight;
  for (const auto& [assetId, cand] : v.assignment) {
    const auto* a = m.find(assetId);
    if (!a) throw EnrichError("variant " + v.id + " assigns unknown asset '" + assetId + "'");
    if (a->type != "Application")
      throw EnrichError("variant " + v.id + " assigns '" + assetId + "' of type " + a->type + ", not an Application");
    const auto vulns = match_vulns(cand, db);
    AssetEnrichment e{cand, {}, ttc_mcqueen(vulns, skill, params)};
    for (const auto& r : vulns) {
      e.matchedVulns.push_back(r.cveId);
      const std::string vulnId = assetId + "/vuln/" + r.cveId;
      const std::string tag = std::string(mapping::kSyntheticPrefix) + "enrich:" + r.cveId;
      out.addedAssets.push_back({vulnId, "Vulnerability", r.cveId, {tag}});
      out.addedLinks.push_back({"ApplicationVulnerability", assetId, vulnId});
      if (r.exploitAvailable) {
        const std::string exploitId = assetId + "/exploit/" + r.cveId;
        out.addedAssets.push_back({exploitId, "Exploit", r.cveId + " exploit", {tag}});
        out.addedLinks.push_back({"VulnerabilityExploit", vulnId, exploitId});
      }
    }
    out.perAsset.emplace(assetId, std::move(e));
  }
  return out;
}

inline void to_json(nlohmann::json& j, const AssetEnrichment& e) {
  j = {{"candidate", e.candidate}, {"matchedVulns", e.matchedVulns}, {"ttcDays", e.ttcDays}};
}

/// Instance-model document extended with an `enrichment` block.
inline nlohmann::json enriched_to_json(const EnrichedModel& e) {
  nlohmann::json j = e.combined();
  std::vector<std::string> added;
  for (const auto& a : e.addedAssets) added.push_back(a.id);
  j["enrichment"] = {{"variant", e.variantId}, {"weight", e.weight}, {"perAsset", e.perAsset}, {"addedAssets", added}};
  return j;
}

}  // namespace bpmnsec::enrich
