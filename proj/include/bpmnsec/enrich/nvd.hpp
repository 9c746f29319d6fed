#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/digest.hpp"
#include "bpmnsec/enrich/version.hpp"
#include "bpmnsec/error.hpp"

namespace bpmnsec::enrich {

struct CpeMatch {
  /// `cpe:2.3:<part>:<vendor>:<product>`
  std::string productPrefix;
  VersionRange range;
  bool operator==(const CpeMatch&) const = default;
};

struct VulnRecord {
  std::string cveId;
  std::vector<CpeMatch> cpeMatches;
  double cvssBase = 0.0;
  bool exploitAvailable = false;
  bool operator==(const VulnRecord&) const = default;
};

/// Immutable after load. Records are sorted by CVE id.
struct VulnDb {
  std::vector<VulnRecord> records;
  std::vector<std::string> warnings;

  const VulnRecord* find(std::string_view cveId) const {
    for (const auto& r : records)
      if (r.cveId == cveId) return &r;
    return nullptr;
  }
};

namespace detail {

/// Splits a CPE 2.3 formatted string on unescaped colons.
inline std::vector<std::string> split_cpe(std::string_view cpe) {
  std::vector<std::string> out(1);
  for (std::size_t i = 0; i < cpe.size(); ++i) {
    if (cpe[i] == '\\' && i + 1 < cpe.size()) {
      out.back() += cpe[i];
      out.back() += cpe[++i];
    } else if (cpe[i] == ':') {
      out.emplace_back();
    } else {
      out.back() += cpe[i];
    }
  }
  return out;
}

inline std::optional<CpeMatch> parse_cpe_match(const nlohmann::json& m, const char* uriKey) {
  if (m.contains("vulnerable") && !m.at("vulnerable").get<bool>()) return std::nullopt;
  const auto parts = split_cpe(m.at(uriKey).get<std::string>());
  if (parts.size() < 6 || parts[0] != "cpe" || parts[1] != "2.3") throw std::invalid_argument("malformed CPE");
  CpeMatch cm;
  cm.productPrefix = parts[0] + ":" + parts[1] + ":" + parts[2] + ":" + parts[3] + ":" + parts[4];
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (m.contains(key) && m.at(key).is_string()) return m.at(key).get<std::string>();
    return std::nullopt;
  };
  cm.range.startIncluding = opt("versionStartIncluding");
  cm.range.startExcluding = opt("versionStartExcluding");
  cm.range.endIncluding = opt("versionEndIncluding");
  cm.range.endExcluding = opt("versionEndExcluding");
  const bool bounded = cm.range.startIncluding || cm.range.startExcluding || cm.range.endIncluding || cm.range.endExcluding;
  if (!bounded && parts[5] != "*" && parts[5] != "-") cm.range.exact = parts[5];
  return cm;
}

/// Walks configuration nodes (and 1.1-style children) collecting matches.
inline void collect_nodes(const nlohmann::json& nodes, const char* listKey, const char* uriKey, std::vector<CpeMatch>& out) {
  for (const auto& node : nodes) {
    if (node.contains("negate") && node.at("negate").get<bool>()) continue;
    if (node.contains(listKey))
      for (const auto& m : node.at(listKey))
        if (auto cm = parse_cpe_match(m, uriKey)) out.push_back(std::move(*cm));
    if (node.contains("children")) collect_nodes(node.at("children"), listKey, uriKey, out);
  }
}

inline bool has_exploit_tag(const nlohmann::json& refs) {
  for (const auto& r : refs) {
    if (!r.contains("tags")) continue;
    for (const auto& t : r.at("tags"))
      if (t.get<std::string>().find("Exploit") != std::string::npos) return true;
  }
  return false;
}

inline std::optional<double> first_score(const nlohmann::json& metrics, const char* key) {
  if (!metrics.contains(key) || metrics.at(key).empty()) return std::nullopt;
  return metrics.at(key).at(0).at("cvssData").at("baseScore").get<double>();
}

inline std::optional<VulnRecord> parse_item_v11(const nlohmann::json& item) {
  VulnRecord r;
  const auto& cve = item.at("cve");
  r.cveId = cve.at("CVE_data_meta").at("ID").get<std::string>();
  if (cve.contains("references")) r.exploitAvailable = has_exploit_tag(cve.at("references").at("reference_data"));
  if (item.contains("configurations")) collect_nodes(item.at("configurations").at("nodes"), "cpe_match", "cpe23Uri", r.cpeMatches);
  const auto& impact = item.contains("impact") ? item.at("impact") : nlohmann::json::object();
  if (impact.contains("baseMetricV3")) {
    r.cvssBase = impact.at("baseMetricV3").at("cvssV3").at("baseScore").get<double>();
  } else if (impact.contains("baseMetricV2")) {
    r.cvssBase = impact.at("baseMetricV2").at("cvssV2").at("baseScore").get<double>();
  } else {
    return std::nullopt;
  }
  return r;
}

inline std::optional<VulnRecord> parse_item_v20(const nlohmann::json& item) {
  VulnRecord r;
  const auto& cve = item.at("cve");
  r.cveId = cve.at("id").get<std::string>();
  if (cve.contains("references")) r.exploitAvailable = has_exploit_tag(cve.at("references"));
  if (cve.contains("configurations"))
    for (const auto& cfg : cve.at("configurations")) collect_nodes(cfg.at("nodes"), "cpeMatch", "criteria", r.cpeMatches);
  const auto& metrics = cve.contains("metrics") ? cve.at("metrics") : nlohmann::json::object();
  std::optional<double> score;
  for (const char* key : {"cvssMetricV31", "cvssMetricV30", "cvssMetricV2"})
    if (!score) score = first_score(metrics, key);
  if (!score) return std::nullopt;
  r.cvssBase = *score;
  return r;
}

}  // namespace detail

/// Adds the records of one feed document. Malformed records are skipped and
/// reported in `warnings`; a document without a recognizable envelope throws.
inline void load_nvd_document(VulnDb& db, std::string_view text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw EnrichError(origin + ": not a JSON document: " + e.what());
  }
  const char* itemsKey = nullptr;
  bool v20 = false;
  if (doc.is_object() && doc.contains("CVE_Items") && doc.at("CVE_Items").is_array()) {
    itemsKey = "CVE_Items";
  } else if (doc.is_object() && doc.contains("vulnerabilities") && doc.at("vulnerabilities").is_array()) {
    itemsKey = "vulnerabilities";
    v20 = true;
  } else {
    throw EnrichError(origin + ": neither an NVD 1.1 nor an NVD 2.0 feed envelope");
  }
  std::set<std::string> seen;
  for (const auto& r : db.records) seen.insert(r.cveId);
  std::size_t index = 0;
  for (const auto& item : doc.at(itemsKey)) {
    const std::string where = origin + ": record " + std::to_string(index++);
    try {
      auto rec = v20 ? detail::parse_item_v20(item) : detail::parse_item_v11(item);
      if (!rec) {
        db.warnings.push_back(where + ": no CVSS base score, skipped");
        continue;
      }
      if (rec->cpeMatches.empty()) {
        db.warnings.push_back(where + " (" + rec->cveId + "): no CPE match, skipped");
        continue;
      }
      if (!(rec->cvssBase >= 0.0 && rec->cvssBase <= 10.0)) {
        db.warnings.push_back(where + " (" + rec->cveId + "): CVSS base score out of range, skipped");
        continue;
      }
      if (!seen.insert(rec->cveId).second) {
        db.warnings.push_back(where + " (" + rec->cveId + "): duplicate CVE id, skipped");
        continue;
      }
      db.records.push_back(std::move(*rec));
    } catch (const std::exception& e) {
      db.warnings.push_back(where + ": schema violation, skipped (" + e.what() + ")");
    }
  }
  std::sort(db.records.begin(), db.records.end(), [](const auto& a, const auto& b) { return a.cveId < b.cveId; });
}

/// Loads feed files in the given order.
inline VulnDb load_nvd(const std::vector<std::filesystem::path>& feedFiles) {
  VulnDb db;
  for (const auto& f : feedFiles) {
    std::string text;
    try {
      text = read_file(f.string());
    } catch (const std::exception& e) {
      throw EnrichError(e.what());
    }
    load_nvd_document(db, text, f.string());
  }
  return db;
}

/// Loads every `*.json` file of a directory, in file-name order.
inline VulnDb load_nvd_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw EnrichError("NVD directory '" + dir.string() + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return load_nvd(files);
}

struct Candidate {
  std::string product;  // CPE prefix, `cpe:2.3:a:vendor:product`
  std::string version;
  double share = 1.0;
  bool operator==(const Candidate&) const = default;
};

/// Records whose CPE prefix and version range cover the candidate, by CVE id.
inline std::vector<VulnRecord> match_vulns(const Candidate& c, const VulnDb& db) {
  const auto v = parse_version(c.version);
  if (!v) throw EnrichError("candidate " + c.product + " has unparseable version '" + c.version + "'");
  std::vector<VulnRecord> out;
  for (const auto& r : db.records) {
    const bool hit = std::any_of(r.cpeMatches.begin(), r.cpeMatches.end(),
                                 [&](const CpeMatch& m) { return m.productPrefix == c.product && m.range.contains(*v); });
    if (hit) out.push_back(r);
  }
  return out;
}

}  // namespace bpmnsec::enrich
