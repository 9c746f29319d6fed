#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/digest.hpp"
#include "bpmnsec/enrich/ttc.hpp"
#include "bpmnsec/error.hpp"

namespace bpmnsec::pipeline {

struct OutputPaths {
  std::string json;
  std::string csv;
  std::string dot;
  std::string annotations;
  std::string graphDot;
};

/// Everything a run needs. Empty `malPath` selects the bundled language.
struct RunConfig {
  std::string bpmnPath;
  std::string malPath;
  std::string catalogPath;
  std::string nvdDir;
  std::size_t samples = 10000;
  double horizonDays = 100.0;
  std::uint64_t seed = 42;
  std::string pruning = "one-per-participant";
  std::string skill = "intermediate";
  std::string merge = "per-task";
  /// `<asset or element>:<step>` specs forming one entry set, or a single
  /// `auto` (one set per boundary message flow) or `all` (one set per
  /// mapped element).
  std::vector<std::string> entries{"auto"};
  std::vector<std::string> goals;
  /// `<asset>:<defense>` to enable before simulation.
  std::vector<std::string> defenses;
  enrich::TtcParamSet ttcParams;
  unsigned threads = 1;
  OutputPaths out;
};

/// Reads a JSON run configuration. Relative paths resolve against the
/// directory of the configuration file.
inline RunConfig load_run_config(const std::string& path, RunConfig cfg = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError("cannot read run configuration '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("run configuration '" + path + "' is not a JSON object");
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
  };
  try {
    auto str = [&](const char* key, std::string& dst, bool isPath) {
      if (j.contains(key)) dst = isPath ? resolve(j.at(key).get<std::string>()) : j.at(key).get<std::string>();
    };
    str("bpmn", cfg.bpmnPath, true);
    str("lang", cfg.malPath, true);
    str("catalog", cfg.catalogPath, true);
    str("nvd", cfg.nvdDir, true);
    str("pruning", cfg.pruning, false);
    str("skill", cfg.skill, false);
    str("merge", cfg.merge, false);
    if (j.contains("samples")) cfg.samples = j.at("samples").get<std::size_t>();
    if (j.contains("horizon")) cfg.horizonDays = j.at("horizon").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    if (j.contains("entry")) {
      cfg.entries = j.at("entry").is_string() ? std::vector<std::string>{j.at("entry").get<std::string>()}
                                              : j.at("entry").get<std::vector<std::string>>();
    }
    if (j.contains("goal")) {
      cfg.goals = j.at("goal").is_string() ? std::vector<std::string>{j.at("goal").get<std::string>()}
                                           : j.at("goal").get<std::vector<std::string>>();
    }
    if (j.contains("defense")) j.at("defense").get_to(cfg.defenses);
    if (j.contains("ttcParams")) enrich::from_json(j.at("ttcParams"), cfg.ttcParams);
    if (j.contains("out")) {
      const auto& o = j.at("out");
      auto out = [&](const char* key, std::string& dst) {
        if (o.contains(key)) dst = resolve(o.at(key).get<std::string>());
      };
      out("json", cfg.out.json);
      out("csv", cfg.out.csv);
      out("dot", cfg.out.dot);
      out("annotations", cfg.out.annotations);
      out("graphDot", cfg.out.graphDot);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("run configuration '" + path + "': " + e.what());
  }
  return cfg;
}

}  // namespace bpmnsec::pipeline
