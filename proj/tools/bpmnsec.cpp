// Command-line front end: analyze, validate and map.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bpmnsec/pipeline/pipeline.hpp"

namespace {

using bpmnsec::pipeline::RunConfig;

int exit_code(bpmnsec::Stage s) {
  switch (s) {
    case bpmnsec::Stage::Config: return 2;
    case bpmnsec::Stage::Language: return 10;
    case bpmnsec::Stage::Ingest: return 11;
    case bpmnsec::Stage::Mapping: return 12;
    case bpmnsec::Stage::Enrichment: return 13;
    case bpmnsec::Stage::Compile: return 14;
    case bpmnsec::Stage::Simulate: return 15;
    case bpmnsec::Stage::Report: return 16;
  }
  return 1;
}

/// Flag values; applied over the config file only when given.
struct Flags {
  std::string config, bpmn, lang, catalog, nvd, pruning, skill, merge;
  std::size_t samples = 0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::vector<std::string> entries, goals, defenses;
  std::string out, csv, dot, annotations, graphDot;
};

struct Options {
  CLI::Option* samples = nullptr;
  CLI::Option* horizon = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* threads = nullptr;
};

Options add_run_flags(CLI::App* cmd, Flags& f, bool outputs) {
  Options o;
  cmd->add_option("--config", f.config, "JSON run configuration; flags override it");
  cmd->add_option("--bpmn", f.bpmn, "BPMN 2.0 XML file");
  cmd->add_option("--lang", f.lang, "MAL language file (default: bundled coreLang subset)");
  cmd->add_option("--catalog", f.catalog, "component catalog (JSON)");
  cmd->add_option("--nvd", f.nvd, "directory of NVD JSON feeds");
  o.samples = cmd->add_option("--samples", f.samples, "Monte Carlo samples per run")->check(CLI::PositiveNumber);
  o.horizon = cmd->add_option("--horizon", f.horizon, "horizon in days")->check(CLI::PositiveNumber);
  o.seed = cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--pruning", f.pruning, "exhaustive | one-per-participant | share-floor:<f>");
  cmd->add_option("--skill", f.skill, "novice | intermediate | expert");
  cmd->add_option("--merge", f.merge, "per-task | per-technology");
  cmd->add_option("--entry", f.entries, "<asset|element>:<step>, auto or all (repeatable)");
  cmd->add_option("--goal", f.goals, "<asset|element>:<step> (repeatable)");
  cmd->add_option("--defense", f.defenses, "<asset>:<defense> to enable (repeatable)");
  o.threads = cmd->add_option("--threads", f.threads, "simulation threads (0 = all cores)");
  if (outputs) {
    cmd->add_option("--out", f.out, "report JSON path");
    cmd->add_option("--csv", f.csv, "per-element CSV path");
    cmd->add_option("--dot", f.dot, "critical-path DOT path");
    cmd->add_option("--annotations", f.annotations, "risk sidecar JSON path");
    cmd->add_option("--graph-dot", f.graphDot, "attack graph DOT path (first variant)");
  }
  return o;
}

RunConfig build_config(const Flags& f, const Options& o) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = bpmnsec::pipeline::load_run_config(f.config);
  auto set = [](std::string& dst, const std::string& v) {
    if (!v.empty()) dst = v;
  };
  set(cfg.bpmnPath, f.bpmn);
  set(cfg.malPath, f.lang);
  set(cfg.catalogPath, f.catalog);
  set(cfg.nvdDir, f.nvd);
  set(cfg.pruning, f.pruning);
  set(cfg.skill, f.skill);
  set(cfg.merge, f.merge);
  if (o.samples->count()) cfg.samples = f.samples;
  if (o.horizon->count()) cfg.horizonDays = f.horizon;
  if (o.seed->count()) cfg.seed = f.seed;
  if (o.threads->count()) cfg.threads = f.threads;
  if (!f.entries.empty()) cfg.entries = f.entries;
  if (!f.goals.empty()) cfg.goals = f.goals;
  if (!f.defenses.empty()) cfg.defenses = f.defenses;
  set(cfg.out.json, f.out);
  set(cfg.out.csv, f.csv);
  set(cfg.out.dot, f.dot);
  set(cfg.out.annotations, f.annotations);
  set(cfg.out.graphDot, f.graphDot);
  return cfg;
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = spdlog::stderr_color_mt("bpmnsec");
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("BPMNSEC_LOG_LEVEL")) log->set_level(spdlog::level::from_str(lvl));
  return log;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack simulation for BPMN process models"};
  app.require_subcommand(1);
  Flags analyzeFlags, validateFlags;
  std::string mapBpmn, mapLang, mapMerge = "per-task", mapOut;

  auto* analyze = app.add_subcommand("analyze", "run the full pipeline and write reports");
  const auto analyzeOpts = add_run_flags(analyze, analyzeFlags, true);
  auto* validate = app.add_subcommand("validate", "check a configuration without simulating");
  const auto validateOpts = add_run_flags(validate, validateFlags, false);
  auto* map = app.add_subcommand("map", "print the instance model of a process");
  map->add_option("--bpmn", mapBpmn, "BPMN 2.0 XML file")->required();
  map->add_option("--lang", mapLang, "MAL language file (default: bundled coreLang subset)");
  map->add_option("--merge", mapMerge, "per-task | per-technology");
  map->add_option("--out", mapOut, "output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  auto log = make_logger();

  try {
    if (analyze->parsed()) {
      const RunConfig cfg = build_config(analyzeFlags, analyzeOpts);
      bpmnsec::pipeline::Hooks hooks{[&](const std::string& m) { log->info("{}", m); },
                                     [&](const std::string& m) { log->warn("{}", m); }};
      const auto out = bpmnsec::pipeline::run(cfg, hooks);
      bpmnsec::pipeline::write_outputs(cfg, out);
      for (const auto& [goal, agg] : out.report.aggregated)
        log->info("goal {}: success rate {} at {} days", goal, agg.successRate, cfg.horizonDays);
      if (cfg.out.json.empty()) std::cout << out.json;
      return 0;
    }
    if (validate->parsed()) {
      const RunConfig cfg = build_config(validateFlags, validateOpts);
      const auto diags = bpmnsec::pipeline::validate(cfg);
      for (const auto& d : diags) std::cout << d << "\n";
      if (diags.empty()) std::cout << "ok\n";
      return diags.empty() ? 0 : 2;
    }
    if (map->parsed()) {
      const auto lang = bpmnsec::pipeline::load_language_file(mapLang);
      const auto pm = bpmnsec::pipeline::load_process_file(mapBpmn);
      const auto mapped = bpmnsec::mapping::merge_strategy(bpmnsec::mapping::map_process(pm, lang), pm,
                                                           bpmnsec::pipeline::parse_merge(mapMerge));
      nlohmann::json j = mapped.model;
      j["trace"] = mapped.trace;
      const std::string text = j.dump(2) + "\n";
      if (mapOut.empty()) {
        std::cout << text;
      } else {
        bpmnsec::pipeline::write_text(mapOut, text);
      }
      return 0;
    }
  } catch (const bpmnsec::LanguageError& e) {
    log->error("language: {}", e.what());
    return exit_code(e.stage());
  } catch (const bpmnsec::Error& e) {
    log->error("{}: {}", bpmnsec::stage_name(e.stage()), e.what());
    return exit_code(e.stage());
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return 1;
  }
  return 1;
}
