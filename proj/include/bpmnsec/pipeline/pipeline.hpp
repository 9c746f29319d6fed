#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bpmnsec/bpmn/parser.hpp"
#include "bpmnsec/bpmn/surface.hpp"
#include "bpmnsec/digest.hpp"
#include "bpmnsec/enrich/catalog.hpp"
#include "bpmnsec/enrich/enrich.hpp"
#include "bpmnsec/enrich/nvd.hpp"
#include "bpmnsec/enrich/ttc.hpp"
#include "bpmnsec/graph/attack_graph.hpp"
#include "bpmnsec/graph/simulate.hpp"
#include "bpmnsec/mal/corelang.hpp"
#include "bpmnsec/mal/language.hpp"
#include "bpmnsec/mapping/mapper.hpp"
#include "bpmnsec/pipeline/config.hpp"
#include "bpmnsec/report/annotate.hpp"
#include "bpmnsec/report/emit.hpp"

namespace bpmnsec::pipeline {

/// Optional sinks for progress and warnings.
struct Hooks {
  std::function<void(const std::string&)> info;
  std::function<void(const std::string&)> warn;

  void log(const std::string& m) const {
    if (info) info(m);
  }
  void warning(const std::string& m) const {
    if (warn) warn(m);
  }
};

struct EntrySet {
  std::string id;
  std::vector<graph::StepRef> steps;
};

namespace detail {

class StageTimer {
 public:
  StageTimer(const Hooks& h, std::string name) : h_(h), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    h_.log("stage " + name_ + " took " + std::to_string(ms) + " ms");
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  const Hooks& h_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string entry_step_for(const mal::MalLanguage& lang, std::string_view type) {
  static const std::vector<std::pair<std::string_view, std::string_view>> table{
      {"Application", "connect"}, {"Connection", "access"}, {"User", "attemptPhishing"}, {"Identity", "assume"}};
  for (const auto& [base, step] : table)
    if (lang.is_a(type, base)) return std::string(step);
  return {};
}

inline bool has_attack_step(const mal::MalLanguage& lang, std::string_view type, std::string_view step) {
  return lang.has_asset(type) && lang.asset(type).find_step(step) != nullptr;
}

inline std::string short_product(const std::string& cpe) {
  auto pos = cpe.rfind(':');
  return pos == std::string::npos ? cpe : cpe.substr(pos + 1);
}

}  // namespace detail

inline mal::MalLanguage load_language_file(const std::string& malPath) {
  if (malPath.empty()) return mal::corelang_subset();
  std::string text;
  try {
    text = read_file(malPath);
  } catch (const std::exception& e) {
    throw LanguageError(e.what());
  }
  return mal::load_language(mal::MalSource{text, malPath});
}

inline bpmn::ProcessModel load_process_file(const std::string& bpmnPath) {
  if (bpmnPath.empty()) throw IngestError("no BPMN file given");
  return bpmn::parse_bpmn_file(bpmnPath);
}

inline mapping::MergePolicy parse_merge(std::string_view s) {
  if (s == "per-task") return mapping::MergePolicy::PerTask;
  if (s == "per-technology") return mapping::MergePolicy::PerTechnology;
  throw ConfigError("unknown merge policy '" + std::string(s) + "' (per-task, per-technology)");
}

/// Resolves `<asset or element>:<step>`. An element id selects the first of
/// its assets (by id) whose type has the step.
inline graph::StepRef resolve_step_spec(std::string_view spec, const mapping::InstanceModel& m,
                                        const mapping::MappingTrace& trace, const mal::MalLanguage& lang) {
  const auto [lhs, step] = graph::split_step_ref(spec);
  if (const auto* a = m.find(lhs)) {
    if (!detail::has_attack_step(lang, a->type, step))
      throw ConfigError("'" + std::string(spec) + "': asset '" + lhs + "' of type " + a->type + " has no attack step '" + step + "'");
    return {lhs, step};
  }
  auto it = trace.perBpmnElement.find(lhs);
  if (it == trace.perBpmnElement.end())
    throw ConfigError("'" + std::string(spec) + "': '" + lhs + "' is neither an asset nor a mapped element");
  std::vector<std::string> ids = it->second;
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids)
    if (const auto* a = m.find(id); a && detail::has_attack_step(lang, a->type, step)) return {id, step};
  throw ConfigError("'" + std::string(spec) + "': no asset of element '" + lhs + "' has an attack step '" + step + "'");
}

inline std::vector<EntrySet> resolve_entries(const std::vector<std::string>& specs, const bpmn::ProcessModel& pm,
                                             const mapping::InstanceModel& m, const mapping::MappingTrace& trace,
                                             const mal::MalLanguage& lang) {
  std::vector<EntrySet> out;
  auto label = [](const std::vector<graph::StepRef>& steps) {
    std::string id;
    for (const auto& [a, s] : steps) id += (id.empty() ? "" : "+") + a + ":" + s;
    return id;
  };
  if (specs.size() == 1 && specs.front() == "auto") {
    std::vector<std::string> flows;
    for (const auto& f : pm.flows)
      if (f.kind == bpmn::FlowKind::Message) flows.push_back(f.id);
    std::sort(flows.begin(), flows.end());
    for (const auto& f : flows) {
      auto it = trace.perBpmnElement.find(f);
      if (it == trace.perBpmnElement.end()) continue;
      for (const auto& id : it->second) {
        const auto* a = m.find(id);
        if (a && lang.is_a(a->type, "Connection")) {
          std::vector<graph::StepRef> steps{{id, "access"}};
          out.push_back({label(steps), steps});
        }
      }
    }
    if (out.empty()) throw ConfigError("entry 'auto' found no boundary message flow");
    return out;
  }
  if (specs.size() == 1 && specs.front() == "all") {
    for (const auto& [element, ids] : trace.perBpmnElement) {
      std::vector<graph::StepRef> steps;
      for (const auto& id : ids) {
        const auto* a = m.find(id);
        if (!a) continue;
        auto step = detail::entry_step_for(lang, a->type);
        if (!step.empty() && detail::has_attack_step(lang, a->type, step)) steps.emplace_back(id, step);
      }
      std::sort(steps.begin(), steps.end());
      steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
      if (!steps.empty()) out.push_back({label(steps), steps});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    out.erase(std::unique(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id == b.id; }), out.end());
    if (out.empty()) throw ConfigError("entry 'all' found no mapped element");
    return out;
  }
  if (specs.empty()) throw ConfigError("no attacker entry given");
  std::vector<graph::StepRef> steps;
  for (const auto& s : specs) {
    if (s == "auto" || s == "all") throw ConfigError("'" + s + "' cannot be combined with other entries");
    steps.push_back(resolve_step_spec(s, m, trace, lang));
  }
  return {{label(steps), steps}};
}

inline std::vector<graph::StepRef> resolve_goals(const std::vector<std::string>& specs, const mapping::InstanceModel& m,
                                                 const mapping::MappingTrace& trace, const mal::MalLanguage& lang) {
  if (specs.empty()) throw ConfigError("no goal given");
  std::vector<graph::StepRef> out;
  for (const auto& s : specs) out.push_back(resolve_step_spec(s, m, trace, lang));
  return out;
}

inline void apply_defenses(mapping::InstanceModel& m, const std::vector<std::string>& specs, const mal::MalLanguage& lang) {
  for (const auto& d : specs) {
    const auto [asset, def] = graph::split_step_ref(d);
    const auto* a = m.find(asset);
    if (!a) throw ConfigError("defense '" + d + "': unknown asset '" + asset + "'");
    if (!lang.asset(a->type).find_defense(def))
      throw ConfigError("defense '" + d + "': asset type " + a->type + " has no defense '" + def + "'");
    m.enabledDefenses.insert(asset + ":" + def);
  }
}

/// Applications the catalog must cover: those standing for service-style
/// activities and data stores.
inline std::vector<std::string> uncovered_applications(const enrich::ComponentCatalog& c, const mapping::InstanceModel& m,
                                                       const bpmn::ProcessModel& pm) {
  using K = bpmn::ElementKind;
  std::vector<std::string> out;
  for (const auto& a : m.assets) {
    if (a.type != "Application" || enrich::catalog_lookup(c, a.id)) continue;
    for (const auto& prov : a.provenance) {
      const auto* e = pm.find(prov);
      if (e && (e->kind == K::ServiceTask || e->kind == K::SendTask || e->kind == K::ReceiveTask ||
                e->kind == K::CallActivity || e->kind == K::DataStore)) {
        out.push_back(a.id);
        break;
      }
    }
  }
  return out;
}

struct RunOutputs {
  report::Report report;
  report::AnnotatedModel annotations;
  mapping::InstanceModel model;  // mapped model with every variant's additions
  std::vector<enrich::ConfigVariant> variants;
  std::vector<EntrySet> entrySets;
  std::string json;
  std::string csv;
  std::string dot;
  std::string annotationsJson;
  std::string graphDot;
  std::string inputDigest;
  std::vector<std::string> warnings;
};

inline RunOutputs run(const RunConfig& cfg, const Hooks& hooks = {}) {
  RunOutputs out;
  auto warn = [&](const std::string& w) {
    out.warnings.push_back(w);
    hooks.warning(w);
  };
  if (cfg.samples < 1) throw ConfigError("samples must be at least 1");
  if (!(cfg.horizonDays > 0.0)) throw ConfigError("horizon must be positive");
  const auto pruning = enrich::parse_pruning(cfg.pruning);
  const auto skill = enrich::skill_from_name(cfg.skill);
  const auto merge = parse_merge(cfg.merge);

  mal::MalLanguage lang;
  {
    detail::StageTimer t(hooks, "language");
    lang = load_language_file(cfg.malPath);
  }
  bpmn::ProcessModel pm;
  {
    detail::StageTimer t(hooks, "ingest");
    pm = load_process_file(cfg.bpmnPath);
    out.inputDigest = pm.sourceDigest;
  }
  mapping::MappingResult mapped;
  {
    detail::StageTimer t(hooks, "map");
    const auto surface = bpmn::classify_surface(pm);
    hooks.log(std::to_string(surface.relevant.size()) + " attack-surface relevant elements and flows");
    mapped = mapping::merge_strategy(mapping::map_process(pm, lang), pm, merge);
  }
  std::vector<EntrySet> entrySets;
  std::vector<graph::StepRef> goals;
  {
    detail::StageTimer t(hooks, "config");
    apply_defenses(mapped.model, cfg.defenses, lang);
    entrySets = resolve_entries(cfg.entries, pm, mapped.model, mapped.trace, lang);
    goals = resolve_goals(cfg.goals, mapped.model, mapped.trace, lang);
  }

  std::vector<enrich::EnrichedModel> enriched;
  {
    detail::StageTimer t(hooks, "enrich");
    if (cfg.catalogPath.empty()) throw EnrichError("no component catalog given");
    if (cfg.nvdDir.empty()) throw EnrichError("no NVD feed directory given");
    const auto catalog = enrich::load_catalog(cfg.catalogPath);
    if (auto missing = uncovered_applications(catalog, mapped.model, pm); !missing.empty()) {
      std::string list;
      for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
      throw EnrichError("catalog does not cover: " + list);
    }
    const auto db = enrich::load_nvd_dir(cfg.nvdDir);
    for (const auto& w : db.warnings) warn(w);
    out.variants = enrich::generate_variants(enrich::resolve_catalog(catalog, mapped.model, pm), pruning);
    hooks.log(std::to_string(out.variants.size()) + " configuration variants");
    for (const auto& v : out.variants) enriched.push_back(enrich::enrich(mapped.model, v, db, skill, cfg.ttcParams));
  }

  std::vector<graph::AttackGraph> graphs;
  {
    detail::StageTimer t(hooks, "compile");
    for (const auto& e : enriched) {
      auto c = graph::compile(e, lang);
      for (const auto& w : c.warnings) warn("variant " + e.variantId + ": " + w);
      graphs.push_back(std::move(c.graph));
    }
  }

  std::vector<report::VariantRun> runs;
  {
    detail::StageTimer t(hooks, "simulate");
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      for (const auto& es : entrySets) {
        graph::SimConfig sc{cfg.samples, cfg.horizonDays, cfg.seed, es.steps, goals, cfg.threads};
        runs.push_back({out.variants[i].id, es.id, graph::simulate(graphs[i], sc)});
      }
    }
  }

  {
    detail::StageTimer t(hooks, "report");
    std::map<std::string, double> weights;
    for (const auto& v : out.variants) weights[v.id] = v.weight;
    out.report = report::aggregate(runs, weights);
    for (const auto& v : out.variants) {
      std::string labelText;
      for (const auto& [asset, c] : v.assignment)
        labelText += (labelText.empty() ? "" : "; ") + asset + "=" + detail::short_product(c.product) + " " + c.version;
      out.report.variantLabels[v.id] = labelText;
    }
    out.model = mapped.model;
    std::set<std::string> seen;
    for (const auto& a : out.model.assets) seen.insert(a.id);
    for (const auto& e : enriched) {
      for (const auto& a : e.addedAssets)
        if (seen.insert(a.id).second) out.model.assets.push_back(a);
      out.model.links.insert(out.model.links.end(), e.addedLinks.begin(), e.addedLinks.end());
    }
    out.model.normalize();
    out.annotations = report::annotate(pm, out.model, mapped.trace, lang, out.report);
    out.entrySets = entrySets;

    out.json = report::emit_json(out.report);
    out.csv = report::emit_csv(out.report);
    out.dot = report::emit_dot(out.report, out.model);
    out.annotationsJson = report::annotations_to_json(out.annotations).dump(2) + "\n";
    if (!graphs.empty())
      out.graphDot = graph::graph_to_dot(graph::attach(graphs.front(), entrySets.front().steps, goals));
  }

  if (sha256_file(cfg.bpmnPath) != out.inputDigest) throw ReportError("input BPMN file changed during the run");
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ReportError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ReportError("failed writing '" + path + "'");
}

/// Writes every configured output. Called only after a successful run.
inline void write_outputs(const RunConfig& cfg, const RunOutputs& out) {
  for (const auto& p : {cfg.out.json, cfg.out.csv, cfg.out.dot, cfg.out.annotations, cfg.out.graphDot}) {
    if (p.empty()) continue;
    const std::string bpmnAbs = std::filesystem::weakly_canonical(cfg.bpmnPath).string();
    if (std::filesystem::weakly_canonical(p).string() == bpmnAbs)
      throw ConfigError("output path '" + p + "' would overwrite the input BPMN file");
  }
  write_text(cfg.out.json, out.json);
  write_text(cfg.out.csv, out.csv);
  write_text(cfg.out.dot, out.dot);
  write_text(cfg.out.annotations, out.annotationsJson);
  write_text(cfg.out.graphDot, out.graphDot);
}

/// Static checks without simulating. Returns human-readable diagnostics;
/// empty means `run` will get at least as far as simulation.
inline std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> diags;
  auto guard = [&](const std::string& what, auto&& fn) {
    try {
      fn();
      return true;
    } catch (const std::exception& e) {
      diags.push_back(what + ": " + e.what());
      return false;
    }
  };
  if (cfg.samples < 1) diags.push_back("samples must be at least 1");
  if (!(cfg.horizonDays > 0.0)) diags.push_back("horizon must be positive");
  std::optional<enrich::Pruning> pruning;
  guard("pruning", [&] { pruning = enrich::parse_pruning(cfg.pruning); });
  guard("skill", [&] {
    enrich::validate_ttc_params(cfg.ttcParams.for_skill(enrich::skill_from_name(cfg.skill)));
  });
  std::optional<mapping::MergePolicy> merge;
  guard("merge", [&] { merge = parse_merge(cfg.merge); });
  for (const auto& [label, path, dir] : {std::tuple{"bpmn", cfg.bpmnPath, false}, std::tuple{"catalog", cfg.catalogPath, false},
                                         std::tuple{"nvd", cfg.nvdDir, true}}) {
    std::error_code ec;
    if (path.empty()) {
      diags.push_back(std::string(label) + ": no path given");
    } else if (dir ? !std::filesystem::is_directory(path, ec) : !std::filesystem::is_regular_file(path, ec)) {
      diags.push_back(std::string(label) + ": '" + path + "' does not exist");
    }
  }

  mal::MalLanguage lang;
  const bool langOk = guard("language", [&] { lang = load_language_file(cfg.malPath); });
  bpmn::ProcessModel pm;
  const bool pmOk = std::filesystem::is_regular_file(cfg.bpmnPath) && guard("bpmn", [&] { pm = load_process_file(cfg.bpmnPath); });
  std::optional<enrich::ComponentCatalog> catalog;
  if (std::filesystem::is_regular_file(cfg.catalogPath)) guard("catalog", [&] { catalog = enrich::load_catalog(cfg.catalogPath); });
  if (std::filesystem::is_directory(cfg.nvdDir)) guard("nvd", [&] { enrich::load_nvd_dir(cfg.nvdDir); });
  if (!langOk || !pmOk || !merge) return diags;

  mapping::MappingResult mapped;
  if (!guard("mapping", [&] { mapped = mapping::merge_strategy(mapping::map_process(pm, lang), pm, *merge); })) return diags;
  guard("defense", [&] { apply_defenses(mapped.model, cfg.defenses, lang); });
  guard("entry", [&] { resolve_entries(cfg.entries, pm, mapped.model, mapped.trace, lang); });
  if (cfg.goals.empty()) diags.push_back("goal: no goal given");
  for (const auto& g : cfg.goals) guard("goal", [&] { resolve_step_spec(g, mapped.model, mapped.trace, lang); });
  if (catalog) {
    auto missing = uncovered_applications(*catalog, mapped.model, pm);
    if (!missing.empty()) {
      std::string list;
      for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
      diags.push_back("catalog: uncovered Applications: " + list);
    } else if (pruning) {
      guard("variants", [&] { enrich::generate_variants(enrich::resolve_catalog(*catalog, mapped.model, pm), *pruning); });
    }
  }
  return diags;
}

}  // namespace bpmnsec::pipeline
