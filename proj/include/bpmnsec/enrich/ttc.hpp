#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpmnsec/distribution.hpp"
#include "bpmnsec/enrich/nvd.hpp"
#include "bpmnsec/error.hpp"

namespace bpmnsec::enrich {

enum class AttackerSkill { Novice, Intermediate, Expert };

inline std::string_view skill_name(AttackerSkill s) {
  switch (s) {
    case AttackerSkill::Novice: return "novice";
    case AttackerSkill::Intermediate: return "intermediate";
    case AttackerSkill::Expert: return "expert";
  }
  return "?";
}

inline AttackerSkill skill_from_name(std::string_view n) {
  if (n == "novice") return AttackerSkill::Novice;
  if (n == "intermediate") return AttackerSkill::Intermediate;
  if (n == "expert") return AttackerSkill::Expert;
  throw ConfigError("unknown attacker skill '" + std::string(n) + "' (novice, intermediate, expert)");
}

/// Constants of the three-process time-to-compromise model, in days.
///   t1: an exploit is ready to use
///   t2: an exploit must be developed
///   t3: the attacker must find a new vulnerability first
///   k:  known vulnerabilities the attacker can examine before success is likely
///   u:  share of attempts that fall through to the t3 process
struct TtcParams {
  double t1 = 1.0;
  double t2 = 5.8;
  double t3 = 32.42;
  double k = 5.0;
  double u = 0.4;
  bool operator==(const TtcParams&) const = default;
};

struct TtcParamSet {
  TtcParams novice{1.0, 5.8, 60.0, 10.0, 0.6};
  TtcParams intermediate{1.0, 5.8, 32.42, 5.0, 0.4};
  TtcParams expert{1.0, 3.0, 15.0, 2.0, 0.2};

  const TtcParams& for_skill(AttackerSkill s) const {
    return s == AttackerSkill::Novice ? novice : s == AttackerSkill::Expert ? expert : intermediate;
  }
  TtcParams& for_skill(AttackerSkill s) {
    return s == AttackerSkill::Novice ? novice : s == AttackerSkill::Expert ? expert : intermediate;
  }
  bool operator==(const TtcParamSet&) const = default;
};

/// t1 <= t2 <= t3 keeps the expected time non-increasing in the success
/// probability of the first process.
inline void validate_ttc_params(const TtcParams& p) {
  auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!finite_pos(p.t1) || !finite_pos(p.t2) || !finite_pos(p.t3) || !finite_pos(p.k))
    throw EnrichError("TTC parameters t1, t2, t3 and k must be finite and positive");
  if (!(p.u >= 0.0 && p.u <= 1.0)) throw EnrichError("TTC parameter u must lie in [0, 1]");
  if (!(p.t1 <= p.t2 && p.t2 <= p.t3)) throw EnrichError("TTC parameters must satisfy t1 <= t2 <= t3");
}

/// Expected days to compromise for `v` known vulnerabilities of which a
/// fraction `m` has a public exploit. Infinite when `v` is zero.
inline double expected_ttc_days(double v, double m, const TtcParams& p) {
  if (v <= 0.0) return kInfinity;
  const double p1 = 1.0 - std::exp(-v * m / p.k);
  return p.t1 * p1 + p.t2 * (1.0 - p1) * (1.0 - p.u) + p.t3 * p.u * (1.0 - p1);
}

inline Distribution ttc_mcqueen(const std::vector<VulnRecord>& vulns, AttackerSkill skill, const TtcParamSet& params) {
  const auto& p = params.for_skill(skill);
  validate_ttc_params(p);
  if (vulns.empty()) return Distribution::unreachable();
  double withExploit = 0.0;
  for (const auto& r : vulns)
    if (r.exploitAvailable) withExploit += 1.0;
  const double v = static_cast<double>(vulns.size());
  return Distribution::exponential(1.0 / expected_ttc_days(v, withExploit / v, p));
}

inline void to_json(nlohmann::json& j, const TtcParams& p) {
  j = {{"t1", p.t1}, {"t2", p.t2}, {"t3", p.t3}, {"k", p.k}, {"u", p.u}};
}
inline void from_json(const nlohmann::json& j, TtcParams& p) {
  p.t1 = j.value("t1", p.t1);
  p.t2 = j.value("t2", p.t2);
  p.t3 = j.value("t3", p.t3);
  p.k = j.value("k", p.k);
  p.u = j.value("u", p.u);
}
inline void to_json(nlohmann::json& j, const TtcParamSet& s) {
  j = {{"novice", s.novice}, {"intermediate", s.intermediate}, {"expert", s.expert}};
}
/// Partial objects override the defaults field by field.
inline void from_json(const nlohmann::json& j, TtcParamSet& s) {
  if (j.contains("novice")) from_json(j.at("novice"), s.novice);
  if (j.contains("intermediate")) from_json(j.at("intermediate"), s.intermediate);
  if (j.contains("expert")) from_json(j.at("expert"), s.expert);
}

}  // namespace bpmnsec::enrich
