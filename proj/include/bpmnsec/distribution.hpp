#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

namespace bpmnsec {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Time-to-compromise distribution, in days.
///
/// Three families: Instant (always 0), Constant(days) and Exponential(rate per
/// day). Constant(+inf) is the "unreachable" sentinel.
class Distribution {
 public:
  struct Instant {
    bool operator==(const Instant&) const = default;
  };
  struct Constant {
    double days = 0.0;
    bool operator==(const Constant&) const = default;
  };
  struct Exponential {
    double rate = 1.0;
    bool operator==(const Exponential&) const = default;
  };

  Distribution() = default;

  static Distribution instant() { return Distribution{Instant{}}; }

  static Distribution constant(double days) {
    if (!(days >= 0.0)) throw std::invalid_argument("constant distribution needs days >= 0");
    return Distribution{Constant{days}};
  }

  static Distribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw std::invalid_argument("exponential distribution needs a finite rate > 0");
    return Distribution{Exponential{rate}};
  }

  static Distribution unreachable() { return Distribution{Constant{kInfinity}}; }

  bool is_instant() const { return std::holds_alternative<Instant>(v_); }
  bool is_constant() const { return std::holds_alternative<Constant>(v_); }
  bool is_exponential() const { return std::holds_alternative<Exponential>(v_); }
  bool is_deterministic() const { return !is_exponential(); }
  bool is_unreachable() const { return is_constant() && std::isinf(std::get<Constant>(v_).days); }

  double days() const { return std::get<Constant>(v_).days; }
  double rate() const { return std::get<Exponential>(v_).rate; }

  double mean() const {
    if (is_instant()) return 0.0;
    if (is_constant()) return days();
    return 1.0 / rate();
  }

  /// Inverse-CDF draw from a uniform in (0, 1).
  double sample(double u) const {
    if (is_instant()) return 0.0;
    if (is_constant()) return days();
    return -std::log(u) / rate();
  }

  std::string to_string() const {
    if (is_instant()) return "Instant";
    if (is_constant()) return is_unreachable() ? "Unreachable" : "Constant(" + fmt(days()) + ")";
    return "Exp(" + fmt(rate()) + ")";
  }

  bool operator==(const Distribution&) const = default;

 private:
  explicit Distribution(std::variant<Instant, Constant, Exponential> v) : v_(v) {}

  static std::string fmt(double x) {
    nlohmann::json j = x;
    return j.dump();
  }

  std::variant<Instant, Constant, Exponential> v_{Instant{}};
};

inline void to_json(nlohmann::json& j, const Distribution& d) {
  if (d.is_instant()) {
    j = {{"type", "instant"}};
  } else if (d.is_constant()) {
    j = {{"type", "constant"}, {"days", d.is_unreachable() ? nlohmann::json(nullptr) : nlohmann::json(d.days())}};
  } else {
    j = {{"type", "exponential"}, {"rate", d.rate()}};
  }
}

inline void from_json(const nlohmann::json& j, Distribution& d) {
  const auto type = j.at("type").get<std::string>();
  if (type == "instant") {
    d = Distribution::instant();
  } else if (type == "constant") {
    d = j.at("days").is_null() ? Distribution::unreachable() : Distribution::constant(j.at("days").get<double>());
  } else if (type == "exponential") {
    d = Distribution::exponential(j.at("rate").get<double>());
  } else {
    throw std::invalid_argument("unknown distribution type '" + type + "'");
  }
}

}  // namespace bpmnsec
