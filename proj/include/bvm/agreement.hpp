#pragma once

// Model-data agreement Booleans.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bvm/errors.hpp"
#include "json.hpp"

namespace bvm {

enum class AgreementKind {
  Epsilon,           // every |y_j - yhat_j| <= eps_j
  GammaEpsilonL,     // every residual <= ell eps_j, and at least gamma% within eps_j
  MeanEpsilon,       // mean absolute residual <= <eps>
  MeanEpsilonAlpha,  // MeanEpsilon and coverage of [yhat - c, yhat + c] inside the window
  Exact,             // y_j == yhat_j for all j
};

inline std::string_view to_string(AgreementKind k) {
  switch (k) {
    case AgreementKind::Epsilon: return "epsilon";
    case AgreementKind::GammaEpsilonL: return "gamma_epsilon_ell";
    case AgreementKind::MeanEpsilon: return "mean_epsilon";
    case AgreementKind::MeanEpsilonAlpha: return "mean_epsilon_alpha";
    case AgreementKind::Exact: return "exact";
  }
  return "?";
}

inline AgreementKind agreement_kind_from_string(std::string_view s) {
  if (s == "epsilon") return AgreementKind::Epsilon;
  if (s == "gamma_epsilon_ell") return AgreementKind::GammaEpsilonL;
  if (s == "mean_epsilon") return AgreementKind::MeanEpsilon;
  if (s == "mean_epsilon_alpha") return AgreementKind::MeanEpsilonAlpha;
  if (s == "exact") return AgreementKind::Exact;
  throw ConfigError("unknown agreement kind '" + std::string(s) + "'");
}

struct AgreementSpec {
  AgreementKind kind = AgreementKind::Exact;
  // One entry (shared tolerance) or one per data point.
  std::vector<double> epsilon;
  double gamma = 100.0;  // percent
  double ell = 1.0;
  double mean_epsilon = 0.0;
  double coverage_low = 0.91;
  double coverage_high = 0.99;

  static AgreementSpec exact() { return {}; }

  static AgreementSpec eps(double e) { return eps(std::vector<double>{e}); }

  static AgreementSpec eps(std::vector<double> per_point) {
    AgreementSpec s;
    s.kind = AgreementKind::Epsilon;
    s.epsilon = std::move(per_point);
    s.check();
    return s;
  }

  static AgreementSpec gamma_epsilon_ell(double gamma_percent, double e, double ell) {
    AgreementSpec s;
    s.kind = AgreementKind::GammaEpsilonL;
    s.epsilon = {e};
    s.gamma = gamma_percent;
    s.ell = ell;
    s.check();
    return s;
  }

  static AgreementSpec mean_eps(double mean_tolerance) {
    AgreementSpec s;
    s.kind = AgreementKind::MeanEpsilon;
    s.mean_epsilon = mean_tolerance;
    s.check();
    return s;
  }

  static AgreementSpec mean_eps_alpha(double mean_tolerance) {
    AgreementSpec s = mean_eps(mean_tolerance);
    s.kind = AgreementKind::MeanEpsilonAlpha;
    return s;
  }

  // The confidence half-width c is a latent chain coordinate for this kind.
  bool needs_latent() const noexcept { return kind == AgreementKind::MeanEpsilonAlpha; }

  bool uses_pointwise_epsilon() const noexcept {
    return kind == AgreementKind::Epsilon || kind == AgreementKind::GammaEpsilonL;
  }

  double epsilon_at(std::size_t j) const {
    if (epsilon.empty()) return 0.0;
    return epsilon.size() == 1 ? epsilon.front() : epsilon.at(j);
  }

  // The scalar tolerance that --epsilon style overrides act on.
  double tolerance() const {
    if (uses_pointwise_epsilon()) return epsilon.empty() ? 0.0 : epsilon.front();
    if (kind == AgreementKind::Exact) return 0.0;
    return mean_epsilon;
  }

  AgreementSpec with_tolerance(double t) const {
    AgreementSpec s = *this;
    if (uses_pointwise_epsilon()) {
      s.epsilon = {t};
    } else if (kind == AgreementKind::MeanEpsilon || kind == AgreementKind::MeanEpsilonAlpha) {
      s.mean_epsilon = t;
    } else {
      throw ConfigError("exact agreement has no tolerance");
    }
    s.check();
    return s;
  }

  void check() const {
    for (double e : epsilon)
      if (!(e >= 0.0)) throw ConfigError("epsilon must be >= 0");
    switch (kind) {
      case AgreementKind::Epsilon:
      case AgreementKind::GammaEpsilonL:
        if (epsilon.empty()) throw ConfigError("epsilon agreement requires a tolerance");
        break;
      default:
        if (!epsilon.empty())
          throw ConfigError(std::string(to_string(kind)) + " agreement takes no epsilon");
    }
    if (kind == AgreementKind::GammaEpsilonL) {
      if (!(gamma >= 0.0 && gamma <= 100.0)) throw ConfigError("gamma must be a percentage in [0, 100]");
      if (!(ell >= 1.0)) throw ConfigError("ell must be >= 1");
    }
    if (!(mean_epsilon >= 0.0)) throw ConfigError("mean_epsilon must be >= 0");
    if (!(coverage_low <= coverage_high)) throw ConfigError("coverage window is empty");
  }

  void check_size(std::size_t n) const {
    if (epsilon.size() > 1 && epsilon.size() != n)
      throw DimensionError("per-point epsilon has " + std::to_string(epsilon.size()) +
                           " entries for " + std::to_string(n) + " data points");
  }

  bool operator==(const AgreementSpec&) const = default;
};

inline nlohmann::json to_json(const AgreementSpec& s) {
  nlohmann::json j{{"kind", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case AgreementKind::Epsilon:
      j["epsilon"] = s.epsilon.size() == 1 ? nlohmann::json(s.epsilon.front()) : nlohmann::json(s.epsilon);
      break;
    case AgreementKind::GammaEpsilonL:
      j["epsilon"] = s.epsilon.size() == 1 ? nlohmann::json(s.epsilon.front()) : nlohmann::json(s.epsilon);
      j["gamma"] = s.gamma;
      j["ell"] = s.ell;
      break;
    case AgreementKind::MeanEpsilon:
      j["mean_epsilon"] = s.mean_epsilon;
      break;
    case AgreementKind::MeanEpsilonAlpha:
      j["mean_epsilon"] = s.mean_epsilon;
      j["coverage"] = {s.coverage_low, s.coverage_high};
      break;
    case AgreementKind::Exact:
      break;
  }
  return j;
}

inline AgreementSpec agreement_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("agreement needs a 'kind'");
  AgreementSpec s;
  s.kind = agreement_kind_from_string(j.at("kind").get<std::string>());
  auto allowed = [&](std::initializer_list<std::string_view> keys) {
    for (const auto& [key, _] : j.items()) {
      bool ok = key == "kind";
      for (auto k : keys) ok = ok || key == k;
      if (!ok)
        throw ConfigError("field '" + key + "' is not valid for " + std::string(to_string(s.kind)) +
                          " agreement");
    }
  };
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
      throw ConfigError(std::string("agreement field '") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  auto read_eps = [&] {
    const auto& e = j.at("epsilon");
    if (e.is_number()) s.epsilon = {e.get<double>()};
    else if (e.is_array()) s.epsilon = e.get<std::vector<double>>();
    else throw ConfigError("epsilon must be a number or array");
  };
  switch (s.kind) {
    case AgreementKind::Epsilon:
      allowed({"epsilon"});
      if (!j.contains("epsilon")) throw ConfigError("epsilon agreement requires 'epsilon'");
      read_eps();
      break;
    case AgreementKind::GammaEpsilonL:
      allowed({"epsilon", "gamma", "ell"});
      if (!j.contains("epsilon")) throw ConfigError("gamma_epsilon_ell agreement requires 'epsilon'");
      read_eps();
      s.gamma = number("gamma");
      s.ell = number("ell");
      break;
    case AgreementKind::MeanEpsilon:
      allowed({"mean_epsilon"});
      s.mean_epsilon = number("mean_epsilon");
      break;
    case AgreementKind::MeanEpsilonAlpha:
      allowed({"mean_epsilon", "coverage"});
      s.mean_epsilon = number("mean_epsilon");
      if (j.contains("coverage")) {
        const auto w = j.at("coverage").get<std::vector<double>>();
        if (w.size() != 2) throw ConfigError("coverage must be [low, high]");
        s.coverage_low = w[0];
        s.coverage_high = w[1];
      }
      break;
    case AgreementKind::Exact:
      allowed({});
      break;
  }
  s.check();
  return s;
}

/// Evaluates the agreement Boolean on paired model outputs and data values.
/// `half_width` is the model confidence half-width c; it must be supplied
/// exactly when the agreement kind is MeanEpsilonAlpha.
inline bool eval_boolean(const AgreementSpec& spec, std::span<const double> yhat,
                         std::span<const double> y, std::optional<double> half_width = std::nullopt) {
  if (yhat.size() != y.size())
    throw DimensionError("model outputs (" + std::to_string(yhat.size()) + ") and data (" +
                         std::to_string(y.size()) + ") differ in length");
  const std::size_t n = y.size();
  spec.check_size(n);
  if (spec.needs_latent() != half_width.has_value())
    throw ConfigError(spec.needs_latent() ? "mean_epsilon_alpha agreement needs the half-width c"
                                          : "half-width c is only meaningful for mean_epsilon_alpha");
  switch (spec.kind) {
    case AgreementKind::Epsilon:
      for (std::size_t j = 0; j < n; ++j)
        if (!(std::abs(y[j] - yhat[j]) <= spec.epsilon_at(j))) return false;
      return true;
    case AgreementKind::GammaEpsilonL: {
      std::size_t within = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double r = std::abs(y[j] - yhat[j]);
        const double e = spec.epsilon_at(j);
        if (!(r <= spec.ell * e)) return false;
        if (r <= e) ++within;
      }
      return 100.0 * static_cast<double>(within) >= spec.gamma * static_cast<double>(n);
    }
    case AgreementKind::MeanEpsilon:
    case AgreementKind::MeanEpsilonAlpha: {
      double total = 0.0;
      std::size_t covered = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double r = std::abs(y[j] - yhat[j]);
        total += r;
        if (half_width && r <= *half_width) ++covered;
      }
      if (!(total / static_cast<double>(n) <= spec.mean_epsilon)) return false;
      if (!half_width) return true;
      const double coverage = static_cast<double>(covered) / static_cast<double>(n);
      return coverage >= spec.coverage_low && coverage <= spec.coverage_high;
    }
    case AgreementKind::Exact:
      for (std::size_t j = 0; j < n; ++j)
        if (y[j] != yhat[j]) return false;
      return true;
  }
  return false;
}

}  // namespace bvm
