#pragma once

// Likelihood kernels: classic Bayesian densities, analytic probabilities of
// agreement under the epsilon Boolean, and the Monte-Carlo estimate for an
// arbitrary Boolean.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvm/agreement.hpp"
#include "bvm/data.hpp"
#include "bvm/errors.hpp"
#include "bvm/models.hpp"
#include "bvm/normal.hpp"
#include "json.hpp"

namespace bvm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline void require_kind(const DataSet& data, ObservationKind kind, const char* kernel) {
  for (const auto& o : data.y)
    if (o.kind() != kind)
      throw KindMismatchError(std::string(kernel) + " requires " + std::string(to_string(kind)) +
                              " observations, found " + std::string(to_string(o.kind())));
}

inline std::vector<double> outputs_or_throw(const ParametricModel& model, std::span<const double> alpha,
                                            const DataSet& data) {
  return model.evaluate(data.x, alpha);
}

inline double pointwise_eps(std::span<const double> eps, std::size_t j) {
  return eps.size() == 1 ? eps[0] : eps[j];
}

inline void check_eps(std::span<const double> eps, std::size_t n) {
  if (eps.empty() || (eps.size() != 1 && eps.size() != n))
    throw DimensionError("epsilon must have 1 or n entries");
  for (double e : eps)
    if (!(e >= 0.0)) throw ConfigError("epsilon must be >= 0");
}

inline double log_gaussian_eps_factor(double yhat, double eps, const UncertainObservation& o) {
  const double s = o.sigma();
  return normal::log_interval_probability((yhat - eps - o.mean()) / s, (yhat + eps - o.mean()) / s);
}

inline double uniform_eps_factor(double yhat, double eps, const UncertainObservation& o) {
  const double l = std::max(yhat - eps, o.low());
  const double u = std::min(yhat + eps, o.high());
  if (!(u > l)) return 0.0;
  return (u - l) / (o.high() - o.low());
}

inline double log_classic_gaussian_at(std::span<const double> yhat, const DataSet& data) {
  double acc = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j)
    acc += normal::log_pdf(yhat[j], data.y[j].mean(), data.y[j].sigma());
  return acc;
}

inline double classic_uniform_at(std::span<const double> yhat, const DataSet& data) {
  double acc = 1.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto& o = data.y[j];
    if (!(yhat[j] >= o.low() && yhat[j] <= o.high())) return 0.0;
    acc /= (o.high() - o.low());
  }
  return acc;
}

inline bool classic_certain_at(std::span<const double> yhat, const DataSet& data) {
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double d = data.y[j].value();
    if (std::abs(yhat[j] - d) > 1e-14 * std::max(std::abs(d), std::abs(yhat[j]))) return false;
  }
  return true;
}

inline double log_gaussian_eps_at(std::span<const double> yhat, const DataSet& data,
                                  std::span<const double> eps) {
  double acc = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j)
    acc += log_gaussian_eps_factor(yhat[j], pointwise_eps(eps, j), data.y[j]);
  return acc;
}

inline double uniform_eps_at(std::span<const double> yhat, const DataSet& data,
                             std::span<const double> eps) {
  double acc = 1.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    acc *= uniform_eps_factor(yhat[j], pointwise_eps(eps, j), data.y[j]);
    if (acc == 0.0) return 0.0;
  }
  return acc;
}

template <class Rng>
double monte_carlo_at(std::span<const double> yhat, const DataSet& data, const AgreementSpec& spec,
                      std::size_t replications, Rng& rng, std::optional<double> half_width) {
  std::vector<double> draw(data.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < replications; ++k) {
    for (std::size_t j = 0; j < data.size(); ++j) draw[j] = sample_observation(data.y[j], rng);
    if (eval_boolean(spec, yhat, draw, half_width)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(replications);
}

}  // namespace detail

// Product of normal densities of the residuals (diagonal covariance).
inline double log_classic_gaussian(const ParametricModel& model, std::span<const double> alpha,
                                   const DataSet& data) {
  detail::require_kind(data, ObservationKind::Gaussian, "classic_gaussian");
  return detail::log_classic_gaussian_at(detail::outputs_or_throw(model, alpha, data), data);
}

inline double classic_gaussian(const ParametricModel& model, std::span<const double> alpha,
                               const DataSet& data) {
  return std::exp(log_classic_gaussian(model, alpha, data));
}

inline double classic_uniform(const ParametricModel& model, std::span<const double> alpha,
                              const DataSet& data) {
  detail::require_kind(data, ObservationKind::Uniform, "classic_uniform");
  return detail::classic_uniform_at(detail::outputs_or_throw(model, alpha, data), data);
}

/// Outcome of the classic certain-data likelihood. A match stands for an
/// infinite delta density and is reported as a flag, never as a number.
struct CertainMatch {
  bool match = false;
  explicit operator bool() const noexcept { return match; }
};

inline CertainMatch classic_certain(const ParametricModel& model, std::span<const double> alpha,
                                    const DataSet& data) {
  detail::require_kind(data, ObservationKind::Certain, "classic_certain");
  return {detail::classic_certain_at(detail::outputs_or_throw(model, alpha, data), data)};
}

inline double log_bvm_gaussian_eps(const ParametricModel& model, std::span<const double> alpha,
                                   const DataSet& data, std::span<const double> eps) {
  detail::require_kind(data, ObservationKind::Gaussian, "bvm_gaussian_eps");
  detail::check_eps(eps, data.size());
  return detail::log_gaussian_eps_at(detail::outputs_or_throw(model, alpha, data), data, eps);
}

/// prod_j [Phi((M_j + eps - D_j)/s_j) - Phi((M_j - eps - D_j)/s_j)]
inline double bvm_gaussian_eps(const ParametricModel& model, std::span<const double> alpha,
                               const DataSet& data, std::span<const double> eps) {
  return std::exp(log_bvm_gaussian_eps(model, alpha, data, eps));
}

inline double bvm_gaussian_eps(const ParametricModel& model, std::span<const double> alpha,
                               const DataSet& data, double eps) {
  return bvm_gaussian_eps(model, alpha, data, std::span<const double>(&eps, 1));
}

/// prod_j (u_j - l_j)/(b_j - a_j), where [l_j, u_j] = [M_j - eps, M_j + eps] n [a_j, b_j].
inline double bvm_uniform_eps(const ParametricModel& model, std::span<const double> alpha,
                              const DataSet& data, std::span<const double> eps) {
  detail::require_kind(data, ObservationKind::Uniform, "bvm_uniform_eps");
  detail::check_eps(eps, data.size());
  return detail::uniform_eps_at(detail::outputs_or_throw(model, alpha, data), data, eps);
}

inline double bvm_uniform_eps(const ParametricModel& model, std::span<const double> alpha,
                              const DataSet& data, double eps) {
  return bvm_uniform_eps(model, alpha, data, std::span<const double>(&eps, 1));
}

// Indicator of the agreement Boolean on (model outputs, certain values).
inline double bvm_certain_eps(const ParametricModel& model, std::span<const double> alpha,
                              const DataSet& data, const AgreementSpec& spec,
                              std::optional<double> half_width = std::nullopt) {
  detail::require_kind(data, ObservationKind::Certain, "bvm_certain_eps");
  const auto yhat = detail::outputs_or_throw(model, alpha, data);
  const auto y = data.point_values();
  return eval_boolean(spec, yhat, y, half_width) ? 1.0 : 0.0;
}

/// (1/K) sum_k Theta(B(M(X), Y^(k))) with each Y^(k) drawn point by point
/// from the observation distributions.
template <class Rng>
double bvm_monte_carlo(const ParametricModel& model, std::span<const double> alpha, const DataSet& data,
                       const AgreementSpec& spec, std::size_t replications, Rng& rng,
                       std::optional<double> half_width = std::nullopt) {
  if (replications == 0) throw ConfigError("Monte-Carlo replications must be >= 1");
  return detail::monte_carlo_at(detail::outputs_or_throw(model, alpha, data), data, spec, replications,
                                rng, half_width);
}

enum class KernelKind {
  ClassicGaussian,
  ClassicUniform,
  ClassicCertain,
  BvmGaussianEps,
  BvmUniformEps,
  BvmCertainEps,
  BvmMonteCarlo,
  Flat,  // L == 1 everywhere; for debugging and prior checks
};

inline std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::ClassicGaussian: return "classic_gaussian";
    case KernelKind::ClassicUniform: return "classic_uniform";
    case KernelKind::ClassicCertain: return "classic_certain";
    case KernelKind::BvmGaussianEps: return "bvm_gaussian_eps";
    case KernelKind::BvmUniformEps: return "bvm_uniform_eps";
    case KernelKind::BvmCertainEps: return "bvm_certain_eps";
    case KernelKind::BvmMonteCarlo: return "bvm_monte_carlo";
    case KernelKind::Flat: return "flat";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(std::string_view s) {
  for (auto k : {KernelKind::ClassicGaussian, KernelKind::ClassicUniform, KernelKind::ClassicCertain,
                 KernelKind::BvmGaussianEps, KernelKind::BvmUniformEps, KernelKind::BvmCertainEps,
                 KernelKind::BvmMonteCarlo, KernelKind::Flat})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown kernel '" + std::string(s) + "'");
}

/// A likelihood choice bundled with its agreement spec. Chain states passed
/// to it are the model parameters followed by latent_dim() latent entries.
class LikelihoodKernel {
 public:
  LikelihoodKernel() = default;

  LikelihoodKernel(KernelKind kind, AgreementSpec agreement = AgreementSpec::exact(),
                   std::size_t replications = 50)
      : kind_(kind), agreement_(std::move(agreement)), replications_(replications) {
    agreement_.check();
    switch (kind_) {
      case KernelKind::BvmGaussianEps:
      case KernelKind::BvmUniformEps:
        if (agreement_.kind != AgreementKind::Epsilon)
          throw ConfigError(std::string(to_string(kind_)) + " needs epsilon agreement");
        break;
      case KernelKind::BvmMonteCarlo:
        if (replications_ == 0) throw ConfigError("Monte-Carlo replications must be >= 1");
        break;
      case KernelKind::BvmCertainEps:
        break;
      default:
        agreement_ = AgreementSpec::exact();
    }
  }

  KernelKind kind() const noexcept { return kind_; }
  const AgreementSpec& agreement() const noexcept { return agreement_; }
  std::size_t replications() const noexcept { return replications_; }

  bool uses_agreement() const noexcept {
    return kind_ == KernelKind::BvmGaussianEps || kind_ == KernelKind::BvmUniformEps ||
           kind_ == KernelKind::BvmCertainEps || kind_ == KernelKind::BvmMonteCarlo;
  }

  std::size_t latent_dim() const noexcept { return uses_agreement() && agreement_.needs_latent() ? 1 : 0; }

  // Same kernel with its scalar tolerance replaced.
  LikelihoodKernel with_tolerance(double t) const {
    return {kind_, agreement_.with_tolerance(t), replications_};
  }

  void check_compatible(const DataSet& data) const {
    switch (kind_) {
      case KernelKind::ClassicGaussian:
      case KernelKind::BvmGaussianEps:
        detail::require_kind(data, ObservationKind::Gaussian, to_string(kind_).data());
        break;
      case KernelKind::ClassicUniform:
      case KernelKind::BvmUniformEps:
        detail::require_kind(data, ObservationKind::Uniform, to_string(kind_).data());
        break;
      case KernelKind::ClassicCertain:
      case KernelKind::BvmCertainEps:
        detail::require_kind(data, ObservationKind::Certain, to_string(kind_).data());
        break;
      default:
        break;
    }
    agreement_.check_size(data.size());
  }

  // Natural log of the likelihood; -inf encodes an exact zero. Model
  // evaluation failures count as zero likelihood.
  template <class Rng>
  double log_likelihood(const ParametricModel& model, std::span<const double> state, const DataSet& data,
                        Rng& rng) const {
    if (state.size() != model.dim() + latent_dim())
      throw DimensionError("state has " + std::to_string(state.size()) + " entries, kernel expects " +
                           std::to_string(model.dim() + latent_dim()));
    if (kind_ == KernelKind::Flat) return 0.0;
    const auto alpha = state.first(model.dim());
    std::optional<double> c;
    if (latent_dim() == 1) c = state[model.dim()];
    const auto outputs = model.try_evaluate(data.x, alpha);
    if (!outputs) return kNegInf;
    const std::span<const double> yhat(*outputs);
    const auto eps = std::span<const double>(agreement_.epsilon);
    switch (kind_) {
      case KernelKind::ClassicGaussian:
        return detail::log_classic_gaussian_at(yhat, data);
      case KernelKind::ClassicUniform:
        return std::log(detail::classic_uniform_at(yhat, data));
      case KernelKind::ClassicCertain:
        return detail::classic_certain_at(yhat, data) ? 0.0 : kNegInf;
      case KernelKind::BvmGaussianEps:
        return detail::log_gaussian_eps_at(yhat, data, eps);
      case KernelKind::BvmUniformEps:
        return std::log(detail::uniform_eps_at(yhat, data, eps));
      case KernelKind::BvmCertainEps:
        return eval_boolean(agreement_, yhat, data.point_values(), c) ? 0.0 : kNegInf;
      case KernelKind::BvmMonteCarlo:
        return std::log(detail::monte_carlo_at(yhat, data, agreement_, replications_, rng, c));
      case KernelKind::Flat:
        break;
    }
    return 0.0;
  }

  template <class Rng>
  double likelihood(const ParametricModel& model, std::span<const double> state, const DataSet& data,
                    Rng& rng) const {
    return std::exp(log_likelihood(model, state, data, rng));
  }

 private:
  KernelKind kind_ = KernelKind::Flat;
  AgreementSpec agreement_ = AgreementSpec::exact();
  std::size_t replications_ = 50;
};

inline nlohmann::json to_json(const LikelihoodKernel& k) {
  nlohmann::json j{{"kernel", std::string(to_string(k.kind()))}};
  if (k.uses_agreement()) j["agreement"] = to_json(k.agreement());
  if (k.kind() == KernelKind::BvmMonteCarlo) j["replications"] = k.replications();
  return j;
}

// {"kernel": name, "epsilon": e} is shorthand for an epsilon agreement;
// any other Boolean goes under "agreement".
inline LikelihoodKernel kernel_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kernel") || !j.at("kernel").is_string())
    throw ConfigError("kernel needs a string 'kernel' field");
  for (const auto& [key, _] : j.items())
    if (key != "kernel" && key != "epsilon" && key != "agreement" && key != "replications")
      throw ConfigError("unknown kernel field '" + key + "'");
  const auto kind = kernel_kind_from_string(j.at("kernel").get<std::string>());
  if (j.contains("epsilon") && j.contains("agreement"))
    throw ConfigError("give either 'epsilon' or 'agreement', not both");
  AgreementSpec agreement = AgreementSpec::exact();
  if (j.contains("epsilon")) {
    const auto& e = j.at("epsilon");
    if (e.is_number()) agreement = AgreementSpec::eps(e.get<double>());
    else if (e.is_array()) agreement = AgreementSpec::eps(e.get<std::vector<double>>());
    else throw ConfigError("kernel epsilon must be a number or array");
  } else if (j.contains("agreement")) {
    agreement = agreement_from_json(j.at("agreement"));
  }
  const bool needs_agreement = kind == KernelKind::BvmGaussianEps || kind == KernelKind::BvmUniformEps ||
                               kind == KernelKind::BvmCertainEps || kind == KernelKind::BvmMonteCarlo;
  if (needs_agreement && !j.contains("epsilon") && !j.contains("agreement"))
    throw ConfigError(std::string(to_string(kind)) + " needs 'epsilon' or 'agreement'");
  if (!needs_agreement && (j.contains("epsilon") || j.contains("agreement")))
    throw ConfigError(std::string(to_string(kind)) + " takes no agreement");
  std::size_t replications = 50;
  if (j.contains("replications")) {
    if (kind != KernelKind::BvmMonteCarlo) throw ConfigError("'replications' only applies to bvm_monte_carlo");
    if (!j.at("replications").is_number_unsigned()) throw ConfigError("replications must be a positive integer");
    replications = j.at("replications").get<std::size_t>();
  }
  return {kind, agreement, replications};
}

}  // namespace bvm
