#pragma once

// Random-walk Metropolis-Hastings over parameter space, prior Monte-Carlo
// evidence, posterior-averaged reliability, and tolerance tuning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bvm/data.hpp"
#include "bvm/errors.hpp"
#include "bvm/likelihood.hpp"
#include "bvm/models.hpp"
#include "bvm/normal.hpp"
#include "json.hpp"

namespace bvm {

using Rng = std::mt19937_64;

// Independent generator for (seed, stream) pairs.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

struct PriorComponent {
  enum class Kind { Gaussian, Uniform };

  std::string name;
  Kind kind = Kind::Gaussian;
  double a = 0.0;  // mean or low
  double b = 1.0;  // sd or high

  static PriorComponent gaussian(std::string name, double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean)) throw ConfigError("prior '" + name + "': sd must be > 0");
    return {std::move(name), Kind::Gaussian, mean, sd};
  }

  static PriorComponent uniform(std::string name, double low, double high) {
    if (!(low < high)) throw ConfigError("prior '" + name + "': requires low < high");
    return {std::move(name), Kind::Uniform, low, high};
  }

  double log_density(double v) const {
    if (kind == Kind::Gaussian) return normal::log_pdf(v, a, b);
    return (v >= a && v <= b) ? -std::log(b - a) : kNegInf;
  }

  double center() const { return kind == Kind::Gaussian ? a : 0.5 * (a + b); }
  double spread() const { return kind == Kind::Gaussian ? b : (b - a) / std::sqrt(12.0); }

  // 5% of the sd, or a twentieth of the range.
  double default_step() const { return kind == Kind::Gaussian ? 0.05 * b : (b - a) / 20.0; }

  template <class G>
  double sample(G& rng) const {
    if (kind == Kind::Gaussian) return std::normal_distribution<double>(a, b)(rng);
    return std::uniform_real_distribution<double>(a, b)(rng);
  }

  bool operator==(const PriorComponent&) const = default;
};

/// Product of independent per-coordinate priors.
class Prior {
 public:
  Prior() = default;
  explicit Prior(std::vector<PriorComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("prior must have at least one component");
  }

  std::size_t dim() const noexcept { return components_.size(); }
  const std::vector<PriorComponent>& components() const noexcept { return components_; }
  const PriorComponent& operator[](std::size_t i) const { return components_.at(i); }

  double log_density(std::span<const double> v) const {
    if (v.size() != dim()) throw DimensionError("prior dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      acc += components_[i].log_density(v[i]);
      if (acc == kNegInf) return acc;
    }
    return acc;
  }

  std::vector<double> center() const {
    std::vector<double> c;
    for (const auto& p : components_) c.push_back(p.center());
    return c;
  }

  std::vector<double> default_steps() const {
    std::vector<double> s;
    for (const auto& p : components_) s.push_back(p.default_step());
    return s;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& p : components_) n.push_back(p.name);
    return n;
  }

  template <class G>
  std::vector<double> sample(G& rng) const {
    std::vector<double> v;
    v.reserve(dim());
    for (const auto& p : components_) v.push_back(p.sample(rng));
    return v;
  }

  // Appends the components of `other` (e.g. a latent-coordinate prior).
  Prior extended(const Prior& other) const {
    auto c = components_;
    c.insert(c.end(), other.components_.begin(), other.components_.end());
    return Prior(std::move(c));
  }

  bool operator==(const Prior&) const = default;

 private:
  std::vector<PriorComponent> components_;
};

inline nlohmann::json to_json(const PriorComponent& p) {
  if (p.kind == PriorComponent::Kind::Gaussian)
    return {{"name", p.name}, {"kind", "gaussian"}, {"mean", p.a}, {"sd", p.b}};
  return {{"name", p.name}, {"kind", "uniform"}, {"low", p.a}, {"high", p.b}};
}

inline nlohmann::json to_json(const Prior& prior) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : prior.components()) arr.push_back(to_json(p));
  return arr;
}

inline PriorComponent prior_component_from_json(const nlohmann::json& j, std::size_t index) {
  const std::string where = "prior[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + " needs a 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  const std::string name = j.contains("name") ? j.at("name").get<std::string>() : "p" + std::to_string(index);
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError(where + " needs numeric '" + key + "'");
    return j.at(key).get<double>();
  };
  auto only = [&](const char* k1, const char* k2) {
    for (const auto& [key, _] : j.items())
      if (key != "kind" && key != "name" && key != k1 && key != k2)
        throw ConfigError(where + ": unknown field '" + key + "'");
  };
  if (kind == "gaussian") {
    only("mean", "sd");
    return PriorComponent::gaussian(name, number("mean"), number("sd"));
  }
  if (kind == "uniform") {
    only("low", "high");
    return PriorComponent::uniform(name, number("low"), number("high"));
  }
  throw ConfigError(where + ": unknown prior kind '" + kind + "'");
}

inline Prior prior_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("prior must be an array");
  std::vector<PriorComponent> comps;
  for (std::size_t i = 0; i < j.size(); ++i) comps.push_back(prior_component_from_json(j[i], i));
  return Prior(std::move(comps));
}

struct McmcConfig {
  std::size_t iterations = 10000;
  double burn_in_fraction = 0.1;
  std::vector<double> proposal_scales;  // empty: prior defaults
  std::uint64_t seed = 1;
  // Chain start. Empty: prior center. Shorter than the state: leading
  // (model) coordinates are fixed, the rest start at their prior center.
  std::vector<double> start;
  std::size_t max_start_draws = 10000;

  void check(std::size_t dim) const {
    if (iterations == 0) throw ConfigError("iterations must be positive");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
      throw ConfigError("burn_in_fraction must be in [0, 1)");
    if (!proposal_scales.empty()) {
      if (proposal_scales.size() != dim)
        throw DimensionError("proposal_scales has " + std::to_string(proposal_scales.size()) +
                             " entries for a " + std::to_string(dim) + "-dimensional state");
      for (double s : proposal_scales)
        if (!(s > 0.0)) throw ConfigError("proposal scales must be positive");
    }
    if (start.size() > dim) throw DimensionError("start vector is longer than the state");
  }

  std::size_t burn_in() const {
    return static_cast<std::size_t>(std::floor(static_cast<double>(iterations) * burn_in_fraction));
  }
};

struct ChainSample {
  std::vector<double> state;
  double log_likelihood = 0.0;
  bool accepted = false;
};

/// Every iteration's state; the first `burn_in` rows are flagged, not removed.
struct PosteriorChain {
  std::vector<std::string> names;
  std::vector<ChainSample> samples;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return names.size(); }

  double acceptance_rate() const noexcept {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }

  std::span<const ChainSample> post_burn_in() const {
    const std::size_t b = std::min(burn_in, samples.size());
    return std::span<const ChainSample>(samples).subspan(b);
  }

  std::size_t accepted_after_burn_in() const {
    std::size_t n = 0;
    for (const auto& s : post_burn_in()) n += s.accepted ? 1 : 0;
    return n;
  }
};

namespace detail {

template <class LogLik, class Miss>
std::pair<std::vector<double>, double> find_feasible_start(LogLik& loglik, const Prior& prior,
                                                          const McmcConfig& cfg, Rng& rng, Miss& miss) {
  std::vector<double> anchor = prior.center();
  const std::size_t fixed = cfg.start.size();
  std::copy(cfg.start.begin(), cfg.start.end(), anchor.begin());

  std::vector<double> best = anchor;
  double best_miss = std::numeric_limits<double>::infinity();
  auto try_state = [&](const std::vector<double>& s) -> std::optional<double> {
    if (prior.log_density(s) == kNegInf) return std::nullopt;
    const double ll = loglik(std::span<const double>(s));
    if (ll > kNegInf) return ll;
    const double m = miss(std::span<const double>(s));
    if (m < best_miss) {
      best_miss = m;
      best = s;
    }
    return std::nullopt;
  };

  if (auto ll = try_state(anchor)) return {anchor, *ll};
  const bool partial_anchor = fixed > 0 && fixed < prior.dim();
  for (std::size_t i = 0; i < cfg.max_start_draws; ++i) {
    std::vector<double> cand = prior.sample(rng);
    // With a partial anchor, alternate between redrawing only the free
    // coordinates and drawing the whole state from the prior.
    if (partial_anchor && i % 2 == 0) std::copy(anchor.begin(), anchor.begin() + fixed, cand.begin());
    if (auto ll = try_state(cand)) return {cand, *ll};
  }
  throw InfeasibleStartError(best, best_miss, cfg.max_start_draws + 1);
}

}  // namespace detail

/// Random-walk Metropolis-Hastings with independent Gaussian proposals.
///
/// `loglik(state)` returns the log-likelihood (-inf for zero). Likelihoods
/// are evaluated once per proposal and the current value is carried forward,
/// so a stochastic estimator yields a pseudo-marginal chain. `miss(state)`
/// scores infeasible start candidates for the error report.
template <class LogLik, class Miss>
PosteriorChain run_metropolis(LogLik&& loglik, const Prior& prior, const McmcConfig& cfg, Miss&& miss) {
  const std::size_t dim = prior.dim();
  cfg.check(dim);
  Rng rng = make_rng(cfg.seed, 0);
  const auto scales = cfg.proposal_scales.empty() ? prior.default_steps() : cfg.proposal_scales;

  auto [state, ll] = detail::find_feasible_start(loglik, prior, cfg, rng, miss);
  double lp = prior.log_density(state);

  PosteriorChain chain;
  chain.names = prior.names();
  chain.seed = cfg.seed;
  chain.burn_in = cfg.burn_in();
  chain.samples.reserve(cfg.iterations);

  std::normal_distribution<double> step(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> proposal(dim);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < dim; ++i) proposal[i] = state[i] + scales[i] * step(rng);
    const double u = unif(rng);
    ++chain.proposed;
    bool accept = false;
    const double lp_new = prior.log_density(proposal);
    if (lp_new > kNegInf) {
      const double ll_new = loglik(std::span<const double>(proposal));
      if (ll_new > kNegInf) {
        const double log_ratio = (ll_new + lp_new) - (ll + lp);
        if (log_ratio >= 0.0 || std::log(u) < log_ratio) {
          accept = true;
          state = proposal;
          ll = ll_new;
          lp = lp_new;
        }
      }
    }
    if (accept) ++chain.accepted;
    chain.samples.push_back({state, ll, accept});
  }
  return chain;
}

template <class LogLik>
PosteriorChain run_metropolis(LogLik&& loglik, const Prior& prior, const McmcConfig& cfg) {
  return run_metropolis(std::forward<LogLik>(loglik), prior, cfg,
                        [](std::span<const double>) { return std::numeric_limits<double>::infinity(); });
}

// Largest absolute residual against the observations' representative values.
inline double max_abs_residual(const ParametricModel& model, std::span<const double> state,
                               const DataSet& data) {
  const auto yhat = model.try_evaluate(data.x, state.first(model.dim()));
  if (!yhat) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j)
    worst = std::max(worst, std::abs((*yhat)[j] - data.y[j].point_value()));
  return worst;
}

inline void check_state_dims(const LikelihoodKernel& kernel, const Prior& prior,
                             const ParametricModel& model) {
  if (prior.dim() != model.dim() + kernel.latent_dim())
    throw DimensionError("prior has " + std::to_string(prior.dim()) + " components; model '" +
                         model.name() + "' with this kernel needs " +
                         std::to_string(model.dim() + kernel.latent_dim()));
}

/// Posterior chain for `model` under `kernel`; the chain's state is the
/// model parameters followed by any latent agreement coordinates.
inline PosteriorChain run_mcmc(const LikelihoodKernel& kernel, const Prior& prior, const ParametricModel& model,
                               const DataSet& data, const McmcConfig& cfg) {
  check_state_dims(kernel, prior, model);
  kernel.check_compatible(data);
  Rng lik_rng = make_rng(cfg.seed, 1);
  return run_metropolis(
      [&](std::span<const double> s) { return kernel.log_likelihood(model, s, data, lik_rng); }, prior, cfg,
      [&](std::span<const double> s) { return max_abs_residual(model, s, data); });
}

struct EvidenceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Prior Monte-Carlo average of a likelihood functor `lik(state, rng)`.
template <class Lik>
EvidenceEstimate estimate_evidence_with(Lik&& lik, const Prior& prior, std::size_t draws, Rng& rng) {
  if (draws == 0) throw ConfigError("evidence needs at least one prior draw");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto s = prior.sample(rng);
    const double l = lik(std::span<const double>(s), rng);
    sum += l;
    sum_sq += l * l;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  double var = draws > 1 ? (sum_sq - n * mean * mean) / (n - 1.0) : 0.0;
  if (var < 0.0) var = 0.0;
  return {mean, std::sqrt(var / n), draws};
}

inline EvidenceEstimate estimate_evidence(const LikelihoodKernel& kernel, const Prior& prior,
                                          const ParametricModel& model, const DataSet& data,
                                          std::size_t draws, Rng& rng) {
  check_state_dims(kernel, prior, model);
  kernel.check_compatible(data);
  return estimate_evidence_with(
      [&](std::span<const double> s, Rng& g) { return kernel.likelihood(model, s, data, g); }, prior, draws,
      rng);
}

/// Mean likelihood over `subsample` post-burn-in states drawn without
/// replacement: the posterior-averaged probability of agreement.
inline double reliability_score(const LikelihoodKernel& kernel, const PosteriorChain& chain,
                                const ParametricModel& model, const DataSet& data, std::size_t subsample,
                                Rng& rng) {
  const auto post = chain.post_burn_in();
  if (subsample == 0 || post.size() < subsample)
    throw InsufficientSamplesError("reliability score needs " + std::to_string(subsample) +
                                   " post-burn-in samples, chain has " + std::to_string(post.size()));
  std::vector<std::size_t> idx(post.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < subsample; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < subsample; ++i)
    total += kernel.likelihood(model, post[idx[i]].state, data, rng);
  return total / static_cast<double>(subsample);
}

struct TuningRow {
  double epsilon = 0.0;
  double acceptance = 0.0;
  bool feasible = false;
  // Mean kernel value over a fixed set of prior draws (common random numbers).
  double mean_prior_likelihood = 0.0;
};

class TuningFailedError : public Error {
 public:
  explicit TuningFailedError(std::vector<TuningRow> table)
      : Error("no tolerance on the grid reached the target acceptance window"), table_(std::move(table)) {}
  const std::vector<TuningRow>& table() const noexcept { return table_; }

 private:
  std::vector<TuningRow> table_;
};

struct TuningResult {
  double epsilon = 0.0;
  std::vector<TuningRow> table;
};

/// Smallest grid tolerance whose pilot chain (a tenth of the configured
/// iterations) has an acceptance rate inside [window_low, window_high].
inline TuningResult auto_tune_tolerance(const LikelihoodKernel& base, const Prior& prior,
                                        const ParametricModel& model, const DataSet& data,
                                        const McmcConfig& cfg, std::span<const double> grid,
                                        double window_low = 0.1, double window_high = 0.5,
                                        std::size_t likelihood_draws = 2000) {
  if (grid.empty()) throw ConfigError("tolerance grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("tolerance grid must be ascending");
  McmcConfig pilot = cfg;
  pilot.iterations = std::max<std::size_t>(1, cfg.iterations / 10);

  Rng draw_rng = make_rng(cfg.seed, 7);
  std::vector<std::vector<double>> draws;
  for (std::size_t i = 0; i < likelihood_draws; ++i) draws.push_back(prior.sample(draw_rng));

  TuningResult result;
  std::optional<double> chosen;
  for (double eps : grid) {
    const auto kernel = base.with_tolerance(eps);
    TuningRow row{eps, 0.0, false, 0.0};
    Rng lik_rng = make_rng(cfg.seed, 8);
    double total = 0.0;
    for (const auto& s : draws) total += kernel.likelihood(model, s, data, lik_rng);
    row.mean_prior_likelihood = draws.empty() ? 0.0 : total / static_cast<double>(draws.size());
    try {
      const auto chain = run_mcmc(kernel, prior, model, data, pilot);
      row.feasible = true;
      row.acceptance = chain.acceptance_rate();
    } catch (const InfeasibleStartError&) {
    }
    if (!chosen && row.feasible && row.acceptance >= window_low && row.acceptance <= window_high)
      chosen = eps;
    result.table.push_back(row);
  }
  if (!chosen) throw TuningFailedError(result.table);
  result.epsilon = *chosen;
  return result;
}

}  // namespace bvm
