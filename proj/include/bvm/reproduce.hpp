#pragma once

// Runs the canned scenarios and checks their expectations.

#include <chrono>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bvm/analysis.hpp"
#include "bvm/io.hpp"
#include "bvm/pipeline.hpp"
#include "bvm/scenarios.hpp"
#include "json.hpp"

namespace bvm {

struct VerdictRow {
  std::string metric;
  std::string measured;
  std::string expected;
  bool pass = false;
  // Informational rows are printed but do not decide the overall verdict.
  bool gate = true;
};

struct Report {
  std::string name;
  std::vector<VerdictRow> rows;
  double seconds = 0.0;

  bool all_pass() const {
    for (const auto& r : rows)
      if (r.gate && !r.pass) return false;
    return true;
  }

  void add(const Expectation& e, double measured, bool gate = true) {
    rows.push_back({e.metric, io::format_double(measured), e.describe(), e.holds(measured), gate});
  }
};

inline std::string format_report(const Report& r) {
  std::ostringstream out;
  out << "== " << r.name << " (" << io::format_double(std::round(r.seconds * 100.0) / 100.0) << " s)\n";
  std::size_t w = 6;
  for (const auto& row : r.rows) w = std::max(w, row.metric.size());
  for (const auto& row : r.rows) {
    out << (row.pass ? "PASS" : "FAIL") << (row.gate ? "  " : "* ") << row.metric
        << std::string(w - row.metric.size() + 2, ' ') << "measured " << row.measured << "  expected "
        << row.expected << '\n';
  }
  out << (r.all_pass() ? "overall PASS" : "overall FAIL") << '\n';
  return out.str();
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"metric", row.metric}, {"measured", row.measured}, {"expected", row.expected},
                    {"pass", row.pass}, {"gate", row.gate}});
  return {{"name", r.name}, {"pass", r.all_pass()}, {"seconds", r.seconds}, {"rows", rows}};
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline const Expectation& expectation(const Scenario& s, std::string_view metric) {
  for (const auto& e : s.expectations)
    if (e.metric == metric) return e;
  throw ConfigError("scenario '" + s.name + "' has no expectation '" + std::string(metric) + "'");
}

}  // namespace detail

// ---- monod ----

inline LeastSquaresResult monod_least_squares(std::uint64_t seed = 1) {
  const auto s = scenario_monod(seed);
  return least_squares_from_prior(make_model("monod"), s.config.dataset, s.config.prior, seed);
}

// True when no feasible chain start exists at tolerance `eps`.
inline bool monod_infeasible(double eps, std::uint64_t seed = 1) {
  auto cfg = scenario_monod(seed).config;
  cfg.kernel = cfg.kernel.with_tolerance(eps);
  try {
    run_mcmc(cfg.kernel, cfg.full_prior(), make_model(cfg.model), cfg.dataset, cfg.mcmc);
    return false;
  } catch (const InfeasibleStartError&) {
    return true;
  }
}

inline EvidenceEstimate monod_evidence(double eps, std::size_t draws, std::uint64_t seed = 1) {
  auto cfg = scenario_monod(seed).config;
  cfg.kernel = cfg.kernel.with_tolerance(eps);
  return run_evidence(cfg, draws);
}

/// Level-1 envelope half-widths of Monod chains at each tolerance (ascending).
inline std::vector<std::vector<double>> monod_envelopes(std::span<const double> eps_grid, std::uint64_t seed = 1) {
  std::vector<std::vector<double>> out;
  for (double eps : eps_grid) {
    auto cfg = scenario_monod(seed).config;
    cfg.kernel = cfg.kernel.with_tolerance(eps);
    cfg.evidence_draws = 0;
    out.push_back(calibrate(cfg).envelope.half_width[0]);
  }
  return out;
}

// Fraction of grid points where the half-widths are nondecreasing along the grid.
inline double monotone_fraction(const std::vector<std::vector<double>>& hw) {
  if (hw.empty() || hw.front().empty()) return 0.0;
  std::size_t good = 0;
  for (std::size_t i = 0; i < hw.front().size(); ++i) {
    bool ok = true;
    for (std::size_t k = 1; k < hw.size(); ++k) ok = ok && hw[k][i] >= hw[k - 1][i];
    good += ok ? 1 : 0;
  }
  return static_cast<double>(good) / static_cast<double>(hw.front().size());
}

inline Report reproduce_monod(std::uint64_t seed = 1) {
  detail::Stopwatch sw;
  const auto s = scenario_monod(seed);
  Report r{"monod", {}, 0.0};
  const auto ls = monod_least_squares(seed);
  r.add(detail::expectation(s, "least_squares_alpha1"), ls.alpha[0]);
  r.add(detail::expectation(s, "least_squares_alpha2"), ls.alpha[1]);
  r.add(detail::expectation(s, "evidence_eps_0.03"), monod_evidence(0.03, 100000, seed).value);
  r.add(detail::expectation(s, "evidence_eps_0.01"), monod_evidence(0.01, 100000, seed).value);
  r.add(detail::expectation(s, "infeasible_start_eps_0.01"), monod_infeasible(0.01, seed) ? 1.0 : 0.0);
  const double grid[] = {0.02, 0.025, 0.03};
  r.add(detail::expectation(s, "envelope_monotone_fraction"), monotone_fraction(monod_envelopes(grid, seed)));
  r.seconds = sw.seconds();
  return r;
}

// ---- toy ----

struct ToyOutcome {
  double mean_abs_residual = 0.0;
  double coverage = 0.0;
  double half_width = 0.0;
  double acceptance = 0.0;
};

/// Posterior-mean model and its latent half-width, checked against the
/// generating dataset's observed values.
inline ToyOutcome toy_outcome(std::uint64_t seed) {
  const auto s = scenario_toy(seed);
  auto cfg = s.config;
  const auto res = calibrate(cfg);
  const auto mean = posterior_mean(res.chain);
  const auto model = make_model(cfg.model);
  const auto yhat = model.evaluate(cfg.dataset.x, mean);
  const auto y = cfg.dataset.point_values();
  ToyOutcome out;
  out.half_width = mean.back();
  std::size_t covered = 0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double r = std::abs(y[j] - yhat[j]);
    out.mean_abs_residual += r;
    covered += r <= out.half_width ? 1 : 0;
  }
  out.mean_abs_residual /= static_cast<double>(y.size());
  out.coverage = static_cast<double>(covered) / static_cast<double>(y.size());
  out.acceptance = res.chain.acceptance_rate();
  return out;
}

inline bool toy_passes(const ToyOutcome& o) {
  const auto s = scenario_toy(1);
  return detail::expectation(s, "mean_abs_residual").holds(o.mean_abs_residual) &&
         detail::expectation(s, "coverage").holds(o.coverage);
}

inline Report reproduce_toy(const std::vector<std::uint64_t>& seeds = {1, 2, 3, 4, 5}) {
  detail::Stopwatch sw;
  Report r{"toy", {}, 0.0};
  const auto s = scenario_toy(1);
  std::size_t passing = 0;
  for (auto seed : seeds) {
    const auto o = toy_outcome(seed);
    auto e1 = detail::expectation(s, "mean_abs_residual");
    auto e2 = detail::expectation(s, "coverage");
    e1.metric = "seed " + std::to_string(seed) + " mean_abs_residual";
    e2.metric = "seed " + std::to_string(seed) + " coverage (c=" + io::format_double(o.half_width) + ")";
    r.add(e1, o.mean_abs_residual, false);
    r.add(e2, o.coverage, false);
    passing += toy_passes(o) ? 1 : 0;
  }
  const double need = std::ceil(0.8 * static_cast<double>(seeds.size()));
  r.add({"seeds satisfying both clauses", Expectation::Op::AtLeast, need}, static_cast<double>(passing));
  r.seconds = sw.seconds();
  return r;
}

// ---- smallwood ----

struct SmallwoodOutcome {
  double reliability = 0.0;
  std::size_t inside_1sd = 0;
  double acceptance = 0.0;
};

inline SmallwoodOutcome smallwood_outcome(std::uint64_t seed) {
  auto cfg = scenario_smallwood(seed).config;
  cfg.evidence_draws = 0;
  const auto res = calibrate(cfg);
  const auto model = make_model(cfg.model);
  Rng rng = make_rng(seed, kEnvelopeStream);
  const auto env = predictive_envelope(res.chain, model, cfg.dataset.x, cfg.envelope.subsample, rng);
  SmallwoodOutcome out;
  out.reliability = *res.reliability;
  out.acceptance = res.chain.acceptance_rate();
  for (std::size_t j = 0; j < cfg.dataset.size(); ++j)
    out.inside_1sd += std::abs(cfg.dataset.y[j].value() - env.mean[j]) <= env.half_width[0][j] ? 1 : 0;
  return out;
}

inline Report reproduce_smallwood(const std::vector<std::uint64_t>& seeds = {1, 2, 3, 4, 5}) {
  detail::Stopwatch sw;
  Report r{"smallwood", {}, 0.0};
  const auto s = scenario_smallwood(1);
  std::size_t reliable = 0;
  std::size_t captured = 0;
  for (auto seed : seeds) {
    const auto o = smallwood_outcome(seed);
    auto e1 = detail::expectation(s, "reliability_score");
    auto e2 = detail::expectation(s, "points_inside_1sd_envelope");
    e1.metric = "seed " + std::to_string(seed) + " reliability_score";
    e2.metric = "seed " + std::to_string(seed) + " points_inside_1sd_envelope";
    r.add(e1, o.reliability, false);
    r.add(e2, static_cast<double>(o.inside_1sd), false);
    reliable += e1.holds(o.reliability) ? 1 : 0;
    captured += e2.holds(static_cast<double>(o.inside_1sd)) ? 1 : 0;
  }
  const double need = std::ceil(0.8 * static_cast<double>(seeds.size()));
  r.add({"seeds with reliability in band", Expectation::Op::AtLeast, need}, static_cast<double>(reliable));
  r.add({"seeds capturing every point", Expectation::Op::Equals, static_cast<double>(seeds.size())},
        static_cast<double>(captured));
  r.seconds = sw.seconds();
  return r;
}

// ---- success/failure matrix ----

struct MatrixOutcome {
  bool success = false;
  std::optional<EvidenceEstimate> evidence;
  bool infeasible = false;
  std::size_t accepted_post_burn_in = 0;
  // Least-squares only.
  std::vector<double> estimate;
  std::vector<double> replicate_sd;
  std::size_t distinct_estimates = 0;

  std::string describe() const {
    std::string s;
    if (evidence) {
      s = "Z=" + io::format_double(evidence->value);
      s += infeasible ? " infeasible start" : " accepted=" + std::to_string(accepted_post_burn_in);
    } else {
      s = "fit=(" + io::format_double(estimate.at(0)) + ", " + io::format_double(estimate.at(1)) + ")";
      s += distinct_estimates > 1 ? " spread sd=(" + io::format_double(replicate_sd.at(0)) + ", " +
                                        io::format_double(replicate_sd.at(1)) + ")"
                                  : " no distribution";
    }
    return s;
  }
};

/// Bayesian methods succeed with positive evidence and enough accepted
/// post-burn-in samples. Least squares succeeds when refitting data
/// replicates drawn from the observation distributions gives more than one
/// distinct estimate.
inline MatrixOutcome matrix_outcome(const MatrixScenario& m) {
  const auto& cfg = m.scenario.config;
  const auto model = make_model(cfg.model);
  MatrixOutcome out;
  if (m.method == MatrixMethod::LeastSquares) {
    LeastSquaresOptions opt;
    opt.seed = cfg.mcmc.seed;
    const auto fit = least_squares_fit(model, cfg.dataset, cfg.prior.center(), opt);
    out.estimate = fit.alpha;
    Rng rng = make_rng(cfg.mcmc.seed, 9);
    std::set<std::vector<double>> distinct;
    std::vector<std::vector<double>> cols(model.dim());
    opt.starts = 2;
    for (std::size_t rep = 0; rep < kMatrixReplicates; ++rep) {
      std::vector<double> y;
      for (const auto& o : cfg.dataset.y) y.push_back(sample_observation(o, rng));
      const auto f = least_squares_fit(model, cfg.dataset.x, y, fit.alpha, opt);
      distinct.insert(f.alpha);
      for (std::size_t i = 0; i < model.dim(); ++i) cols[i].push_back(f.alpha[i]);
    }
    for (const auto& c : cols) out.replicate_sd.push_back(distinct.size() > 1 ? sample_sd(c) : 0.0);
    out.distinct_estimates = distinct.size();
    out.success = distinct.size() > 1;
    return out;
  }
  out.evidence = run_evidence(cfg, cfg.evidence_draws);
  try {
    const auto chain = run_mcmc(cfg.kernel, cfg.full_prior(), model, cfg.dataset, cfg.mcmc);
    out.accepted_post_burn_in = chain.accepted_after_burn_in();
  } catch (const InfeasibleStartError&) {
    out.infeasible = true;
  }
  out.success = out.evidence->value > 0.0 && !out.infeasible && out.accepted_post_burn_in >= kMatrixMinAccepted;
  return out;
}

inline Report reproduce_matrix(std::uint64_t seed = 1) {
  detail::Stopwatch sw;
  Report r{"matrix", {}, 0.0};
  for (const auto& m : scenario_matrix(seed)) {
    const auto o = matrix_outcome(m);
    r.rows.push_back({m.scenario.name, std::string(o.success ? "success: " : "failure: ") + o.describe(),
                      m.expect_success ? "success" : "failure", o.success == m.expect_success, true});
  }
  r.seconds = sw.seconds();
  return r;
}

}  // namespace bvm
