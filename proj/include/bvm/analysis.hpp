#pragma once

// Post-processing of posterior chains and the least-squares baseline.

#include <algorithm>
#include <array>
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
#include "bvm/io.hpp"
#include "bvm/models.hpp"
#include "bvm/normal.hpp"
#include "bvm/sampler.hpp"
#include "json.hpp"

namespace bvm {

// Linear-interpolation percentile (type 7) of unsorted values, p in [0, 1].
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw InsufficientSamplesError("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double sample_mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Unbiased sample standard deviation; 0 for fewer than two values.
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Mean of the post-burn-in states, all coordinates.
inline std::vector<double> posterior_mean(const PosteriorChain& chain) {
  const auto post = chain.post_burn_in();
  if (post.empty()) throw InsufficientSamplesError("chain has no post-burn-in samples");
  std::vector<double> mean(post.front().state.size(), 0.0);
  for (const auto& s : post)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.state[i];
  for (double& m : mean) m /= static_cast<double>(post.size());
  return mean;
}

struct PosteriorSummary {
  std::vector<std::string> names;
  std::vector<double> mean, sd, p025, p50, p975;
  std::vector<std::vector<double>> correlation;
  std::size_t samples = 0;
};

inline PosteriorSummary posterior_summary(const PosteriorChain& chain, std::size_t min_samples = 100) {
  const auto post = chain.post_burn_in();
  if (post.size() < min_samples)
    throw InsufficientSamplesError("posterior summary needs " + std::to_string(min_samples) +
                                   " post-burn-in samples, chain has " + std::to_string(post.size()));
  const std::size_t d = post.front().state.size();
  PosteriorSummary out;
  out.names = chain.names;
  out.samples = post.size();
  std::vector<std::vector<double>> cols(d);
  for (const auto& s : post)
    for (std::size_t i = 0; i < d; ++i) cols[i].push_back(s.state[i]);
  for (std::size_t i = 0; i < d; ++i) {
    out.mean.push_back(sample_mean(cols[i]));
    out.sd.push_back(sample_sd(cols[i]));
    out.p025.push_back(percentile(cols[i], 0.025));
    out.p50.push_back(percentile(cols[i], 0.5));
    out.p975.push_back(percentile(cols[i], 0.975));
  }
  out.correlation.assign(d, std::vector<double>(d, 0.0));
  const double n1 = static_cast<double>(post.size() - 1);
  for (std::size_t i = 0; i < d; ++i) {
    out.correlation[i][i] = 1.0;
    for (std::size_t k = i + 1; k < d; ++k) {
      double r = 0.0;
      if (out.sd[i] > 0.0 && out.sd[k] > 0.0) {
        double cov = 0.0;
        for (std::size_t s = 0; s < post.size(); ++s)
          cov += (cols[i][s] - out.mean[i]) * (cols[k][s] - out.mean[k]);
        r = std::clamp(cov / n1 / (out.sd[i] * out.sd[k]), -1.0, 1.0);
      }
      out.correlation[i][k] = out.correlation[k][i] = r;
    }
  }
  return out;
}

inline nlohmann::json to_json(const PosteriorSummary& s) {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    params.push_back({{"name", i < s.names.size() ? s.names[i] : "p" + std::to_string(i)},
                      {"mean", s.mean[i]},
                      {"sd", s.sd[i]},
                      {"p025", s.p025[i]},
                      {"p50", s.p50[i]},
                      {"p975", s.p975[i]}});
  }
  return {{"samples", s.samples}, {"parameters", params}, {"correlation", s.correlation}};
}

enum class BandMethod { StdDev, Quantile };

struct PredictiveEnvelope {
  std::vector<double> x;
  std::vector<double> mean;
  // half_width[k][i]: level k+1 at grid point i.
  std::array<std::vector<double>, 3> half_width;
  std::size_t subsample = 0;
};

/// `points` evenly spaced values over the data's x range, widened by
/// `extend` of the range on each side.
inline std::vector<double> default_grid(const DataSet& data, std::size_t points = 200, double extend = 0.05) {
  if (data.x.empty()) throw ValidationError("cannot build a grid for an empty dataset");
  if (points < 2) throw ConfigError("grid needs at least 2 points");
  const auto [lo_it, hi_it] = std::minmax_element(data.x.begin(), data.x.end());
  const double pad = extend * (*hi_it - *lo_it);
  const double lo = *lo_it - pad;
  const double hi = *hi_it + pad;
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

/// Mean response from the posterior-mean parameters; band half-widths from
/// the spread of the curves of `subsample` post-burn-in states.
template <class G>
PredictiveEnvelope predictive_envelope(const PosteriorChain& chain, const ParametricModel& model,
                                       std::span<const double> grid, std::size_t subsample, G& rng,
                                       BandMethod method = BandMethod::StdDev) {
  const auto post = chain.post_burn_in();
  if (subsample < 30) throw ConfigError("envelope subsample must be at least 30");
  if (post.size() < subsample)
    throw InsufficientSamplesError("envelope needs " + std::to_string(subsample) +
                                   " post-burn-in samples, chain has " + std::to_string(post.size()));
  std::vector<std::size_t> idx(post.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < subsample; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }

  PredictiveEnvelope env;
  env.x.assign(grid.begin(), grid.end());
  env.subsample = subsample;
  env.mean = model.evaluate(grid, posterior_mean(chain));

  std::vector<std::vector<double>> curves;
  curves.reserve(subsample);
  for (std::size_t i = 0; i < subsample; ++i) curves.push_back(model.evaluate(grid, post[idx[i]].state));

  for (auto& hw : env.half_width) hw.resize(grid.size());
  std::vector<double> column(subsample);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t s = 0; s < subsample; ++s) column[s] = curves[s][g];
    if (method == BandMethod::StdDev) {
      const double sd = sample_sd(column);
      for (int k = 0; k < 3; ++k) env.half_width[k][g] = (k + 1) * sd;
    } else {
      for (int k = 0; k < 3; ++k) {
        const double tail = normal::sf(static_cast<double>(k + 1));
        env.half_width[k][g] = 0.5 * (percentile(column, 1.0 - tail) - percentile(column, tail));
      }
      // Interpolation can leave ties slightly out of order.
      env.half_width[1][g] = std::max(env.half_width[1][g], env.half_width[0][g]);
      env.half_width[2][g] = std::max(env.half_width[2][g], env.half_width[1][g]);
    }
  }
  return env;
}

inline std::string envelope_to_csv(const PredictiveEnvelope& env) {
  std::string out = "x,mean,hw1,hw2,hw3\n";
  for (std::size_t i = 0; i < env.x.size(); ++i) {
    out += io::format_double(env.x[i]) + ',' + io::format_double(env.mean[i]);
    for (const auto& hw : env.half_width) out += ',' + io::format_double(hw[i]);
    out += '\n';
  }
  return out;
}

struct BvmFactor {
  double value = 0.0;
  // Set when the second evidence is zero and the first is not.
  bool decisive = false;
};

/// Ratio of two BVM evidences; above 1 favors the first model.
inline BvmFactor bvm_factor(double z1, double z2) {
  if (!(z1 >= 0.0) || !(z2 >= 0.0)) throw ValidationError("evidences must be nonnegative");
  if (z2 == 0.0) {
    if (z1 == 0.0) throw UndefinedComparisonError("both evidences are zero");
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {z1 / z2, false};
}

struct LeastSquaresOptions {
  std::size_t starts = 8;
  // Per-coordinate initial simplex edge; empty: 10% of |init| (0.1 for zeros).
  std::vector<double> initial_step;
  // Per-coordinate sd of the start jitter; empty: half the simplex edge.
  std::vector<double> jitter;
  std::size_t max_evaluations = 20000;
  double tolerance = 1e-14;
  std::uint64_t seed = 1;
};

struct LeastSquaresResult {
  std::vector<double> alpha;
  double objective = 0.0;
  std::size_t evaluations = 0;
  // Best objective after each simplex iteration of the winning start.
  std::vector<double> trace;
};

namespace detail {

struct SimplexRun {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> trace;
};

template <class F>
SimplexRun nelder_mead(F& f, std::vector<double> x0, std::span<const double> step, std::size_t& evals,
                       std::size_t max_evals, double tol) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts{x0};
  for (std::size_t i = 0; i < n; ++i) {
    auto p = x0;
    p[i] += step[i];
    pts.push_back(std::move(p));
  }
  std::vector<double> fv;
  for (const auto& p : pts) fv.push_back(f(p));
  evals += pts.size();

  SimplexRun run;
  std::vector<std::size_t> order(n + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    run.trace.push_back(fv[best]);

    double spread = 0.0;
    for (const auto& p : pts)
      for (std::size_t i = 0; i < n; ++i)
        spread = std::max(spread, std::abs(p[i] - pts[best][i]) / (std::abs(pts[best][i]) + 1e-12));
    if (std::isfinite(fv[worst]) && fv[worst] - fv[best] <= tol * (std::abs(fv[best]) + 1e-300) &&
        spread <= 1e-10)
      break;
    if (spread <= 1e-15) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k : order)
      if (k != worst)
        for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
      return p;
    };

    auto xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[best]) {
      auto xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        pts[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      pts[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      auto xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : fv[worst])) {
        pts[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        for (std::size_t k : order) {
          if (k == best) continue;
          for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
          fv[k] = f(pts[k]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  run.x = pts[static_cast<std::size_t>(it - fv.begin())];
  run.f = *it;
  run.trace.push_back(run.f);
  return run;
}

}  // namespace detail

/// Sum-of-squares fit of `model` to (x, y) by multi-start Nelder-Mead.
/// Start 0 is `init` itself; the others jitter it. Each start is polished by
/// one restart from its optimum.
inline LeastSquaresResult least_squares_fit(const ParametricModel& model, std::span<const double> x,
                                            std::span<const double> y, std::span<const double> init,
                                            const LeastSquaresOptions& opt = {}) {
  if (x.size() != y.size()) throw DimensionError("x and y differ in length");
  if (init.size() != model.dim())
    throw DimensionError("initial point has " + std::to_string(init.size()) + " entries, model '" +
                         model.name() + "' has " + std::to_string(model.dim()) + " parameters");
  if (opt.starts == 0) throw ConfigError("least squares needs at least one start");
  const std::size_t n = init.size();
  std::vector<double> step = opt.initial_step;
  if (step.empty())
    for (double v : init) step.push_back(v != 0.0 ? 0.1 * std::abs(v) : 0.1);
  std::vector<double> jitter = opt.jitter;
  if (jitter.empty())
    for (double s : step) jitter.push_back(0.5 * s);
  if (step.size() != n || jitter.size() != n) throw DimensionError("step/jitter size mismatch");

  auto objective = [&](std::span<const double> a) {
    const auto yhat = model.try_evaluate(x, a);
    if (!yhat) return std::numeric_limits<double>::infinity();
    double ss = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) ss += ((*yhat)[j] - y[j]) * ((*yhat)[j] - y[j]);
    return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
  };

  Rng rng = make_rng(opt.seed, 3);
  std::normal_distribution<double> z(0.0, 1.0);
  LeastSquaresResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::size_t evals = 0;
  const std::size_t budget = opt.max_evaluations;
  for (std::size_t s = 0; s < opt.starts; ++s) {
    std::vector<double> x0(init.begin(), init.end());
    if (s > 0)
      for (std::size_t i = 0; i < n; ++i) x0[i] += jitter[i] * z(rng);
    std::size_t used = 0;
    auto run = detail::nelder_mead(objective, x0, step, used, budget, opt.tolerance);
    if (std::isfinite(run.f)) {
      std::vector<double> small(n);
      for (std::size_t i = 0; i < n; ++i) small[i] = 0.1 * step[i];
      auto polish = detail::nelder_mead(objective, run.x, small, used, used + budget, opt.tolerance);
      if (polish.f <= run.f) {
        run.x = polish.x;
        run.f = polish.f;
        run.trace.insert(run.trace.end(), polish.trace.begin(), polish.trace.end());
      }
    }
    evals += used;
    if (run.f < best.objective) {
      best.alpha = run.x;
      best.objective = run.f;
      best.trace = std::move(run.trace);
    }
  }
  if (!std::isfinite(best.objective)) throw OptimizationError("least squares: every start failed");
  best.evaluations = evals;
  return best;
}

inline LeastSquaresResult least_squares_fit(const ParametricModel& model, const DataSet& data,
                                            std::span<const double> init, const LeastSquaresOptions& opt = {}) {
  const auto y = data.point_values();
  return least_squares_fit(model, data.x, y, init, opt);
}

}  // namespace bvm
