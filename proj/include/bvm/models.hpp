#pragma once

// Parametric model abstraction and the built-in models.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bvm/errors.hpp"

namespace bvm {

struct ParameterInfo {
  std::string name;
  // Admissible closed range; values outside make the model undefined.
  std::optional<std::pair<double, double>> range;
};

/// A named deterministic map (x, alpha) -> y_hat.
class ParametricModel {
 public:
  using Function = std::function<double(double, std::span<const double>)>;

  ParametricModel(std::string name, std::vector<ParameterInfo> params, Function f)
      : name_(std::move(name)), params_(std::move(params)), f_(std::move(f)) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return params_.size(); }
  const std::vector<ParameterInfo>& parameters() const noexcept { return params_; }

  bool admissible(std::span<const double> alpha) const {
    if (alpha.size() < dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
      if (!std::isfinite(alpha[i])) return false;
      if (const auto& r = params_[i].range; r && (alpha[i] < r->first || alpha[i] > r->second))
        return false;
    }
    return true;
  }

  // Only the first dim() entries of alpha are read, so a chain state that
  // carries latent coordinates after the model parameters can be passed as is.
  double operator()(double x, std::span<const double> alpha) const {
    if (alpha.size() < dim())
      throw DimensionError(name_ + " expects " + std::to_string(dim()) + " parameters, got " +
                           std::to_string(alpha.size()));
    if (!admissible(alpha)) throw DomainError(name_ + ": parameters outside admissible range");
    return f_(x, alpha.first(dim()));
  }

  std::vector<double> evaluate(std::span<const double> xs, std::span<const double> alpha) const {
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back((*this)(x, alpha));
    return out;
  }

  // Like evaluate(), but returns nullopt if any output is undefined or non-finite.
  std::optional<std::vector<double>> try_evaluate(std::span<const double> xs,
                                                  std::span<const double> alpha) const {
    try {
      auto out = evaluate(xs, alpha);
      for (double v : out)
        if (!std::isfinite(v)) return std::nullopt;
      return out;
    } catch (const Error&) {
      return std::nullopt;
    }
  }

 private:
  std::string name_;
  std::vector<ParameterInfo> params_;
  Function f_;
};

// y = a1 x / (a2 + x)
inline double evaluate_monod(double a1, double a2, double x) {
  const double denom = a2 + x;
  if (denom == 0.0) throw EvaluationError("monod: a2 + x == 0");
  return a1 * x / denom;
}

// y = a1 + a2 x exp(-a3 cos(a4 x)) + a5 sin(a6 x)
inline double evaluate_toy(std::span<const double> a, double x) {
  if (a.size() != 6) throw DimensionError("toy model expects 6 parameters");
  return a[0] + a[1] * x * std::exp(-a[2] * std::cos(a[3] * x)) + a[4] * std::sin(a[5] * x);
}

/// Lap-joint parameters. k_n is in linear space here; the registered model
/// takes log10(k_n) as its coordinate.
struct SmallwoodParams {
  double m = 0.0;    // nonlinear exponent
  double k_n = 0.0;  // nonlinear stiffness, lbf/in
  double k = 0.0;    // linear stiffness, lbf/in
};

namespace detail {

inline double displacement_residual(double dz, double force, const SmallwoodParams& p) {
  return p.k * dz - p.k_n * std::pow(dz, p.m) - 2.0 * force;
}

inline double displacement_slope(double dz, const SmallwoodParams& p) {
  return p.k - p.k_n * p.m * std::pow(dz, p.m - 1.0);
}

}  // namespace detail

/// Smallest positive root of k dz - k_n dz^m = 2F.
///
/// The search starts from the bracket [1e-12, 10 (2F/k)], scanning it on a
/// geometric grid for the first sign change, and doubles the upper end (at most
/// 60 times) when none is found. The located bracket is narrowed by bisection
/// and polished with safeguarded Newton steps.
inline double solve_displacement(double force, const SmallwoodParams& p) {
  if (!(force > 0.0) || !std::isfinite(force)) throw DomainError("smallwood: force must be > 0");
  if (!(p.k > 0.0) || !std::isfinite(p.k)) throw DomainError("smallwood: k must be > 0");
  if (!std::isfinite(p.m) || !std::isfinite(p.k_n)) throw DomainError("smallwood: non-finite parameter");

  const auto g = [&](double z) { return detail::displacement_residual(z, force, p); };
  constexpr double kLow = 1e-12;
  constexpr int kScanPoints = 64;
  double seg_lo = kLow;
  double seg_hi = 10.0 * (2.0 * force / p.k);
  double lo = 0.0;
  double hi = 0.0;
  bool found = false;
  double g_prev = g(seg_lo);
  if (g_prev == 0.0) return seg_lo;
  for (int expansion = 0; expansion <= 60 && !found; ++expansion) {
    const double ratio = std::pow(seg_hi / seg_lo, 1.0 / kScanPoints);
    double z_prev = seg_lo;
    for (int i = 1; i <= kScanPoints; ++i) {
      const double z = (i == kScanPoints) ? seg_hi : z_prev * ratio;
      const double gz = g(z);
      if (!std::isfinite(gz)) break;
      if ((g_prev < 0.0) != (gz < 0.0) || gz == 0.0) {
        lo = z_prev;
        hi = z;
        found = true;
        break;
      }
      z_prev = z;
      g_prev = gz;
    }
    seg_lo = seg_hi;
    seg_hi *= 2.0;
  }
  if (!found) throw NoRootError(kLow, seg_lo);

  double g_lo = g(lo);
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = gm;
    } else {
      hi = mid;
    }
  }
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    const double slope = detail::displacement_slope(z, p);
    if (slope == 0.0 || !std::isfinite(slope)) break;
    const double next = z - g(z) / slope;
    if (!(next >= lo && next <= hi)) break;
    if (next == z) break;
    z = next;
  }
  return z;
}

// Energy dissipated per cycle: k_n ((m-1)/(m+1)) dz^(m+1).
inline double evaluate_smallwood(double force, const SmallwoodParams& p) {
  if (p.m == -1.0) throw EvaluationError("smallwood: m == -1 divides by zero");
  const double dz = solve_displacement(force, p);
  return p.k_n * ((p.m - 1.0) / (p.m + 1.0)) * std::pow(dz, p.m + 1.0);
}

inline ParametricModel monod_model() {
  return {"monod",
          {{"alpha1", std::nullopt}, {"alpha2", std::nullopt}},
          [](double x, std::span<const double> a) { return evaluate_monod(a[0], a[1], x); }};
}

inline ParametricModel toy_model() {
  return {"toy6",
          {{"alpha1", {}}, {"alpha2", {}}, {"alpha3", {}}, {"alpha4", {}}, {"alpha5", {}}, {"alpha6", {}}},
          [](double x, std::span<const double> a) { return evaluate_toy(a, x); }};
}

// Coordinates (m, log10 k_n, k).
inline ParametricModel smallwood_model() {
  return {"smallwood",
          {{"m", std::nullopt}, {"log10_kn", std::nullopt}, {"k", std::make_pair(0.0, std::numeric_limits<double>::infinity())}},
          [](double force, std::span<const double> a) {
            return evaluate_smallwood(force, SmallwoodParams{a[0], std::pow(10.0, a[1]), a[2]});
          }};
}

inline ParametricModel linear_model() {
  return {"linear",
          {{"slope", {}}, {"intercept", {}}},
          [](double x, std::span<const double> a) { return a[0] * x + a[1]; }};
}

inline ParametricModel proportional_model() {
  return {"proportional", {{"slope", {}}},
          [](double x, std::span<const double> a) { return a[0] * x; }};
}

inline ParametricModel constant_model() {
  return {"constant", {{"level", {}}}, [](double, std::span<const double> a) { return a[0]; }};
}

inline const std::map<std::string, ParametricModel (*)()>& model_registry() {
  static const std::map<std::string, ParametricModel (*)()> registry{
      {"monod", &monod_model},         {"toy6", &toy_model},
      {"smallwood", &smallwood_model}, {"linear", &linear_model},
      {"proportional", &proportional_model}, {"constant", &constant_model},
  };
  return registry;
}

inline ParametricModel make_model(const std::string& name) {
  const auto& reg = model_registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw ConfigError("unknown model '" + name + "'");
  return it->second();
}

}  // namespace bvm
