#pragma once

// Embedded reference datasets.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bvm/data.hpp"
#include "bvm/sampler.hpp"

namespace bvm::reference {

// Substrate concentration vs specific growth rate.
inline const std::vector<double> kMonodX{28, 55, 83, 110, 138, 225, 375};
inline const std::vector<double> kMonodY{0.053, 0.060, 0.112, 0.105, 0.099, 0.122, 0.125};

// Lap-joint loading force (lbf) vs dissipated energy per cycle (in-lbf).
inline const std::vector<double> kSmallwoodForce{60, 120, 180, 240, 320};
inline const std::vector<double> kSmallwoodEnergy{5.30e-5, 2.85e-4, 7.78e-4, 1.55e-3, 2.50e-3};

// Four unit-spaced points with alternating disjoint intervals; no straight
// line meets all four.
inline const std::vector<double> kMatrixX{0, 1, 2, 3};
inline const std::vector<double> kMatrixLow{0.0, 1.6, 0.6, 2.6};
inline const std::vector<double> kMatrixHigh{0.4, 2.0, 1.0, 3.0};
inline constexpr double kMatrixGaussianSd = 0.2;

inline constexpr std::size_t kToyPoints = 60;
inline constexpr double kToyEpistemicSd = 0.5;

inline DataSet monod_data() {
  std::vector<UncertainObservation> y;
  for (double v : kMonodY) y.push_back(UncertainObservation::certain(v));
  return make_dataset("monod", kMonodX, std::move(y));
}

inline DataSet smallwood_data() {
  std::vector<UncertainObservation> y;
  for (double v : kSmallwoodEnergy) y.push_back(UncertainObservation::certain(v));
  return make_dataset("smallwood", kSmallwoodForce, std::move(y));
}

// Noise-free part of the toy generator.
inline double toy_signal(double x) { return 1.0 + x * std::exp(-std::cos(10.0 * x)) + std::sin(10.0 * x); }

inline double toy_noise_sd(double x) { return x <= 1.5 ? 0.4 : 0.6; }

/// `points` evenly spaced inputs on [0, 3]; each output is the signal plus
/// heteroscedastic noise, wrapped as a Gaussian with the epistemic sd.
inline DataSet toy_data(std::uint64_t seed, std::size_t points = kToyPoints) {
  if (points < 2) throw ConfigError("toy dataset needs at least 2 points");
  Rng rng = make_rng(seed, 11);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x;
  std::vector<UncertainObservation> y;
  for (std::size_t i = 0; i < points; ++i) {
    const double xi = 3.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    x.push_back(xi);
    y.push_back(UncertainObservation::gaussian(toy_signal(xi) + toy_noise_sd(xi) * z(rng), kToyEpistemicSd));
  }
  return make_dataset("toy", std::move(x), std::move(y));
}

inline DataSet matrix_data(ObservationKind kind) {
  std::vector<UncertainObservation> y;
  for (std::size_t j = 0; j < kMatrixX.size(); ++j) {
    const double mid = 0.5 * (kMatrixLow[j] + kMatrixHigh[j]);
    switch (kind) {
      case ObservationKind::Gaussian: y.push_back(UncertainObservation::gaussian(mid, kMatrixGaussianSd)); break;
      case ObservationKind::Uniform: y.push_back(UncertainObservation::uniform(kMatrixLow[j], kMatrixHigh[j])); break;
      case ObservationKind::Certain: y.push_back(UncertainObservation::certain(mid)); break;
    }
  }
  return make_dataset("matrix_" + std::string(to_string(kind)), kMatrixX, std::move(y));
}

}  // namespace bvm::reference
