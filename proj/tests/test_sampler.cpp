#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bvm/analysis.hpp"
#include "bvm/reference_data.hpp"
#include "bvm/sampler.hpp"
#include "oracles.hpp"

using namespace bvm;

namespace {

Prior monod_prior() {
  return Prior({PriorComponent::gaussian("alpha1", 0.17, 0.025), PriorComponent::gaussian("alpha2", 47.5, 3.0)});
}

// Mean and batch-means standard error of one coordinate after burn-in.
std::pair<double, double> batch_mean(const PosteriorChain& c, std::size_t coord, std::size_t batches = 50) {
  const auto post = c.post_burn_in();
  const std::size_t per = post.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += post[i].state[coord];
    means.push_back(s / static_cast<double>(per));
  }
  const double m = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches))};
}

}  // namespace

TEST(Prior, ComponentsAndJson) {
  const Prior p({PriorComponent::gaussian("a", 1.0, 2.0), PriorComponent::uniform("c", 0.0, 4.0)});
  EXPECT_EQ(p.center(), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(p.default_steps(), (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(p.log_density(std::vector<double>{1.0, 5.0}), kNegInf);
  EXPECT_NEAR(p.log_density(std::vector<double>{1.0, 1.0}),
              std::log(static_cast<double>(oracle::normal_pdf(1.0, 1.0, 2.0))) - std::log(4.0), 1e-14);
  EXPECT_EQ(prior_from_json(to_json(p)), p);
  EXPECT_THROW(prior_from_json(nlohmann::json::parse(R"([{"kind":"gaussian","mean":0,"sd":1,"low":2}])")),
               ConfigError);
  EXPECT_THROW(prior_from_json(nlohmann::json::parse(R"([{"kind":"gaussian","mean":0,"sd":0}])")), ConfigError);
  EXPECT_THROW(prior_from_json(nlohmann::json::parse(R"([{"kind":"uniform","low":1,"high":1}])")), ConfigError);
  EXPECT_THROW(prior_from_json(nlohmann::json::parse(R"([{"kind":"cauchy"}])")), ConfigError);
}

TEST(McmcConfig, Validation) {
  McmcConfig c;
  c.iterations = 0;
  EXPECT_THROW(c.check(2), ConfigError);
  c = {};
  c.burn_in_fraction = 1.0;
  EXPECT_THROW(c.check(2), ConfigError);
  c = {};
  c.proposal_scales = {1.0};
  EXPECT_THROW(c.check(2), DimensionError);
  c.proposal_scales = {1.0, -1.0};
  EXPECT_THROW(c.check(2), ConfigError);
  c = {};
  c.iterations = 5000;
  EXPECT_EQ(c.burn_in(), 500u);
}

TEST(Mcmc, FlatLikelihoodRecoversPrior) {
  const Prior prior({PriorComponent::gaussian("g", 1.0, 2.0), PriorComponent::uniform("u", -1.0, 3.0)});
  McmcConfig cfg;
  cfg.iterations = 100000;
  cfg.burn_in_fraction = 0.1;
  cfg.proposal_scales = {2.0, 1.0};
  cfg.seed = 17;
  const auto chain = run_mcmc(LikelihoodKernel(KernelKind::Flat), prior, linear_model(), reference::monod_data(), cfg);
  ASSERT_GE(chain.post_burn_in().size(), 10000u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto [m, se] = batch_mean(chain, i);
    EXPECT_LT(std::abs(m - prior[i].center()), 3.0 * se) << i << " mean " << m << " se " << se;
  }
}

TEST(Mcmc, MonodTightToleranceIsInfeasible) {
  McmcConfig cfg;
  cfg.iterations = 1000;
  try {
    run_mcmc(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.01)), monod_prior(), monod_model(),
             reference::monod_data(), cfg);
    FAIL() << "expected an infeasible start";
  } catch (const InfeasibleStartError& e) {
    EXPECT_GT(e.nearest_miss(), 0.01);
    EXPECT_LT(e.nearest_miss(), 0.05);
    EXPECT_EQ(e.best_state().size(), 2u);
  }
}

TEST(Mcmc, StartsAtPriorCenterWhenFeasible) {
  McmcConfig cfg;
  cfg.iterations = 200;
  cfg.seed = 3;
  const auto chain = run_mcmc(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03)), monod_prior(),
                              monod_model(), reference::monod_data(), cfg);
  EXPECT_EQ(chain.samples.size(), 200u);
  EXPECT_EQ(chain.proposed, 200u);
  EXPECT_EQ(chain.burn_in, 20u);
  // The first stored state is either the start or one step from it.
  const auto& first = chain.samples.front();
  if (!first.accepted) {
    EXPECT_EQ(first.state, monod_prior().center());
  }
}

TEST(Mcmc, PartialAnchorKeepsFixedCoordinatesOnSomeDraws) {
  // Likelihood is nonzero only for latent c in [1.9, 2.0]; the anchor fixes
  // the first coordinate, which must survive in the chosen start.
  const Prior prior({PriorComponent::gaussian("a", 0.0, 1.0), PriorComponent::uniform("c", 0.0, 2.0)});
  McmcConfig cfg;
  cfg.iterations = 10;
  cfg.start = {0.25};
  auto ll = [](std::span<const double> s) { return s[1] >= 1.9 ? 0.0 : kNegInf; };
  const auto chain = run_metropolis(ll, prior, cfg);
  const auto& s0 = chain.samples.front();
  if (!s0.accepted) {
    EXPECT_EQ(s0.state[0], 0.25);
  }
  EXPECT_GE(s0.state[1], 1.9);
}

// y = a x with Gaussian data and the Gaussian epsilon kernel; compares the
// chain histogram to a quadrature posterior on a 10^4-point grid.
TEST(Mcmc, OneDimensionalPosteriorMatchesQuadrature) {
  const std::vector<double> xs{0.5, 1.0, 1.5, 2.0, 2.5};
  const std::vector<double> means{1.1, 1.9, 3.2, 3.9, 5.1};
  const double sigma = 0.3, eps = 0.3, prior_mean = 1.5, prior_sd = 0.5;
  std::vector<UncertainObservation> y;
  for (double m : means) y.push_back(UncertainObservation::gaussian(m, sigma));
  const auto data = make_dataset("lin", xs, y);

  auto log_post = [&](long double a) {
    long double acc = std::log(oracle::normal_pdf(a, prior_mean, prior_sd));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const long double r = a * xs[j] - means[j];
      acc += std::log(oracle::normal_cdf((r + eps) / sigma) - oracle::normal_cdf((r - eps) / sigma));
    }
    return acc;
  };
  const int grid = 10000;
  const double lo = 1.2, hi = 2.8;
  std::vector<long double> w(grid);
  long double wmax = -1e300L;
  for (int i = 0; i < grid; ++i) wmax = std::max(wmax, log_post(lo + (i + 0.5) * (hi - lo) / grid));
  long double total = 0.0L;
  for (int i = 0; i < grid; ++i) total += w[i] = std::exp(log_post(lo + (i + 0.5) * (hi - lo) / grid) - wmax);
  // The window must hold essentially all posterior mass.
  ASSERT_LT(std::exp(log_post(lo) - wmax), 1e-12L);
  ASSERT_LT(std::exp(log_post(hi) - wmax), 1e-12L);

  McmcConfig cfg;
  cfg.iterations = 200000;
  cfg.proposal_scales = {0.1};
  cfg.seed = 23;
  const auto chain = run_mcmc(LikelihoodKernel(KernelKind::BvmGaussianEps, AgreementSpec::eps(eps)),
                              Prior({PriorComponent::gaussian("a", prior_mean, prior_sd)}), proportional_model(), data,
                              cfg);
  const int bins = 40;
  std::vector<double> hist(bins, 0.0), quad(bins, 0.0);
  const auto post = chain.post_burn_in();
  for (const auto& s : post) {
    const int b = static_cast<int>((s.state[0] - lo) / (hi - lo) * bins);
    if (b >= 0 && b < bins) hist[b] += 1.0 / static_cast<double>(post.size());
  }
  for (int i = 0; i < grid; ++i) quad[i * bins / grid] += static_cast<double>(w[i] / total);
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(hist[b] - quad[b]);
  EXPECT_LT(tv, 0.05);
}

TEST(Mcmc, TwoStateDetailedBalance) {
  // Uniform(0, 2) prior with likelihood 1 on [0, 1) and 3 on [1, 2]: the
  // stationary mass of the upper half is 3/4 and flows between halves balance.
  const Prior prior({PriorComponent::uniform("u", 0.0, 2.0)});
  McmcConfig cfg;
  cfg.iterations = 400000;
  cfg.burn_in_fraction = 0.0;
  cfg.proposal_scales = {0.6};
  cfg.seed = 5;
  auto ll = [](std::span<const double> s) { return s[0] >= 1.0 ? std::log(3.0) : 0.0; };
  const auto chain = run_metropolis(ll, prior, cfg);

  std::vector<double> upper;
  std::size_t up_to_low = 0, low_to_up = 0;
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    const bool u = chain.samples[i].state[0] >= 1.0;
    upper.push_back(u ? 1.0 : 0.0);
    if (i > 0) {
      const bool prev = chain.samples[i - 1].state[0] >= 1.0;
      up_to_low += (prev && !u) ? 1 : 0;
      low_to_up += (!prev && u) ? 1 : 0;
    }
  }
  const std::size_t batches = 100, per = upper.size() / batches;
  std::vector<double> bm;
  for (std::size_t b = 0; b < batches; ++b)
    bm.push_back(std::accumulate(upper.begin() + b * per, upper.begin() + (b + 1) * per, 0.0) / per);
  const double mass = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
  double ss = 0.0;
  for (double v : bm) ss += (v - mass) * (v - mass);
  const double se = std::sqrt(ss / (batches - 1) / batches);
  EXPECT_LT(std::abs(mass - 0.75), 3.0 * se) << mass << " +/- " << se;

  const double flows = static_cast<double>(up_to_low + low_to_up);
  EXPECT_LT(std::abs(static_cast<double>(up_to_low) - static_cast<double>(low_to_up)), 3.0 * std::sqrt(flows));
  EXPECT_GT(flows, 1000.0);
}

TEST(Mcmc, NeverAcceptsZeroLikelihood) {
  const Prior prior({PriorComponent::gaussian("a", 0.0, 1.0), PriorComponent::gaussian("b", 0.0, 1.0)});
  McmcConfig cfg;
  cfg.iterations = 20000;
  cfg.proposal_scales = {0.8, 0.8};
  auto ll = [](std::span<const double> s) { return (s[0] > 0.0 && s[1] < 0.5) ? -s[0] : kNegInf; };
  cfg.start = {0.5, 0.0};
  const auto chain = run_metropolis(ll, prior, cfg);
  for (const auto& s : chain.samples) {
    ASSERT_TRUE(std::isfinite(s.log_likelihood));
    ASSERT_GT(s.state[0], 0.0);
    ASSERT_LT(s.state[1], 0.5);
  }
  EXPECT_GT(chain.accepted, 0u);
  EXPECT_LT(chain.accepted, chain.proposed);
  EXPECT_GE(chain.acceptance_rate(), 0.0);
  EXPECT_LE(chain.acceptance_rate(), 1.0);
}

TEST(Mcmc, ReproducibleBitForBit) {
  McmcConfig cfg;
  cfg.iterations = 3000;
  cfg.seed = 99;
  const auto toy = reference::toy_data(4);
  const LikelihoodKernel k(KernelKind::BvmMonteCarlo, AgreementSpec::mean_eps_alpha(0.7));
  const Prior prior({PriorComponent::gaussian("a1", 1, 0.5), PriorComponent::gaussian("a2", 1, 0.5),
                     PriorComponent::gaussian("a3", 1, 0.5), PriorComponent::gaussian("a4", 10, 0.5),
                     PriorComponent::gaussian("a5", 1, 0.5), PriorComponent::gaussian("a6", 10, 0.5),
                     PriorComponent::uniform("c", 0, 2)});
  cfg.max_start_draws = 100000;
  const auto a = run_mcmc(k, prior, toy_model(), toy, cfg);
  const auto b = run_mcmc(k, prior, toy_model(), toy, cfg);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    ASSERT_EQ(a.samples[i].state, b.samples[i].state);
    ASSERT_EQ(std::bit_cast<std::uint64_t>(a.samples[i].log_likelihood),
              std::bit_cast<std::uint64_t>(b.samples[i].log_likelihood));
  }
  cfg.seed = 100;
  const auto c = run_mcmc(k, prior, toy_model(), toy, cfg);
  EXPECT_NE(a.samples.back().state, c.samples.back().state);
}

TEST(Mcmc, DimensionMismatch) {
  McmcConfig cfg;
  EXPECT_THROW(run_mcmc(LikelihoodKernel(KernelKind::Flat), monod_prior(), toy_model(), reference::toy_data(1), cfg),
               DimensionError);
  EXPECT_THROW(run_mcmc(LikelihoodKernel(KernelKind::ClassicGaussian), monod_prior(), monod_model(),
                        reference::monod_data(), cfg),
               KindMismatchError);
}

TEST(Evidence, TrivialKernels) {
  auto rng = make_rng(1, 2);
  const auto data = reference::monod_data();
  const auto one = estimate_evidence(LikelihoodKernel(KernelKind::Flat), monod_prior(), monod_model(), data, 1000, rng);
  EXPECT_EQ(one.value, 1.0);
  EXPECT_EQ(one.std_error, 0.0);
  const auto zero = estimate_evidence(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.0)),
                                      monod_prior(), monod_model(), data, 1000, rng);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_THROW(estimate_evidence(LikelihoodKernel(KernelKind::Flat), monod_prior(), monod_model(), data, 0, rng),
               ConfigError);
}

TEST(Evidence, BoundedBySampledLikelihoods) {
  const auto data = make_dataset("g", {1, 2, 3}, {UncertainObservation::gaussian(2, 0.5), UncertainObservation::gaussian(4, 0.5),
                                                  UncertainObservation::gaussian(6.5, 0.5)});
  const LikelihoodKernel k(KernelKind::BvmGaussianEps, AgreementSpec::eps(0.4));
  const auto model = proportional_model();
  const Prior prior({PriorComponent::gaussian("a", 2.0, 0.3)});
  double lo = 1.0, hi = 0.0;
  auto rng = make_rng(3, 2);
  const auto z = estimate_evidence_with(
      [&](std::span<const double> s, Rng& g) {
        const double l = k.likelihood(model, s, data, g);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
        return l;
      },
      prior, 5000, rng);
  EXPECT_GE(z.value, lo);
  EXPECT_LE(z.value, hi);
  EXPECT_GE(z.value, 0.0);
  EXPECT_LE(z.value, 1.0);
}

TEST(Evidence, MonodPositiveAndConsistentAcrossSeeds) {
  const LikelihoodKernel k(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03));
  std::vector<EvidenceEstimate> est;
  double pooled = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = make_rng(seed, 2);
    est.push_back(estimate_evidence(k, monod_prior(), monod_model(), reference::monod_data(), 100000, rng));
    EXPECT_GT(est.back().value, 0.0);
    pooled += est.back().value / 10.0;
  }
  for (const auto& e : est) EXPECT_LT(std::abs(e.value - pooled), 3.0 * e.std_error) << e.value;
}

TEST(Reliability, IndicatorKernelOnAcceptedStatesIsOne) {
  const LikelihoodKernel k(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03));
  McmcConfig cfg;
  cfg.iterations = 3000;
  const auto chain = run_mcmc(k, monod_prior(), monod_model(), reference::monod_data(), cfg);
  auto rng = make_rng(1, 5);
  EXPECT_EQ(reliability_score(k, chain, monod_model(), reference::monod_data(), 1000, rng), 1.0);
  EXPECT_THROW(reliability_score(k, chain, monod_model(), reference::monod_data(), 5000, rng),
               InsufficientSamplesError);
}

TEST(Reliability, GaussianKernelIsPosteriorAverage) {
  const auto data = make_dataset("g", {1, 2}, {UncertainObservation::gaussian(2, 0.5), UncertainObservation::gaussian(4, 0.5)});
  const LikelihoodKernel k(KernelKind::BvmGaussianEps, AgreementSpec::eps(0.4));
  McmcConfig cfg;
  cfg.iterations = 2000;
  const auto chain = run_mcmc(k, Prior({PriorComponent::gaussian("a", 2.0, 0.3)}), proportional_model(), data, cfg);
  // Subsampling every post-burn-in state gives the plain average.
  const auto post = chain.post_burn_in();
  double avg = 0.0;
  for (const auto& s : post) avg += std::exp(s.log_likelihood) / static_cast<double>(post.size());
  auto rng = make_rng(1, 5);
  EXPECT_NEAR(reliability_score(k, chain, proportional_model(), data, post.size(), rng), avg, 1e-12);
}

TEST(AutoTune, AllInfeasibleGridFails) {
  McmcConfig cfg;
  cfg.iterations = 2000;
  cfg.max_start_draws = 2000;
  const std::vector<double> grid{0.001, 0.005, 0.01};
  try {
    auto_tune_tolerance(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03)), monod_prior(),
                        monod_model(), reference::monod_data(), cfg, grid);
    FAIL() << "expected tuning failure";
  } catch (const TuningFailedError& e) {
    ASSERT_EQ(e.table().size(), 3u);
    for (const auto& row : e.table()) {
      EXPECT_FALSE(row.feasible);
      EXPECT_EQ(row.acceptance, 0.0);
    }
  }
}

// Pilot acceptance depends on the proposal scale; across 0.2 to 1 prior sd the
// choice is always 0.02 or 0.03.
TEST(AutoTune, MonodGridSelectsFeasibleTolerance) {
  const std::vector<double> grid{0.01, 0.02, 0.03};
  for (double scale : {0.2, 0.5, 1.0}) {
    McmcConfig cfg;
    cfg.iterations = 10000;
    cfg.proposal_scales = {0.025 * scale, 3.0 * scale};
    const auto r = auto_tune_tolerance(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03)),
                                       monod_prior(), monod_model(), reference::monod_data(), cfg, grid);
    EXPECT_TRUE(r.epsilon == 0.02 || r.epsilon == 0.03) << r.epsilon;
    ASSERT_EQ(r.table.size(), 3u);
    EXPECT_FALSE(r.table[0].feasible);
    for (std::size_t i = 1; i < r.table.size(); ++i)
      EXPECT_GE(r.table[i].mean_prior_likelihood, r.table[i - 1].mean_prior_likelihood);
  }
}

// With the small default steps every feasible tolerance mixes above the window.
TEST(AutoTune, DefaultStepsAcceptTooOften) {
  McmcConfig cfg;
  cfg.iterations = 10000;
  const std::vector<double> grid{0.01, 0.02, 0.03};
  try {
    auto_tune_tolerance(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03)), monod_prior(),
                        monod_model(), reference::monod_data(), cfg, grid);
    FAIL() << "expected tuning failure";
  } catch (const TuningFailedError& e) {
    EXPECT_FALSE(e.table()[0].feasible);
    EXPECT_GT(e.table()[1].acceptance, 0.5);
    EXPECT_GT(e.table()[2].acceptance, 0.5);
  }
}

TEST(AutoTune, RejectsUnsortedGrid) {
  const std::vector<double> grid{0.03, 0.02};
  EXPECT_THROW(auto_tune_tolerance(LikelihoodKernel(KernelKind::BvmCertainEps, AgreementSpec::eps(0.03)),
                                   monod_prior(), monod_model(), reference::monod_data(), McmcConfig{}, grid),
               ConfigError);
}
