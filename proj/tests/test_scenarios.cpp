#include <gtest/gtest.h>

#include <set>

#include "bvm/config.hpp"
#include "bvm/scenarios.hpp"

using namespace bvm;

TEST(Scenarios, MonodSetup) {
  const auto s = scenario_monod(7);
  const auto& c = s.config;
  EXPECT_EQ(c.dataset.size(), 7u);
  EXPECT_EQ(c.dataset.x.front(), 28.0);
  EXPECT_EQ(c.dataset.y.back().value(), 0.125);
  EXPECT_EQ(c.prior[0].center(), 0.17);
  EXPECT_EQ(c.prior[1].spread(), 3.0);
  EXPECT_EQ(c.kernel.kind(), KernelKind::BvmCertainEps);
  EXPECT_EQ(c.kernel.agreement(), AgreementSpec::eps(0.03));
  EXPECT_EQ(c.mcmc.iterations, 10000u);
  EXPECT_EQ(c.mcmc.seed, 7u);
  EXPECT_EQ(c.evidence_draws, 100000u);
  EXPECT_NO_THROW(c.check());
}

TEST(Scenarios, SmallwoodSetup) {
  const auto c = scenario_smallwood().config;
  EXPECT_EQ(c.dataset.size(), 5u);
  EXPECT_EQ(c.model, "smallwood");
  EXPECT_EQ(c.prior[2].center(), 1172700.0);
  EXPECT_EQ(c.mcmc.burn_in_fraction, 0.2);
  EXPECT_EQ(c.kernel.agreement(), AgreementSpec::eps(1e-3));
  EXPECT_NO_THROW(c.check());
}

TEST(Scenarios, ToySetup) {
  const auto c = scenario_toy(3).config;
  EXPECT_EQ(c.dataset.size(), reference::kToyPoints);
  EXPECT_EQ(c.kernel.latent_dim(), 1u);
  ASSERT_TRUE(c.latent_prior.has_value());
  EXPECT_EQ(c.full_prior().dim(), 7u);
  EXPECT_EQ(c.start, StartMode::LeastSquares);
  EXPECT_NO_THROW(c.check());
}

TEST(Scenarios, ToyDataDeterministicPerSeed) {
  EXPECT_EQ(reference::toy_data(4), reference::toy_data(4));
  EXPECT_NE(reference::toy_data(4), reference::toy_data(5));
  EXPECT_EQ(reference::toy_signal(0.0), 1.0);
  const auto d = reference::toy_data(1);
  EXPECT_EQ(d.x.front(), 0.0);
  EXPECT_EQ(d.x.back(), 3.0);
  for (const auto& y : d.y) EXPECT_EQ(y.sigma(), reference::kToyEpistemicSd);
}

TEST(Scenarios, MatrixPattern) {
  const auto m = scenario_matrix();
  ASSERT_EQ(m.size(), 9u);
  std::size_t successes = 0;
  for (const auto& c : m) {
    EXPECT_NO_THROW(c.scenario.config.check()) << c.scenario.name;
    successes += c.expect_success ? 1 : 0;
    if (c.method == MatrixMethod::Bvm) {
      EXPECT_TRUE(c.expect_success);
    }
    if (c.method == MatrixMethod::Classic) {
      EXPECT_EQ(c.expect_success, c.data_kind == ObservationKind::Gaussian);
    }
    for (const auto& y : c.scenario.config.dataset.y) EXPECT_EQ(y.kind(), c.data_kind);
  }
  EXPECT_EQ(successes, 6u);
}

TEST(Scenarios, LookupByName) {
  const auto names = scenario_names();
  EXPECT_EQ(names.size(), 12u);
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  for (const auto& n : names) EXPECT_EQ(find_scenario(n, 2).config.name, n);
  EXPECT_EQ(find_scenario("monod", 9).config.mcmc.seed, 9u);
  EXPECT_THROW(find_scenario("nope"), ConfigError);
}

TEST(Scenarios, SerializationRoundTrip) {
  for (const auto& n : scenario_names()) {
    const auto s = find_scenario(n);
    const auto j = to_json(s.config);
    const auto back = run_config_from_json(j);
    EXPECT_EQ(to_json(back), j) << n;
    EXPECT_EQ(back.dataset, s.config.dataset) << n;
  }
}

TEST(Expectations, Operators) {
  using Op = Expectation::Op;
  EXPECT_TRUE((Expectation{"a", Op::RelativeWithin, 100.0, 1e-3}).holds(100.09));
  EXPECT_FALSE((Expectation{"a", Op::RelativeWithin, 100.0, 1e-3}).holds(100.2));
  EXPECT_TRUE((Expectation{"a", Op::AbsoluteWithin, 0.93, 0.07}).holds(1.0));
  EXPECT_FALSE((Expectation{"a", Op::GreaterThan, 0.0}).holds(0.0));
  EXPECT_TRUE((Expectation{"a", Op::InRange, 0.91, 0.0, 0.99}).holds(0.95));
  EXPECT_FALSE((Expectation{"a", Op::InRange, 0.91, 0.0, 0.99}).holds(1.0));
  EXPECT_EQ((Expectation{"a", Op::InRange, 0.91, 0.0, 0.99}).describe(), "[0.91, 0.99]");
}
