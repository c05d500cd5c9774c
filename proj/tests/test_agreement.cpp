#include <gtest/gtest.h>

#include <random>

#include "bvm/agreement.hpp"

using namespace bvm;

namespace {

// y = yhat + residuals, with yhat = 0.
bool on_residuals(const AgreementSpec& s, std::vector<double> r, std::optional<double> c = std::nullopt) {
  const std::vector<double> yhat(r.size(), 0.0);
  return eval_boolean(s, yhat, r, c);
}

}  // namespace

TEST(Agreement, EpsilonExamples) {
  EXPECT_TRUE(on_residuals(AgreementSpec::eps(1.0), {0.5, 0.9, 0.0}));
  EXPECT_FALSE(on_residuals(AgreementSpec::eps(1.0), {0.5, 1.5}));
  EXPECT_TRUE(on_residuals(AgreementSpec::eps(1.0), {1.0, -1.0}));
}

TEST(Agreement, PerPointEpsilon) {
  const auto s = AgreementSpec::eps(std::vector<double>{0.1, 2.0});
  EXPECT_TRUE(on_residuals(s, {0.05, 1.9}));
  EXPECT_FALSE(on_residuals(s, {0.2, 0.0}));
  EXPECT_THROW(on_residuals(s, {0.0, 0.0, 0.0}), DimensionError);
}

TEST(Agreement, GammaEpsilonEllExample) {
  EXPECT_TRUE(on_residuals(AgreementSpec::gamma_epsilon_ell(70.0, 1.0, 2.0), {0.5, 1.5, 0.5, 0.5}));
  EXPECT_FALSE(on_residuals(AgreementSpec::gamma_epsilon_ell(80.0, 1.0, 2.0), {0.5, 1.5, 0.5, 0.5}));
  EXPECT_FALSE(on_residuals(AgreementSpec::gamma_epsilon_ell(0.0, 1.0, 2.0), {0.5, 2.5}));
}

TEST(Agreement, MeanEpsilon) {
  EXPECT_TRUE(on_residuals(AgreementSpec::mean_eps(0.5), {0.0, 1.0}));
  EXPECT_FALSE(on_residuals(AgreementSpec::mean_eps(0.49), {0.0, 1.0}));
}

TEST(Agreement, CoverageRejectsFullCoverage) {
  const auto s = AgreementSpec::mean_eps_alpha(0.7);
  std::vector<double> r(10, 0.1);
  EXPECT_FALSE(on_residuals(s, r, 0.5));  // 10 of 10 covered
  std::vector<double> r100(100, 0.1);
  r100[0] = 0.6;
  r100[1] = 0.6;
  r100[2] = 0.6;
  r100[3] = 0.6;
  r100[4] = 0.6;
  EXPECT_TRUE(on_residuals(s, r100, 0.5));   // 95 of 100
  EXPECT_FALSE(on_residuals(s, r100, 0.05));  // 0 of 100
}

TEST(Agreement, ExactAndErrors) {
  EXPECT_TRUE(on_residuals(AgreementSpec::exact(), {0.0, 0.0}));
  EXPECT_FALSE(on_residuals(AgreementSpec::exact(), {0.0, 1e-300}));
  const std::vector<double> a{1.0, 2.0}, b{1.0};
  EXPECT_THROW(eval_boolean(AgreementSpec::eps(1.0), a, b), DimensionError);
  EXPECT_THROW(on_residuals(AgreementSpec::mean_eps_alpha(0.7), {0.1}), ConfigError);
  EXPECT_THROW(on_residuals(AgreementSpec::eps(1.0), {0.1}, 1.0), ConfigError);
  EXPECT_THROW(AgreementSpec::eps(-1.0), ConfigError);
  EXPECT_THROW(AgreementSpec::gamma_epsilon_ell(120.0, 1.0, 2.0), ConfigError);
  EXPECT_THROW(AgreementSpec::gamma_epsilon_ell(50.0, 1.0, 0.5), ConfigError);
}

TEST(Agreement, JsonRoundTrip) {
  for (const auto& s : {AgreementSpec::exact(), AgreementSpec::eps(0.03), AgreementSpec::eps({0.1, 0.2}),
                        AgreementSpec::gamma_epsilon_ell(70.0, 1.0, 2.0), AgreementSpec::mean_eps(0.4),
                        AgreementSpec::mean_eps_alpha(0.7)})
    EXPECT_EQ(agreement_from_json(to_json(s)), s);
  EXPECT_THROW(agreement_from_json(nlohmann::json::parse(R"({"kind":"epsilon","epsilon":1,"gamma":3})")),
               ConfigError);
  EXPECT_THROW(agreement_from_json(nlohmann::json::parse(R"({"kind":"wobbly"})")), ConfigError);
}

class AgreementProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{42};
  std::vector<double> draw(std::size_t n, double scale) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
  }
};

TEST_F(AgreementProperties, EpsilonMonotoneInTolerance) {
  for (int t = 0; t < 500; ++t) {
    const auto yhat = draw(5, 1.0), y = draw(5, 1.0);
    bool prev = false;
    for (double e = 0.0; e < 5.0; e += 0.05) {
      const bool now = eval_boolean(AgreementSpec::eps(e), yhat, y);
      ASSERT_TRUE(!prev || now);
      prev = now;
    }
  }
}

TEST_F(AgreementProperties, ZeroEpsilonIsExact) {
  for (int t = 0; t < 500; ++t) {
    auto yhat = draw(4, 1.0);
    auto y = (t % 2 == 0) ? yhat : draw(4, 1.0);
    if (t % 4 == 1) y[2] = yhat[2];
    EXPECT_EQ(eval_boolean(AgreementSpec::eps(0.0), yhat, y), eval_boolean(AgreementSpec::exact(), yhat, y));
  }
}

TEST_F(AgreementProperties, FullGammaUnitEllIsEpsilon) {
  for (int t = 0; t < 1000; ++t) {
    const auto yhat = draw(6, 1.0), y = draw(6, 1.0);
    const double e = std::abs(draw(1, 2.0)[0]);
    EXPECT_EQ(eval_boolean(AgreementSpec::gamma_epsilon_ell(100.0, e, 1.0), yhat, y),
              eval_boolean(AgreementSpec::eps(e), yhat, y));
  }
}

TEST_F(AgreementProperties, MeanEpsilonMonotone) {
  for (int t = 0; t < 500; ++t) {
    const auto yhat = draw(8, 1.0), y = draw(8, 1.0);
    bool prev = false;
    for (double e = 0.0; e < 3.0; e += 0.03) {
      const bool now = eval_boolean(AgreementSpec::mean_eps(e), yhat, y);
      ASSERT_TRUE(!prev || now);
      prev = now;
    }
  }
}
