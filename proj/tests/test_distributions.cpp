#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lbcp/distributions.hpp"
#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"
#include "oracles.hpp"

using namespace lbcp;

TEST(LogDensity, PoissonAtZero) { EXPECT_NEAR(log_density(DistributionSpec::poisson(3), 0), -3.0, 1e-14); }

TEST(LogDensity, GeometricAtZero) {
  EXPECT_NEAR(log_density(DistributionSpec::geometric(0.8), 0), std::log(0.8), 1e-14);
}

TEST(LogDensity, LogNormalAtMedian) {
  EXPECT_NEAR(log_density(DistributionSpec::lognormal(0, 1), 1), -0.5 * std::log(2 * std::numbers::pi), 1e-14);
}

TEST(LogDensity, OutsideSupportIsMinusInfinity) {
  EXPECT_EQ(log_density(DistributionSpec::poisson(2), -1), -kInf);
  EXPECT_EQ(log_density(DistributionSpec::poisson(2), 1.5), -kInf);
  EXPECT_EQ(log_density(DistributionSpec::gamma(2, 1), -0.1), -kInf);
  EXPECT_EQ(log_density(DistributionSpec::weibull(1, 2), -1), -kInf);
}

TEST(LogDensity, MatchesHandWrittenPmfs) {
  for (int x = 0; x < 30; ++x) {
    EXPECT_NEAR(log_density(DistributionSpec::poisson(4.5), x), oracle::poisson_log_pmf(4.5, x), 1e-12);
    EXPECT_NEAR(log_density(DistributionSpec::geometric(0.3), x), oracle::geometric_log_pmf(0.3, x), 1e-12);
  }
  for (double x : {-3.0, -0.5, 0.0, 1.0, 7.0}) {
    EXPECT_NEAR(log_density(DistributionSpec::student_t(5), x), oracle::student_t_log_pdf(5, x), 1e-12);
  }
}

TEST(Construction, InvalidParametersFailEagerly) {
  EXPECT_THROW(DistributionSpec::poisson(0), ParameterDomainError);
  EXPECT_THROW(DistributionSpec::geometric(1.5), ParameterDomainError);
  EXPECT_THROW(DistributionSpec::gamma(-1, 1), ParameterDomainError);
  EXPECT_THROW(DistributionSpec::lognormal(0, 0), ParameterDomainError);
  EXPECT_THROW(DistributionSpec::student_t(1), ParameterDomainError);
  EXPECT_THROW(DistributionSpec::student_t(2.5), ParameterDomainError);
  EXPECT_THROW(DistributionSpec::poisson(std::nan("")), ParameterDomainError);
}

TEST(Parsing, RoundTripAndCaseInsensitive) {
  const auto d = parse_distribution("Weibull:1.5,5");
  EXPECT_EQ(d, DistributionSpec::weibull(1.5, 5));
  EXPECT_EQ(parse_distribution(to_string(d)), d);
  EXPECT_EQ(parse_distribution("t:3"), DistributionSpec::student_t(3));
  EXPECT_THROW(parse_distribution("poisson"), std::invalid_argument);
  EXPECT_THROW(parse_distribution("cauchy:1"), std::invalid_argument);
  EXPECT_THROW(parse_distribution("gamma:1"), std::invalid_argument);
}

TEST(Sampling, PoissonMean) {
  Rng rng(7);
  const auto s = sample(DistributionSpec::poisson(3), 100000, rng);
  double m = 0;
  for (double v : s) m += v;
  EXPECT_NEAR(m / s.size(), 3.0, 0.02);
}

TEST(Sampling, GeometricMean) {
  Rng rng(8);
  const auto s = sample(DistributionSpec::geometric(0.8), 100000, rng);
  double m = 0;
  for (double v : s) m += v;
  EXPECT_NEAR(m / s.size(), 0.25, 0.01);
}

TEST(Sampling, StudentTMedian) {
  Rng rng(9);
  auto s = sample(DistributionSpec::student_t(3), 100000, rng);
  std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
  EXPECT_NEAR(s[s.size() / 2], 0.0, 0.02);
}

TEST(Sampling, SameSeedSameDraws) {
  Rng a(11), b(11);
  EXPECT_EQ(sample(DistributionSpec::weibull(2, 3), 50, a), sample(DistributionSpec::weibull(2, 3), 50, b));
}

// Empirical mean and variance within 4 standard errors of moments().
TEST(Sampling, MomentsWithinFourStandardErrors) {
  const std::vector<DistributionSpec> laws = {
      DistributionSpec::geometric(0.4), DistributionSpec::poisson(6),     DistributionSpec::gamma(3, 2),
      DistributionSpec::weibull(1.5, 5), DistributionSpec::lognormal(0.05, 16), DistributionSpec::student_t(9),
      DistributionSpec::normal(1, 2),   DistributionSpec::beta(2, 5)};
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    Rng rng = make_stream(2024, {i});
    const auto s = sample(laws[i], n, rng);
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (double v : s) m1 += v;
    m1 /= n;
    for (double v : s) {
      const double d = v - m1;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= n - 1;
    m4 /= n;
    const Moments mom = moments(laws[i]);
    ASSERT_TRUE(mom.variance.has_value());
    EXPECT_LE(std::abs(m1 - mom.mean), 4 * std::sqrt(*mom.variance / n)) << to_string(laws[i]);
    const double var_se = std::sqrt((m4 - m2 * m2) / n);
    EXPECT_LE(std::abs(m2 - *mom.variance), 4 * var_se) << to_string(laws[i]);
  }
}

TEST(Moments, LogNormalMeanUnderPrecision) {
  const auto d = DistributionSpec::lognormal(0.3, 4);
  EXPECT_NEAR(moments(d).mean, std::exp(0.3 + 1.0 / 8), 1e-12);
}

TEST(Moments, GammaScenarioTwo) {
  const Moments m = moments(DistributionSpec::gamma(10, 2));
  EXPECT_NEAR(m.mean, 5.0, 1e-12);
  EXPECT_NEAR(*m.variance, 2.5, 1e-12);
}

TEST(Moments, StudentTTwoHasNoVariance) {
  EXPECT_FALSE(moments(DistributionSpec::student_t(2)).variance.has_value());
  EXPECT_NEAR(*moments(DistributionSpec::student_t(4)).variance, 2.0, 1e-12);
}

TEST(MomentMatch, Gamma) {
  const auto d = moment_match(Family::Gamma, 5, 2.5);
  EXPECT_NEAR(d[0], 10, 1e-10);
  EXPECT_NEAR(d[1], 2, 1e-10);
}

TEST(MomentMatch, LogNormal) {
  const auto d = moment_match(Family::LogNormal, 5, 2.5);
  EXPECT_NEAR(d[0], std::log(5) - std::log(1.1) / 2, 1e-10);
  EXPECT_NEAR(d[1], 1 / std::log(1.1), 1e-8);
}

TEST(MomentMatch, WeibullAgainstBisection) {
  const double kappa = oracle::bisect(
      [](double k) { return std::exp(std::lgamma(1 + 2 / k) - 2 * std::lgamma(1 + 1 / k)) - 1.1; }, 0.1, 100);
  const double lambda = 5 / std::tgamma(1 + 1 / kappa);
  const auto d = moment_match(Family::Weibull, 5, 2.5);
  EXPECT_NEAR(d[1], kappa, 1e-8);
  EXPECT_NEAR(d[0], lambda, 1e-8);
}

TEST(MomentMatch, RoundTrip) {
  for (Family f : {Family::Gamma, Family::LogNormal, Family::Weibull}) {
    for (auto [m, v] : {std::pair{5.0, 2.5}, {0.3, 2.0}, {12.0, 0.5}, {1.0, 1.0}}) {
      const Moments got = moments(moment_match(f, m, v));
      EXPECT_NEAR(got.mean / m, 1.0, 1e-8) << family_name(f);
      EXPECT_NEAR(*got.variance / v, 1.0, 1e-8) << family_name(f);
    }
  }
}

TEST(MomentMatch, Infeasible) {
  EXPECT_THROW(moment_match(Family::Poisson, 5, 2.5), std::exception);
  EXPECT_THROW(moment_match(Family::Gamma, 5, -1), std::exception);
}

// Mass or density integrates to one over the support.
TEST(Normalisation, EveryFamily) {
  for (const auto& d : {DistributionSpec::geometric(0.35), DistributionSpec::poisson(7.5)}) {
    double s = 0;
    for (int x = 0; x < 2000; ++x) s += std::exp(log_density(d, x));
    EXPECT_NEAR(s, 1.0, 1e-8) << to_string(d);
  }
  const std::vector<DistributionSpec> positive = {DistributionSpec::gamma(3, 2), DistributionSpec::weibull(1.5, 5),
                                                  DistributionSpec::lognormal(0.05, 16),
                                                  DistributionSpec::gamma(0.7, 1.3)};
  for (const auto& d : positive) {
    // Substitution x = u^4 tames the Gamma(0.7) endpoint singularity.
    const double s = oracle::simpson(
        [&](double u) { return u <= 0 ? 0.0 : 4 * u * u * u * std::exp(log_density(d, u * u * u * u)); }, 0, 4,
        400000);
    EXPECT_NEAR(s, 1.0, 1e-8) << to_string(d);
  }
  for (const auto& d : {DistributionSpec::student_t(2), DistributionSpec::student_t(7), DistributionSpec::normal(1, 2)}) {
    // x = tan(theta) maps the real line to (-pi/2, pi/2).
    const double s = oracle::simpson(
        [&](double th) {
          const double c = std::cos(th);
          if (c <= 0) return 0.0;
          return std::exp(log_density(d, std::tan(th))) / (c * c);
        },
        -std::numbers::pi / 2, std::numbers::pi / 2, 400000);
    EXPECT_NEAR(s, 1.0, 1e-8) << to_string(d);
  }
  const double b = oracle::simpson(
      [](double x) { return x <= 0 || x >= 1 ? 0.0 : std::exp(log_density(DistributionSpec::beta(2, 5), x)); }, 0,
      1, 100000);
  EXPECT_NEAR(b, 1.0, 1e-8);
}

TEST(LogDensity, ContinuousInParameters) {
  const double h = 1e-6;
  const std::vector<std::pair<DistributionSpec, double>> cases = {
      {DistributionSpec::gamma(3, 2), 1.3}, {DistributionSpec::weibull(1.5, 5), 1.1},
      {DistributionSpec::lognormal(0.2, 3), 0.8}, {DistributionSpec::poisson(2.5), 3}};
  for (const auto& [d, x] : cases) {
    for (std::size_t k = 0; k < d.params().size(); ++k) {
      std::vector<double> up(d.params().begin(), d.params().end());
      std::vector<double> dn = up;
      up[k] += h;
      dn[k] -= h;
      const double a = log_density(DistributionSpec(d.family(), up), x);
      const double b = log_density(DistributionSpec(d.family(), dn), x);
      const double c = log_density(d, x);
      EXPECT_TRUE(std::isfinite(c));
      EXPECT_LT(std::abs(a - c), 1e-4) << to_string(d);
      EXPECT_LT(std::abs(b - c), 1e-4) << to_string(d);
      // Central second difference stays bounded: no kinks in the interior.
      EXPECT_LT(std::abs(a - 2 * c + b) / (h * h), 1e3) << to_string(d);
    }
  }
}
