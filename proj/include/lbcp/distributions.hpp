#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lbcp/rng.hpp"

namespace lbcp {

/// Sampling families. Normal and Beta only appear as priors on parameters.
enum class Family { Geometric, Poisson, Gamma, Weibull, LogNormal, StudentT, Normal, Beta };

enum class Support { NonNegativeIntegers, PositiveReals, RealLine, UnitInterval };

std::string_view family_name(Family family);
/// Case-insensitive; accepts "t" and "lognorm" as aliases.
Family parse_family(std::string_view name);
std::size_t arity(Family family);
/// Parameter names in the order they are stored (used by the config schema).
std::span<const std::string_view> parameter_names(Family family);
Support support(Family family);
inline bool is_discrete(Family family) { return support(family) == Support::NonNegativeIntegers; }

/// A family tag plus its parameters, validated at construction.
///
/// Parameter conventions:
///   Geometric(p)            mass p (1-p)^x on x = 0, 1, 2, ...
///   Poisson(rate)
///   Gamma(shape, rate)
///   Weibull(scale, shape)
///   LogNormal(mu, tau)      tau is the precision of log X (log-variance 1/tau)
///   StudentT(nu)            standard t, integer nu >= 2
///   Normal(mu, sd)
///   Beta(a, b)
class DistributionSpec {
public:
  DistributionSpec(Family family, std::span<const double> params);
  DistributionSpec(Family family, std::initializer_list<double> params)
      : DistributionSpec(family, std::span<const double>(params.begin(), params.size())) {}

  static DistributionSpec geometric(double p) { return {Family::Geometric, {p}}; }
  static DistributionSpec poisson(double rate) { return {Family::Poisson, {rate}}; }
  static DistributionSpec gamma(double shape, double rate) { return {Family::Gamma, {shape, rate}}; }
  static DistributionSpec weibull(double scale, double shape) {
    return {Family::Weibull, {scale, shape}};
  }
  static DistributionSpec lognormal(double mu, double tau) { return {Family::LogNormal, {mu, tau}}; }
  static DistributionSpec student_t(double nu) { return {Family::StudentT, {nu}}; }
  static DistributionSpec normal(double mu, double sd) { return {Family::Normal, {mu, sd}}; }
  static DistributionSpec beta(double a, double b) { return {Family::Beta, {a, b}}; }

  Family family() const noexcept { return family_; }
  std::span<const double> params() const noexcept { return {params_.data(), arity(family_)}; }
  double operator[](std::size_t i) const { return params_[i]; }

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

private:
  Family family_;
  std::array<double, 2> params_{};
};

/// Observed values in order. Discrete families hold non-negative integers.
using Sample = std::vector<double>;

/// "family:p1,p2", e.g. "poisson:3" or "weibull:1.5,5".
DistributionSpec parse_distribution(std::string_view text);
std::string to_string(const DistributionSpec& d);

/// Natural-log density (or mass). -inf outside the support.
double log_density(const DistributionSpec& d, double x);

Sample sample(const DistributionSpec& d, std::size_t n, Rng& rng);
double draw(const DistributionSpec& d, Rng& rng);

struct Moments {
  double mean = 0.0;
  std::optional<double> variance;  // empty when the variance is undefined (StudentT nu = 2)
};
Moments moments(const DistributionSpec& d);

/// Parameters of `family` reproducing (mean, variance). Supports Gamma,
/// LogNormal and Weibull; throws InfeasibleError when no member matches.
DistributionSpec moment_match(Family family, double mean, double variance);

/// Log-scale functionals for the positive continuous families (Gamma, Weibull,
/// LogNormal). These back the closed-form KL table and the analytic infima.
double mean_log(const DistributionSpec& d);
double var_log(const DistributionSpec& d);
/// E[X^s]; requires s > -shape for Gamma/Weibull.
double power_moment(const DistributionSpec& d, double s);
/// Differential (or Shannon, for discrete families with closed forms) entropy.
std::optional<double> entropy(const DistributionSpec& d);
bool has_log_functionals(Family family);

/// Checks that every value lies in the family's support.
void validate_sample(Family family, std::span<const double> values);

}  // namespace lbcp
