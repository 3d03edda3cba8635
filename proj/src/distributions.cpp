#include "lbcp/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"

namespace lbcp {

namespace {

constexpr std::string_view kGeometricNames[] = {"p"};
constexpr std::string_view kPoissonNames[] = {"rate"};
constexpr std::string_view kGammaNames[] = {"shape", "rate"};
constexpr std::string_view kWeibullNames[] = {"scale", "shape"};
constexpr std::string_view kLogNormalNames[] = {"mu", "tau"};
constexpr std::string_view kStudentTNames[] = {"nu"};
constexpr std::string_view kNormalNames[] = {"mu", "sd"};
constexpr std::string_view kBetaNames[] = {"a", "b"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_nonneg_integer(double x) { return x >= 0.0 && std::floor(x) == x && std::isfinite(x); }

void require(bool ok, const DistributionSpec& d, const char* what) {
  if (!ok) {
    throw ParameterDomainError(std::string(family_name(d.family())) + ": " + what);
  }
}

double parse_number(std::string_view text) {
  std::string buf(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  // Allow surrounding whitespace only.
  while (used < buf.size() && std::isspace(static_cast<unsigned char>(buf[used]))) ++used;
  if (used == 0 || used != buf.size()) {
    throw ParameterDomainError("not a number: '" + buf + "'");
  }
  return v;
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Geometric: return "geometric";
    case Family::Poisson: return "poisson";
    case Family::Gamma: return "gamma";
    case Family::Weibull: return "weibull";
    case Family::LogNormal: return "lognormal";
    case Family::StudentT: return "studentt";
    case Family::Normal: return "normal";
    case Family::Beta: return "beta";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  const std::string key = lower(name);
  if (key == "geometric" || key == "geom") return Family::Geometric;
  if (key == "poisson") return Family::Poisson;
  if (key == "gamma") return Family::Gamma;
  if (key == "weibull") return Family::Weibull;
  if (key == "lognormal" || key == "lognorm" || key == "log-normal") return Family::LogNormal;
  if (key == "studentt" || key == "student-t" || key == "t") return Family::StudentT;
  if (key == "normal") return Family::Normal;
  if (key == "beta") return Family::Beta;
  throw ParameterDomainError("unknown distribution family '" + std::string(name) + "'");
}

std::size_t arity(Family family) { return parameter_names(family).size(); }

std::span<const std::string_view> parameter_names(Family family) {
  switch (family) {
    case Family::Geometric: return kGeometricNames;
    case Family::Poisson: return kPoissonNames;
    case Family::Gamma: return kGammaNames;
    case Family::Weibull: return kWeibullNames;
    case Family::LogNormal: return kLogNormalNames;
    case Family::StudentT: return kStudentTNames;
    case Family::Normal: return kNormalNames;
    case Family::Beta: return kBetaNames;
  }
  return {};
}

Support support(Family family) {
  switch (family) {
    case Family::Geometric:
    case Family::Poisson: return Support::NonNegativeIntegers;
    case Family::Gamma:
    case Family::Weibull:
    case Family::LogNormal: return Support::PositiveReals;
    case Family::StudentT:
    case Family::Normal: return Support::RealLine;
    case Family::Beta: return Support::UnitInterval;
  }
  return Support::RealLine;
}

DistributionSpec::DistributionSpec(Family family, std::span<const double> params)
    : family_(family) {
  if (params.size() != arity(family)) {
    throw ParameterDomainError(std::string(family_name(family)) + " expects " +
                               std::to_string(arity(family)) + " parameter(s), got " +
                               std::to_string(params.size()));
  }
  std::copy(params.begin(), params.end(), params_.begin());
  for (double v : params) require(std::isfinite(v), *this, "parameters must be finite");
  const double a = params_[0];
  const double b = params_[1];
  switch (family) {
    case Family::Geometric: require(a > 0.0 && a < 1.0, *this, "p must lie in (0,1)"); break;
    case Family::Poisson: require(a > 0.0, *this, "rate must be positive"); break;
    case Family::Gamma: require(a > 0.0 && b > 0.0, *this, "shape and rate must be positive"); break;
    case Family::Weibull: require(a > 0.0 && b > 0.0, *this, "scale and shape must be positive"); break;
    case Family::LogNormal: require(b > 0.0, *this, "tau (precision) must be positive"); break;
    case Family::StudentT:
      require(a >= 2.0 && std::floor(a) == a, *this, "nu must be an integer >= 2");
      break;
    case Family::Normal: require(b > 0.0, *this, "sd must be positive"); break;
    case Family::Beta: require(a > 0.0 && b > 0.0, *this, "a and b must be positive"); break;
  }
}

DistributionSpec parse_distribution(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParameterDomainError("distribution literal must look like family:p1,p2 (got '" +
                               std::string(text) + "')");
  }
  const Family family = parse_family(text.substr(0, colon));
  std::vector<double> params;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    params.push_back(parse_number(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return DistributionSpec(family, params);
}

std::string to_string(const DistributionSpec& d) {
  std::ostringstream os;
  os.precision(10);
  os << family_name(d.family()) << ':';
  const auto p = d.params();
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  return os.str();
}

double log_density(const DistributionSpec& d, double x) {
  using std::log;
  const double a = d[0];
  const double b = d[1];
  switch (d.family()) {
    case Family::Geometric:
      if (!is_nonneg_integer(x)) return -kInf;
      return log(a) + x * std::log1p(-a);
    case Family::Poisson:
      if (!is_nonneg_integer(x)) return -kInf;
      return x * log(a) - a - std::lgamma(x + 1.0);
    case Family::Gamma:
      if (!(x > 0.0)) return -kInf;
      return a * log(b) - std::lgamma(a) + (a - 1.0) * log(x) - b * x;
    case Family::Weibull: {
      if (!(x > 0.0)) return -kInf;
      const double z = log(x) - log(a);
      return log(b) - log(a) + (b - 1.0) * z - std::exp(b * z);
    }
    case Family::LogNormal: {
      if (!(x > 0.0)) return -kInf;
      const double lx = log(x);
      return -lx + 0.5 * log(b / (2.0 * std::numbers::pi)) - 0.5 * b * (lx - a) * (lx - a);
    }
    case Family::StudentT:
      if (!std::isfinite(x)) return -kInf;
      return std::lgamma(0.5 * (a + 1.0)) - std::lgamma(0.5 * a) - 0.5 * log(a * std::numbers::pi) -
             0.5 * (a + 1.0) * std::log1p(x * x / a);
    case Family::Normal: {
      if (!std::isfinite(x)) return -kInf;
      const double z = (x - a) / b;
      return -0.5 * log(2.0 * std::numbers::pi) - log(b) - 0.5 * z * z;
    }
    case Family::Beta:
      if (!(x > 0.0 && x < 1.0)) return -kInf;
      return (a - 1.0) * log(x) + (b - 1.0) * std::log1p(-x) -
             (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  }
  return -kInf;
}

double draw(const DistributionSpec& d, Rng& rng) {
  const double a = d[0];
  const double b = d[1];
  switch (d.family()) {
    case Family::Geometric:
      return static_cast<double>(std::geometric_distribution<long long>(a)(rng));
    case Family::Poisson:
      return static_cast<double>(std::poisson_distribution<long long>(a)(rng));
    case Family::Gamma: return std::gamma_distribution<double>(a, 1.0 / b)(rng);
    case Family::Weibull: return std::weibull_distribution<double>(b, a)(rng);
    case Family::LogNormal: return std::lognormal_distribution<double>(a, 1.0 / std::sqrt(b))(rng);
    case Family::StudentT: return std::student_t_distribution<double>(a)(rng);
    case Family::Normal: return std::normal_distribution<double>(a, b)(rng);
    case Family::Beta: {
      const double x = std::gamma_distribution<double>(a, 1.0)(rng);
      const double y = std::gamma_distribution<double>(b, 1.0)(rng);
      return x / (x + y);
    }
  }
  return 0.0;
}

Sample sample(const DistributionSpec& d, std::size_t n, Rng& rng) {
  Sample out(n);
  for (auto& v : out) v = draw(d, rng);
  return out;
}

Moments moments(const DistributionSpec& d) {
  const double a = d[0];
  const double b = d[1];
  switch (d.family()) {
    case Family::Geometric: return {(1.0 - a) / a, (1.0 - a) / (a * a)};
    case Family::Poisson: return {a, a};
    case Family::Gamma: return {a / b, a / (b * b)};
    case Family::Weibull: {
      const double g1 = std::tgamma(1.0 + 1.0 / b);
      const double g2 = std::tgamma(1.0 + 2.0 / b);
      return {a * g1, a * a * (g2 - g1 * g1)};
    }
    case Family::LogNormal: {
      const double s2 = 1.0 / b;
      return {std::exp(a + 0.5 * s2), std::expm1(s2) * std::exp(2.0 * a + s2)};
    }
    case Family::StudentT:
      if (a > 2.0) return {0.0, a / (a - 2.0)};
      return {0.0, std::nullopt};
    case Family::Normal: return {a, b * b};
    case Family::Beta: return {a / (a + b), a * b / ((a + b) * (a + b) * (a + b + 1.0))};
  }
  return {};
}

DistributionSpec moment_match(Family family, double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0)) {
    throw InfeasibleError("moment_match needs positive mean and variance");
  }
  const double cv2 = variance / (mean * mean);
  switch (family) {
    case Family::Gamma: return DistributionSpec::gamma(mean * mean / variance, mean / variance);
    case Family::LogNormal: {
      const double s2 = std::log1p(cv2);
      return DistributionSpec::lognormal(std::log(mean) - 0.5 * s2, 1.0 / s2);
    }
    case Family::Weibull: {
      // log Gamma(1+2/k) - 2 log Gamma(1+1/k) is decreasing in k, from +inf to 0.
      const double target = std::log1p(cv2);
      auto f = [&](double log_k) {
        const double k = std::exp(log_k);
        return std::lgamma(1.0 + 2.0 / k) - 2.0 * std::lgamma(1.0 + 1.0 / k) - target;
      };
      const double lo = std::log(0.02);
      const double hi = std::log(1.0e4);
      if (f(lo) < 0.0 || f(hi) > 0.0) {
        throw InfeasibleError("no Weibull shape in [0.02, 1e4] matches the requested variance");
      }
      std::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      const auto [l, r] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
      const double k = std::exp(0.5 * (l + r));
      return DistributionSpec::weibull(mean / std::tgamma(1.0 + 1.0 / k), k);
    }
    default:
      throw InfeasibleError("moment_match supports gamma, lognormal and weibull only");
  }
}

bool has_log_functionals(Family family) {
  return family == Family::Gamma || family == Family::Weibull || family == Family::LogNormal;
}

double mean_log(const DistributionSpec& d) {
  switch (d.family()) {
    case Family::Gamma: return boost::math::digamma(d[0]) - std::log(d[1]);
    case Family::Weibull: return std::log(d[0]) - std::numbers::egamma / d[1];
    case Family::LogNormal: return d[0];
    default: throw DomainError("mean_log needs a positive continuous family");
  }
}

double var_log(const DistributionSpec& d) {
  switch (d.family()) {
    case Family::Gamma: return boost::math::trigamma(d[0]);
    case Family::Weibull: return std::numbers::pi * std::numbers::pi / (6.0 * d[1] * d[1]);
    case Family::LogNormal: return 1.0 / d[1];
    default: throw DomainError("var_log needs a positive continuous family");
  }
}

double power_moment(const DistributionSpec& d, double s) {
  switch (d.family()) {
    case Family::Gamma:
      if (!(d[0] + s > 0.0)) return kInf;
      return std::exp(std::lgamma(d[0] + s) - std::lgamma(d[0]) - s * std::log(d[1]));
    case Family::Weibull:
      if (!(1.0 + s / d[1] > 0.0)) return kInf;
      return std::exp(s * std::log(d[0]) + std::lgamma(1.0 + s / d[1]));
    case Family::LogNormal: return std::exp(s * d[0] + 0.5 * s * s / d[1]);
    default: throw DomainError("power_moment needs a positive continuous family");
  }
}

std::optional<double> entropy(const DistributionSpec& d) {
  using boost::math::digamma;
  const double a = d[0];
  const double b = d[1];
  switch (d.family()) {
    case Family::Geometric: return (-(1.0 - a) * std::log1p(-a) - a * std::log(a)) / a;
    case Family::Poisson: return std::nullopt;
    case Family::Gamma: return a - std::log(b) + std::lgamma(a) + (1.0 - a) * digamma(a);
    case Family::Weibull:
      return std::numbers::egamma * (1.0 - 1.0 / b) + std::log(a / b) + 1.0;
    case Family::LogNormal:
      return a + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e / b);
    case Family::StudentT:
      return 0.5 * (a + 1.0) * (digamma(0.5 * (a + 1.0)) - digamma(0.5 * a)) +
             0.5 * std::log(a) + std::log(boost::math::beta(0.5 * a, 0.5));
    case Family::Normal: return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * b * b);
    case Family::Beta:
      return std::log(boost::math::beta(a, b)) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
             (a + b - 2.0) * digamma(a + b);
  }
  return std::nullopt;
}

void validate_sample(Family family, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    bool ok = std::isfinite(x);
    switch (support(family)) {
      case Support::NonNegativeIntegers: ok = ok && is_nonneg_integer(x); break;
      case Support::PositiveReals: ok = ok && x > 0.0; break;
      case Support::UnitInterval: ok = ok && x > 0.0 && x < 1.0; break;
      case Support::RealLine: break;
    }
    if (!ok) {
      throw DataError("value " + std::to_string(x) + " at position " + std::to_string(i + 1) +
                      " is outside the support of " + std::string(family_name(family)));
    }
  }
}

}  // namespace lbcp
