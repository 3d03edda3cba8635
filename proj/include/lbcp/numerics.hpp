#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace lbcp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(sum(exp(v))), stable; -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// log(n choose k) via lgamma; exact enough for n up to ~1e7.
double log_binomial(double n, double k);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {
inline constexpr unsigned kShallowDepth = 12;
inline constexpr unsigned kQuadratureDepth = 24;

template <class G>
QuadratureResult gauss_kronrod(G& g, double a, double b, double rel_tol, unsigned depth, double* l1) {
  QuadratureResult r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, depth, rel_tol, &r.error, l1);
  return r;
}

inline bool better(const QuadratureResult& a, const QuadratureResult& b) {
  return std::isfinite(a.value) && (!std::isfinite(b.value) || a.error < b.error);
}

/// Shallow adaptive Gauss-Kronrod on [a, b]; if its error estimate misses the
/// target, tanh-sinh (robust to endpoint singularities) and then deep
/// Gauss-Kronrod are tried, keeping the result with the smallest error.
template <class G>
QuadratureResult integrate_interval(G&& g, double a, double b, double rel_tol) {
  double l1 = 0.0;
  auto ok = [&](const QuadratureResult& r) {
    return std::isfinite(r.value) && r.error <= rel_tol * std::max(1.0, l1);
  };
  QuadratureResult best = gauss_kronrod(g, a, b, rel_tol, kShallowDepth, &l1);
  if (ok(best)) return best;
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  try {
    QuadratureResult alt;
    alt.value = ts.integrate(g, a, b, rel_tol, &alt.error, &l1);
    if (better(alt, best)) best = alt;
  } catch (const std::exception&) {
  }
  if (ok(best)) return best;
  const QuadratureResult deep = gauss_kronrod(g, a, b, rel_tol, kQuadratureDepth, &l1);
  return better(deep, best) ? deep : best;
}
}  // namespace detail

/// Integral of f over (0, inf) through x = scale * t / (1 - t).
template <class F>
QuadratureResult integrate_positive(F&& f, double scale, double rel_tol) {
  auto g = [&](double t) {
    const double u = 1.0 - t;
    if (u <= 0.0 || t <= 0.0) return 0.0;
    const double x = scale * t / u;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return std::isfinite(fx) ? fx * scale / (u * u) : fx;
  };
  return detail::integrate_interval(g, 0.0, 1.0, rel_tol);
}

/// Integral of f over the real line through x = center + scale * t / (1 - t^2).
template <class F>
QuadratureResult integrate_real(F&& f, double center, double scale, double rel_tol) {
  auto g = [&](double t) {
    const double u = 1.0 - t * t;
    if (u <= 0.0) return 0.0;
    const double x = center + scale * t / u;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return std::isfinite(fx) ? fx * scale * (1.0 + t * t) / (u * u) : fx;
  };
  return detail::integrate_interval(g, -1.0, 1.0, rel_tol);
}

/// Integral of f over (0, 1) (Beta support).
template <class F>
QuadratureResult integrate_unit(F&& f, double rel_tol) {
  auto g = [&](double x) { return x <= 0.0 || x >= 1.0 ? 0.0 : f(x); };
  return detail::integrate_interval(g, 0.0, 1.0, rel_tol);
}

struct NelderMeadConfig {
  double tolerance = 1e-8;   // simplex diameter
  int max_evaluations = 2000;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = kInf;
  int evaluations = 0;
  bool converged = false;
};

/// Downhill simplex minimisation with the standard reflection (1), expansion
/// (2), contraction (1/2) and shrink (1/2) coefficients. Non-finite objective
/// values are treated as +inf so the simplex backs away from them.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadConfig& config = {});

/// Summary statistics used by Monte Carlo estimators.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> values);

}  // namespace lbcp
