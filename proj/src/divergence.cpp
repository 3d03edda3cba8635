#include "lbcp/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"

namespace lbcp {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool support_within(Support inner, Support outer) {
  if (inner == outer) return true;
  switch (inner) {
    case Support::PositiveReals: return outer == Support::RealLine;
    case Support::UnitInterval: return outer == Support::PositiveReals || outer == Support::RealLine;
    default: return false;
  }
}

double log_power_moment(const DistributionSpec& d, double s) {
  switch (d.family()) {
    case Family::Gamma: return std::lgamma(d[0] + s) - std::lgamma(d[0]) - s * std::log(d[1]);
    case Family::Weibull: return s * std::log(d[0]) + std::lgamma(1.0 + s / d[1]);
    case Family::LogNormal: return s * d[0] + 0.5 * s * s / d[1];
    default: return std::log(power_moment(d, s));
  }
}

// E_p[log q] for p and q both in {Gamma, Weibull, LogNormal}.
double expected_log_density(const DistributionSpec& p, const DistributionSpec& q) {
  const double el = mean_log(p);
  switch (q.family()) {
    case Family::Gamma: {
      const double a = q[0], b = q[1];
      return a * std::log(b) - std::lgamma(a) + (a - 1.0) * el - b * power_moment(p, 1.0);
    }
    case Family::Weibull: {
      const double lam = q[0], k = q[1];
      return std::log(k) - k * std::log(lam) + (k - 1.0) * el -
             std::exp(log_power_moment(p, k) - k * std::log(lam));
    }
    case Family::LogNormal: {
      const double mu = q[0], tau = q[1];
      const double dev = el - mu;
      return -el + 0.5 * std::log(tau / (2.0 * std::numbers::pi)) -
             0.5 * tau * (var_log(p) + dev * dev);
    }
    default: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// log-mass coefficients: log f(y) = a + b*y + c*log(y!)
struct DiscreteForm {
  double a, b, c;
};

DiscreteForm discrete_form(const DistributionSpec& d) {
  if (d.family() == Family::Poisson) return {-d[0], std::log(d[0]), -1.0};
  return {std::log(d[0]), std::log1p(-d[0]), 0.0};
}

// Upper bound on p(y+1)/p(y) for all y >= x.
double discrete_ratio_bound(const DistributionSpec& d, double x) {
  if (d.family() == Family::Poisson) return d[0] / (x + 1.0);
  return 1.0 - d[0];
}

double discrete_mean(const DistributionSpec& d) { return moments(d).mean; }

KlResult truncated_sum_kl(const DistributionSpec& p, const DistributionSpec& q, double tol) {
  const DiscreteForm fp = discrete_form(p);
  const DiscreteForm fq = discrete_form(q);
  const double da = std::abs(fp.a - fq.a);
  const double db = std::abs(fp.b - fq.b);
  const double dc = std::abs(fp.c - fq.c);
  const double start_checks = std::max(3.0, std::ceil(discrete_mean(p)));
  double sum = 0.0, abs_sum = 0.0;
  for (double x = 0.0;; x += 1.0) {
    const double lp = log_density(p, x);
    const double lq = log_density(q, x);
    const double px = std::exp(lp);
    const double term = px * (lp - lq);
    sum += term;
    abs_sum += std::abs(term);
    if (x < start_checks) continue;
    // For y >= x: p(y) <= p(x) rho^(y-x) and |log p - log q| <= g(y) with
    // g(y) = da + db*y + dc*y*log(y) increasing and g(y) <= g(x) (y/x)^2.
    // The tail is then at most p(x) g(x) [(1+rho)/(1-rho)^3 - 1].
    const double rho = discrete_ratio_bound(p, x);
    if (rho >= 0.999) continue;
    const double g = da + db * x + dc * x * std::log(x);
    const double tail = px * g * ((1.0 + rho) / std::pow(1.0 - rho, 3) - 1.0);
    const double mass_tail = px * rho / (1.0 - rho);
    if (tail < 0.1 * tol && mass_tail < 0.1 * tol) {
      KlResult r;
      r.value = std::max(0.0, sum);
      r.method = KlMethod::TruncatedSum;
      r.error_bound = tail + 4.0 * kEps * x * abs_sum;
      return r;
    }
    if (x > 1e7) throw AccuracyError("truncated KL sum did not reach its tail bound", tail);
  }
}

struct Domain {
  Support support;
  double center;
  double scale;
  bool log_scale = false;
};

Domain quadrature_domain(const DistributionSpec& d) {
  switch (support(d.family())) {
    case Support::PositiveReals: {
      // On u = ln x the families with log moments are smooth with light tails,
      // even when the density is unbounded at the origin.
      if (has_log_functionals(d.family())) {
        return {Support::PositiveReals, mean_log(d), std::sqrt(var_log(d)), true};
      }
      return {Support::PositiveReals, 0.0, moments(d).mean};
    }
    case Support::RealLine: {
      const Moments m = moments(d);
      const double s = m.variance && *m.variance > 0.0 ? std::sqrt(*m.variance) : 1.0;
      return {Support::RealLine, m.mean, s};
    }
    default: return {Support::UnitInterval, 0.0, 1.0};
  }
}

template <class F>
QuadratureResult integrate_on(const Domain& dom, F&& f, double rel_tol) {
  switch (dom.support) {
    case Support::PositiveReals:
      if (dom.log_scale) {
        auto h = [&](double u) {
          const double x = std::exp(u);
          if (x <= 0.0 || !std::isfinite(x)) return 0.0;
          const double fx = f(x);
          return fx == 0.0 ? 0.0 : fx * x;
        };
        return integrate_real(h, dom.center, dom.scale, rel_tol);
      }
      return integrate_positive(f, dom.scale, rel_tol);
    case Support::RealLine: return integrate_real(f, dom.center, dom.scale, rel_tol);
    default: return integrate_unit(f, rel_tol);
  }
}

KlResult quadrature_kl(const DistributionSpec& p, const DistributionSpec& q, double tol) {
  bool infinite = false;
  auto integrand = [&](double x) {
    const double lp = log_density(p, x);
    const double w = std::exp(lp);
    if (w == 0.0) return 0.0;
    const double lq = log_density(q, x);
    if (lq == -kInf) {
      infinite = true;
      return 0.0;
    }
    return w * (lp - lq);
  };
  // The quadrature tolerance is relative to the integral's L1 norm; tighten it
  // until the absolute target holds or the floor is reached.
  const Domain dom = quadrature_domain(p);
  double rel_tol = std::max(0.25 * tol, 1e-14);
  QuadratureResult r = integrate_on(dom, integrand, rel_tol);
  for (int attempt = 0; attempt < 4 && !infinite && std::isfinite(r.value) && r.error > tol && rel_tol > 1e-15;
       ++attempt) {
    rel_tol = std::max(1e-15, rel_tol * 0.25 * tol / r.error);
    const QuadratureResult retry = integrate_on(dom, integrand, rel_tol);
    if (std::isfinite(retry.value) && retry.error < r.error) r = retry;
  }
  if (infinite) return {kInf, KlMethod::Quadrature, 0.0};
  if (!std::isfinite(r.value) || r.error > tol) {
    throw AccuracyError("KL quadrature for " + to_string(p) + " || " + to_string(q) +
                            " did not reach the requested tolerance",
                        r.error);
  }
  return {std::max(0.0, r.value), KlMethod::Quadrature, r.error};
}

}  // namespace

std::string_view method_name(KlMethod method) {
  switch (method) {
    case KlMethod::ClosedForm: return "closed_form";
    case KlMethod::Quadrature: return "quadrature";
    case KlMethod::TruncatedSum: return "truncated_sum";
  }
  return "unknown";
}

KlRoute parse_kl_route(std::string_view text) {
  if (text == "auto") return KlRoute::Auto;
  if (text == "closed") return KlRoute::Closed;
  if (text == "numeric") return KlRoute::Numeric;
  throw DomainError("method must be auto, closed or numeric (got '" + std::string(text) + "')");
}

bool has_closed_form(Family p, Family q) {
  if (p == q) return p != Family::StudentT;
  return has_log_functionals(p) && has_log_functionals(q);
}

std::optional<double> closed_form_kl(const DistributionSpec& p, const DistributionSpec& q) {
  if (!has_closed_form(p.family(), q.family())) return std::nullopt;
  if (p == q) return 0.0;
  using boost::math::digamma;
  double v = 0.0;
  if (has_log_functionals(p.family()) && has_log_functionals(q.family())) {
    v = -*entropy(p) - expected_log_density(p, q);
  } else {
    const double a1 = p[0], b1 = p[1], a2 = q[0], b2 = q[1];
    switch (p.family()) {
      case Family::Poisson: v = a2 - a1 + a1 * std::log(a1 / a2); break;
      case Family::Geometric:
        v = std::log(a1 / a2) + (1.0 - a1) / a1 * (std::log1p(-a1) - std::log1p(-a2));
        break;
      case Family::Normal: {
        const double dm = a1 - a2;
        v = std::log(b2 / b1) + (b1 * b1 + dm * dm) / (2.0 * b2 * b2) - 0.5;
        break;
      }
      case Family::Beta:
        v = std::log(boost::math::beta(a2, b2)) - std::log(boost::math::beta(a1, b1)) +
            (a1 - a2) * digamma(a1) + (b1 - b2) * digamma(b1) +
            (a2 - a1 + b2 - b1) * digamma(a1 + b1);
        break;
      default: return std::nullopt;
    }
  }
  return std::max(0.0, v);
}

KlResult kl(const DistributionSpec& p, const DistributionSpec& q, double tol, KlRoute route) {
  if (!(tol > 0.0)) throw DomainError("kl tolerance must be positive");
  const Support sp = support(p.family());
  const Support sq = support(q.family());
  if (!support_within(sp, sq)) {
    return {kInf, is_discrete(p.family()) ? KlMethod::TruncatedSum : KlMethod::Quadrature, 0.0};
  }
  if (route != KlRoute::Numeric) {
    if (auto v = closed_form_kl(p, q)) return {*v, KlMethod::ClosedForm, 0.0};
    if (route == KlRoute::Closed) {
      throw UnsupportedPairError("no closed-form KL for " + std::string(family_name(p.family())) +
                                 " || " + std::string(family_name(q.family())));
    }
  }
  if (sp == Support::NonNegativeIntegers) return truncated_sum_kl(p, q, tol);
  return quadrature_kl(p, q, tol);
}

double hellinger(const DistributionSpec& p, const DistributionSpec& q, double tol) {
  if (!(tol > 0.0)) throw DomainError("hellinger tolerance must be positive");
  if (p == q) return 0.0;
  const Support sp = support(p.family());
  const Support sq = support(q.family());
  const bool p_in_q = support_within(sp, sq);
  const bool q_in_p = support_within(sq, sp);
  if (!p_in_q && !q_in_p) return 1.0;
  // Bhattacharyya coefficient; an error e in it moves H by about e / (2H).
  const double bc_tol = std::max(tol * tol, 1e-15);
  double bc = 0.0;
  if (sp == Support::NonNegativeIntegers) {
    const double start = std::max({3.0, discrete_mean(p), discrete_mean(q)});
    for (double x = 0.0;; x += 1.0) {
      const double lp = log_density(p, x);
      const double lq = log_density(q, x);
      bc += std::exp(0.5 * (lp + lq));
      if (x < start) continue;
      const double rp = discrete_ratio_bound(p, x);
      const double rq = discrete_ratio_bound(q, x);
      if (rp >= 0.999 || rq >= 0.999) continue;
      // Cauchy-Schwarz: tail of sqrt(pq) <= sqrt(tail_p * tail_q) <= max of the tails.
      const double tail = std::max(std::exp(lp) * rp / (1.0 - rp), std::exp(lq) * rq / (1.0 - rq));
      if (tail < 0.1 * bc_tol) break;
      if (x > 1e7) throw AccuracyError("Hellinger sum did not converge", tail);
    }
  } else {
    const DistributionSpec& inner = p_in_q ? p : q;
    auto integrand = [&](double x) {
      const double lp = log_density(p, x);
      const double lq = log_density(q, x);
      if (lp == -kInf || lq == -kInf) return 0.0;
      return std::exp(0.5 * (lp + lq));
    };
    const QuadratureResult r = integrate_on(quadrature_domain(inner), integrand, 1e-14);
    const double h = std::sqrt(std::clamp(1.0 - r.value, 0.0, 1.0));
    const double h_error = h > std::sqrt(r.error) ? r.error / (2.0 * h) : std::sqrt(r.error);
    if (!std::isfinite(r.value) || h_error > tol) {
      throw AccuracyError("Hellinger quadrature did not reach the requested tolerance", h_error);
    }
    bc = r.value;
  }
  return std::sqrt(std::clamp(1.0 - bc, 0.0, 1.0));
}

double min_kl_direction_pair(const DistributionSpec& p, const DistributionSpec& q, double tol) {
  return std::min(kl(p, q, tol).value, kl(q, p, tol).value);
}

namespace {

// Unconstrained coordinates for Nelder-Mead.
enum class Transform { Identity, Log, Logit };

std::vector<Transform> transforms(Family f) {
  switch (f) {
    case Family::Geometric: return {Transform::Logit};
    case Family::LogNormal:
    case Family::Normal: return {Transform::Identity, Transform::Log};
    default: return std::vector<Transform>(arity(f), Transform::Log);
  }
}

double to_param(Transform t, double u) {
  switch (t) {
    case Transform::Identity: return u;
    case Transform::Log: return std::exp(u);
    case Transform::Logit: return 1.0 / (1.0 + std::exp(-u));
  }
  return u;
}

double to_coord(Transform t, double v) {
  switch (t) {
    case Transform::Identity: return v;
    case Transform::Log: return std::log(v);
    case Transform::Logit: return std::log(v / (1.0 - v));
  }
  return v;
}

double directed(const DistributionSpec& p, const DistributionSpec& q, Direction dir, double tol) {
  return dir == Direction::PToQ ? kl(p, q, tol).value : kl(q, p, tol).value;
}

std::optional<DistributionSpec> analytic_minimizer(const DistributionSpec& p, Family qf) {
  const Family pf = p.family();
  if (qf == Family::LogNormal && has_log_functionals(pf)) {
    return DistributionSpec::lognormal(mean_log(p), 1.0 / var_log(p));
  }
  if (qf == Family::Gamma && has_log_functionals(pf)) {
    const double mean = power_moment(p, 1.0);
    const double c = std::log(mean) - mean_log(p);  // > 0 by Jensen
    auto f = [c](double log_a) {
      const double a = std::exp(log_a);
      return std::log(a) - boost::math::digamma(a) - c;
    };
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(50);
    const auto [l, r] = boost::math::tools::toms748_solve(f, std::log(1e-10), std::log(1e12), tol, iters);
    const double a = std::exp(0.5 * (l + r));
    return DistributionSpec::gamma(a, a / mean);
  }
  if (qf == Family::Weibull && has_log_functionals(pf)) {
    // Profile out the scale (lambda^k = E[X^k]) and minimise the convex remainder in k.
    const double el = mean_log(p);
    auto g = [&](double log_k) {
      const double k = std::exp(log_k);
      return log_power_moment(p, k) - log_k - (k - 1.0) * el;
    };
    const auto best = boost::math::tools::brent_find_minima(g, std::log(1e-3), std::log(1e3), 50);
    const double k = std::exp(best.first);
    return DistributionSpec::weibull(std::exp(log_power_moment(p, k) / k), k);
  }
  if (is_discrete(pf) && qf == Family::Poisson) return DistributionSpec::poisson(moments(p).mean);
  if (is_discrete(pf) && qf == Family::Geometric) {
    return DistributionSpec::geometric(1.0 / (1.0 + moments(p).mean));
  }
  if (qf == Family::Normal && support_within(support(pf), Support::RealLine) && !is_discrete(pf)) {
    const Moments m = moments(p);
    if (!m.variance) return std::nullopt;
    return DistributionSpec::normal(m.mean, std::sqrt(*m.variance));
  }
  return std::nullopt;
}

std::vector<double> default_start(const DistributionSpec& p, Family qf, Direction dir) {
  const auto tr = transforms(qf);
  std::vector<double> u(tr.size(), 0.0);
  if (dir == Direction::PToQ && !is_discrete(p.family())) {
    const Moments m = moments(p);
    if (m.variance && m.mean > 0.0 && *m.variance > 0.0 &&
        (qf == Family::Gamma || qf == Family::Weibull || qf == Family::LogNormal)) {
      try {
        const DistributionSpec s = moment_match(qf, m.mean, *m.variance);
        for (std::size_t i = 0; i < tr.size(); ++i) u[i] = to_coord(tr[i], s[i]);
      } catch (const InfeasibleError&) {
      }
    }
  }
  return u;
}

}  // namespace

InfKlResult inf_kl(const DistributionSpec& p, Family q_family, Direction direction,
                   const InfKlConfig& config) {
  InfKlResult result;
  if (q_family == p.family()) {
    result.value = 0.0;
    result.minimizer = p;
    return result;
  }
  const Support sp = support(p.family());
  const Support sq = support(q_family);
  const bool finite_possible =
      direction == Direction::PToQ ? support_within(sp, sq) : support_within(sq, sp);
  if (!finite_possible) {
    result.value = kInf;
    return result;
  }
  const double tol = 0.1 * config.tolerance;

  if (!config.force_simplex && direction == Direction::PToQ) {
    if (auto q = analytic_minimizer(p, q_family)) {
      result.value = kl(p, *q, tol).value;
      result.minimizer = *q;
      result.evaluations = 1;
      return result;
    }
  }

  if (q_family == Family::StudentT) {
    result.value = kInf;
    for (int nu = 2; nu <= config.max_dof; ++nu) {
      const DistributionSpec q = DistributionSpec::student_t(nu);
      const double v = directed(p, q, direction, tol);
      ++result.evaluations;
      if (v < result.value) {
        result.value = v;
        result.minimizer = q;
      }
    }
    return result;
  }

  const auto tr = transforms(q_family);
  auto make_q = [&](std::span<const double> u) -> std::optional<DistributionSpec> {
    std::array<double, 2> theta{};
    for (std::size_t i = 0; i < tr.size(); ++i) theta[i] = to_param(tr[i], u[i]);
    try {
      return DistributionSpec(q_family, std::span<const double>(theta.data(), tr.size()));
    } catch (const ParameterDomainError&) {
      return std::nullopt;
    }
  };
  double best = kInf;
  std::vector<double> best_u;
  auto objective = [&](std::span<const double> u) {
    const auto q = make_q(u);
    if (!q) return kInf;
    double v = kInf;
    try {
      v = directed(p, *q, direction, tol);
    } catch (const AccuracyError&) {
      return kInf;
    }
    if (v < best) {
      best = v;
      best_u.assign(u.begin(), u.end());
    }
    return v;
  };

  NelderMeadConfig nm;
  nm.tolerance = config.tolerance;
  nm.max_evaluations = config.max_evaluations;
  nm.initial_step = 0.5;
  Rng rng = make_stream(config.seed, {stream::solver});
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  const std::vector<double> base = default_start(p, q_family, direction);
  bool best_converged = false;
  double best_run = kInf;
  for (int s = 0; s < std::max(1, config.starts); ++s) {
    std::vector<double> start = base;
    if (s > 0) {
      for (double& u : start) u += box(rng);
    }
    const NelderMeadResult r = nelder_mead(objective, start, nm);
    result.evaluations += r.evaluations;
    if (r.value < best_run) {
      best_run = r.value;
      best_converged = r.converged;
    }
  }
  result.value = best;
  result.converged = best_converged && std::isfinite(best);
  if (!best_u.empty()) result.minimizer = make_q(best_u);
  return result;
}

}  // namespace lbcp
