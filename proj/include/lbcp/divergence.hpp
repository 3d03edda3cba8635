#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "lbcp/distributions.hpp"

namespace lbcp {

enum class KlMethod { ClosedForm, Quadrature, TruncatedSum };
enum class KlRoute { Auto, Closed, Numeric };

std::string_view method_name(KlMethod method);
KlRoute parse_kl_route(std::string_view text);

/// Divergence in nats. `value` is +inf when p puts mass where q has none.
struct KlResult {
  double value = 0.0;
  KlMethod method = KlMethod::ClosedForm;
  double error_bound = 0.0;  // absolute; 0 for closed forms
};

bool has_closed_form(Family p, Family q);

/// Closed-form KL(p||q), or nullopt when the pair has no registered formula.
std::optional<double> closed_form_kl(const DistributionSpec& p, const DistributionSpec& q);

/// KL(p||q) with absolute error <= tol. Route::Closed throws UnsupportedPairError
/// for pairs without a formula; Route::Numeric always integrates or sums.
/// Throws AccuracyError if the numeric route cannot certify the tolerance.
KlResult kl(const DistributionSpec& p, const DistributionSpec& q, double tol = 1e-8,
            KlRoute route = KlRoute::Auto);

/// sqrt(1 - integral of sqrt(p q)), in [0, 1].
double hellinger(const DistributionSpec& p, const DistributionSpec& q, double tol = 1e-10);

/// PToQ minimises KL(p||q) over q; QToP minimises KL(q||p).
enum class Direction { PToQ, QToP };

struct InfKlConfig {
  double tolerance = 1e-8;
  int max_evaluations = 2000;
  int starts = 8;
  int max_dof = 200;        // upper end of the StudentT search
  std::uint64_t seed = 1;   // random restarts
  bool force_simplex = false;  // skip analytic minimisers (used to cross-check them)
};

struct InfKlResult {
  double value = 0.0;
  std::optional<DistributionSpec> minimizer;  // empty when the infimum is +inf
  bool converged = true;
  int evaluations = 0;
};

InfKlResult inf_kl(const DistributionSpec& p, Family q_family, Direction direction = Direction::PToQ,
                   const InfKlConfig& config = {});

/// min(KL(p||q), KL(q||p)); +inf only when both directions are infinite.
double min_kl_direction_pair(const DistributionSpec& p, const DistributionSpec& q,
                             double tol = 1e-10);

}  // namespace lbcp
