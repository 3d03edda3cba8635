#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lbcp/cp_priors.hpp"
#include "lbcp/model_spec.hpp"

namespace lbcp {

/// Exact log of the integral of prod f(x_i | theta) against a conjugate prior:
/// Poisson with a Gamma(shape, rate) prior, Geometric with a Beta(a, b) prior.
double conjugate_segment_log_marginal(Family family, const DistributionSpec& prior,
                                      std::span<const double> segment);
bool is_conjugate(const SegmentPrior& prior);

enum class EvidenceMethod { ConjugateExact, ExactEnumeration, MonteCarlo, SchwarzBic };
std::string_view evidence_method_name(EvidenceMethod method);

enum class EvidenceRoute { Auto, Exact, MonteCarlo };
EvidenceRoute parse_evidence_route(std::string_view text);

struct EvidenceConfig {
  EvidenceRoute route = EvidenceRoute::Auto;
  int draws = 2000;
  int batches = 20;  // batch means for the Monte Carlo standard error
  std::uint64_t seed = 20190101;
  int threads = 1;
  bool keep_location_posterior = false;  // full support list; marginals are always kept
  std::size_t posterior_limit = 2'000'000;
  int max_atoms = 5000;  // discrete priors with more atoms are sampled instead
};

struct EvidenceResult {
  double log_evidence = 0.0;
  EvidenceMethod method = EvidenceMethod::ConjugateExact;
  std::optional<double> mc_se;  // log scale, Monte Carlo only
  std::optional<DiscretePrior<LocationVector>> location_posterior;
  /// marginals[c][m-1] = Pr(m_c = m | x); empty for k = 0.
  std::vector<std::vector<double>> location_marginals;
  std::optional<LocationVector> map_locations;
  std::string diagnostic;
};

/// Log evidence of the model whose segments follow `segments` (k = size - 1
/// change points, k <= 2) with the uniform prior over location vectors.
EvidenceResult log_evidence(std::span<const SegmentPrior> segments, std::span<const double> data,
                            const EvidenceConfig& config = {});

/// Forces the Monte Carlo route for every segment.
EvidenceResult mc_log_evidence(std::span<const SegmentPrior> segments, std::span<const double> data,
                               int draws, std::uint64_t seed, int threads = 1);

/// Pr(m | x, M_k), from the same computation as the evidence.
DiscretePrior<LocationVector> location_posterior(std::span<const SegmentPrior> segments,
                                                 std::span<const double> data,
                                                 const EvidenceConfig& config = {});

/// Maximised log-likelihood over segment parameters and locations.
struct SchwarzFit {
  std::vector<Family> families;
  double log_likelihood = 0.0;
  int dimension = 0;  // continuous parameters; locations and integer dof excluded
  LocationVector locations = LocationVector::none(1);
  std::vector<DistributionSpec> estimates;
};

/// Exhaustive scan over locations (k <= 2) with every segment at least two
/// observations long and a finite maximised likelihood.
SchwarzFit schwarz_fit(std::span<const Family> families, std::span<const double> data, int threads = 1);

/// log B_ij ~ l_i - l_j - (d_i - d_j) ln(n) / 2.
double schwarz_log_bayes_factor(const SchwarzFit& i, const SchwarzFit& j, int n);
double schwarz_log_bayes_factor(std::span<const Family> model_i, std::span<const Family> model_j,
                                std::span<const double> data);

/// Pr(M_i | x) from prior probabilities and log evidences, in log space.
std::vector<double> posterior_model_probs(std::span<const double> model_priors,
                                          std::span<const double> log_evidences);

}  // namespace lbcp
