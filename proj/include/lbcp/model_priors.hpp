#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lbcp/cp_priors.hpp"
#include "lbcp/divergence.hpp"
#include "lbcp/model_spec.hpp"

namespace lbcp {

/// KL(M_i || M_j) between nested models sharing segment densities and the
/// locations of the larger model: sum over the segments s the smaller model
/// lacks of (segment length) * KL between the two densities assigned there.
/// `params` and `m` describe the larger model. i == j is a DomainError.
double kl_model_pair(int i, int j, std::span<const DistributionSpec> params, const LocationVector& m,
                     double tol = 1e-10);

struct McConfig {
  int draws = 5000;
  std::uint64_t seed = 20190101;
  int threads = 1;
  InfKlConfig solver;
};

struct ScoreEstimate {
  double score = 0.0;  // minimum over competitors of the expected infimum KL
  double se = 0.0;     // Monte Carlo standard error of that expectation
  int competitor = -1; // index attaining the minimum
  bool flagged = false;  // some infimum solve did not converge
  int draws = 0;
  std::vector<double> competitor_means;  // indexed by model, NaN at j itself
  std::vector<double> competitor_se;
};

/// E[m_{s+1} - m_s] under the location prior of a model with k change points.
double expected_segment_length(LocationPriorKind kind, int n, int k, int s);

/// Score of model j: for each competitor i != j the expectation under model j's
/// priors of the infimum over the competitor's free parameters of KL(M_j || M_i);
/// a competitor with more change points contributes the plain infima (its extra
/// run lengths drop to one), a competitor with fewer keeps model j's expected
/// run lengths. Location expectations are exact; only parameters are sampled.
ScoreEstimate expected_min_inf_kl(int j, const NestedModelSequence& seq, int n, const McConfig& mc = {});

struct ModelPriorResult {
  std::vector<double> probs;
  std::vector<double> raw_scores;  // exp(score), may be +inf
  std::vector<double> log_scores;  // the scores themselves
  std::vector<double> mc_se;
  std::vector<bool> flagged;
  int draws = 0;
};

/// Priors proportional to exp(score_j), normalised in log space. When every
/// segment family is equal the result is exactly uniform and no draws are made.
ModelPriorResult model_prior_probabilities(const NestedModelSequence& seq, int n, const McConfig& mc = {});

ModelPriorResult uniform_model_prior(int model_count);

/// E[n - m_1] under the single-location prior: n/2 (uniform), (2n-2)/n (shifted binomial).
double two_model_prior_coefficient(LocationPriorKind kind, int n);

}  // namespace lbcp
