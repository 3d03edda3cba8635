#include "lbcp/model_priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"

namespace lbcp {

double kl_model_pair(int i, int j, std::span<const DistributionSpec> params, const LocationVector& m,
                     double tol) {
  if (i == j) throw DomainError("kl_model_pair needs two distinct models");
  if (i < 0 || j < 0) throw DomainError("model indices must be non-negative");
  const int lo = std::min(i, j);
  const int hi = std::max(i, j);
  if (m.k() != hi || static_cast<int>(params.size()) < hi + 1) {
    throw DomainError("locations and parameters must describe the larger model");
  }
  double total = 0.0;
  for (int s = lo + 1; s <= hi; ++s) {
    const double d = i < j ? kl(params[lo], params[s], tol).value : kl(params[s], params[lo], tol).value;
    if (d > 0.0) total += m.segment_length(s) * d;
  }
  return total;
}

double two_model_prior_coefficient(LocationPriorKind kind, int n) {
  if (n < 2) throw DomainError("n must be at least 2");
  if (kind == LocationPriorKind::Uniform) {
    // sum_{m=1}^{n-1} (n-m) / (n-1), summed exactly in integers.
    const long long total = static_cast<long long>(n) * (n - 1) / 2;
    return static_cast<double>(total) / (n - 1);
  }
  const DiscretePrior<int> prior = shifted_binomial_prior(n);
  double e = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) e += prior.mass[i] * (n - prior.support[i]);
  return e;
}

double expected_segment_length(LocationPriorKind kind, int n, int k, int s) {
  if (s < 0 || s > k) throw DomainError("segment index out of range");
  if (k == 0) return n;
  if (kind == LocationPriorKind::Uniform) return UniformLocationPrior(n, k).expected_segment_length();
  if (k != 1) throw DomainError("the shifted binomial prior has a single location");
  const double tail = two_model_prior_coefficient(kind, n);
  return s == 1 ? tail : n - tail;
}

namespace {

struct Term {
  int segment;   // drawn segment supplying p
  Family target; // competitor family
  double weight; // expected run length, or 1
};

}  // namespace

ScoreEstimate expected_min_inf_kl(int j, const NestedModelSequence& seq, int n, const McConfig& mc) {
  const int models = seq.model_count();
  if (j < 0 || j >= models) throw DomainError("model index out of range");
  if (n < models) throw DomainError("n too small for the largest model");
  if (mc.draws < 1) throw DomainError("Monte Carlo needs at least one draw");

  // Terms of each competitor's infimum, with exact location expectations.
  std::vector<std::vector<Term>> terms(models);
  for (int i = 0; i < models; ++i) {
    if (i < j) {
      for (int s = i + 1; s <= j; ++s) {
        terms[i].push_back({s, seq.segments[i].family, expected_segment_length(seq.location_prior, n, j, s)});
      }
    } else if (i > j) {
      for (int s = j + 1; s <= i; ++s) terms[i].push_back({j, seq.segments[s].family, 1.0});
    }
  }

  bool all_fixed = true;
  for (int s = 0; s <= j; ++s) all_fixed = all_fixed && seq.segments[s].is_fixed();
  const int draws = all_fixed ? 1 : mc.draws;

  std::vector<double> values(static_cast<std::size_t>(draws) * models, 0.0);
  std::vector<char> unconverged(draws, 0);
  auto run = [&](int begin, int end) {
    for (int d = begin; d < end; ++d) {
      Rng rng = make_stream(mc.seed, {stream::model_prior, static_cast<std::uint64_t>(j),
                                      static_cast<std::uint64_t>(d)});
      std::vector<DistributionSpec> theta;
      for (int s = 0; s <= j; ++s) theta.push_back(seq.segments[s].draw(rng));
      InfKlConfig solver = mc.solver;
      solver.seed = mc.seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(d) + 1) + j);
      // Each (segment, family) infimum is shared by every competitor that needs it.
      std::vector<std::pair<std::pair<int, Family>, double>> cache;
      auto inf_value = [&](int s, Family f) {
        for (const auto& [key, v] : cache) {
          if (key.first == s && key.second == f) return v;
        }
        const InfKlResult r = inf_kl(theta[s], f, Direction::PToQ, solver);
        if (!r.converged) unconverged[d] = 1;
        cache.push_back({{s, f}, r.value});
        return r.value;
      };
      for (int i = 0; i < models; ++i) {
        double total = 0.0;
        for (const Term& t : terms[i]) {
          const double v = inf_value(t.segment, t.target);
          if (v > 0.0) total += t.weight * v;
        }
        values[static_cast<std::size_t>(d) * models + i] = total;
      }
    }
  };
  const int threads = std::clamp(mc.threads, 1, std::max(1, draws));
  if (threads == 1) {
    run(0, draws);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (draws + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk;
      const int e = std::min(draws, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& th : pool) th.join();
  }

  ScoreEstimate out;
  out.draws = draws;
  out.score = kInf;
  out.competitor_means.assign(models, std::numeric_limits<double>::quiet_NaN());
  out.competitor_se.assign(models, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> column(draws);
  for (int i = 0; i < models; ++i) {
    if (i == j) continue;
    for (int d = 0; d < draws; ++d) column[d] = values[static_cast<std::size_t>(d) * models + i];
    const MeanSe ms = mean_and_se(column);
    out.competitor_means[i] = ms.mean;
    out.competitor_se[i] = ms.se;
    if (ms.mean < out.score || out.competitor < 0) {
      out.score = ms.mean;
      out.se = ms.se;
      out.competitor = i;
    }
  }
  out.flagged = std::any_of(unconverged.begin(), unconverged.end(), [](char c) { return c != 0; });
  return out;
}

ModelPriorResult uniform_model_prior(int model_count) {
  ModelPriorResult r;
  r.probs.assign(model_count, 1.0 / model_count);
  r.raw_scores.assign(model_count, 1.0);
  r.log_scores.assign(model_count, 0.0);
  r.mc_se.assign(model_count, 0.0);
  r.flagged.assign(model_count, false);
  return r;
}

ModelPriorResult model_prior_probabilities(const NestedModelSequence& seq, int n, const McConfig& mc) {
  const int models = seq.model_count();
  if (seq.all_families_equal()) return uniform_model_prior(models);
  ModelPriorResult r;
  for (int j = 0; j < models; ++j) {
    const ScoreEstimate s = expected_min_inf_kl(j, seq, n, mc);
    r.log_scores.push_back(s.score);
    r.raw_scores.push_back(std::exp(s.score));
    r.mc_se.push_back(s.se);
    r.flagged.push_back(s.flagged);
    r.draws = std::max(r.draws, s.draws);
  }
  const bool any_inf = std::any_of(r.log_scores.begin(), r.log_scores.end(),
                                   [](double v) { return v == kInf; });
  if (any_inf) {
    // Mass concentrates evenly on the models with infinite scores.
    const auto count = std::count(r.log_scores.begin(), r.log_scores.end(), kInf);
    for (double v : r.log_scores) r.probs.push_back(v == kInf ? 1.0 / count : 0.0);
    return r;
  }
  const double lse = log_sum_exp(r.log_scores);
  for (double v : r.log_scores) r.probs.push_back(std::exp(v - lse));
  return r;
}

}  // namespace lbcp
