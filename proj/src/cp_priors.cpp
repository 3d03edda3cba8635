#include "lbcp/cp_priors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lbcp/divergence.hpp"
#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"

namespace lbcp {

LocationVector::LocationVector(std::vector<int> m, int n) : m_(std::move(m)), n_(n) {
  if (n < 1) throw DomainError("sample size must be at least 1");
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (m_[i] < 1 || m_[i] > n - 1) {
      throw DomainError("change point " + std::to_string(m_[i]) + " outside 1.." +
                        std::to_string(n - 1));
    }
    if (i > 0 && m_[i] <= m_[i - 1]) throw DomainError("change points must be strictly increasing");
  }
}

int LocationVector::segment_of(int i) const {
  // Observation i (0-based) is the (i+1)-th; it lies after every m_s < i + 1.
  return static_cast<int>(std::upper_bound(m_.begin(), m_.end(), i) - m_.begin());
}

std::string to_string(const LocationVector& m) {
  std::string out = "(";
  for (int i = 0; i < m.k(); ++i) out += (i ? "," : "") + std::to_string(m[i]);
  return out + ")";
}

DiscretePrior<int> loss_based_prior(std::span<const DistributionSpec> models, double tol) {
  const std::size_t count = models.size();
  if (count < 2) throw DomainError("loss-based prior needs at least two models");
  std::vector<double> minima(count, kInf);
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = 0; b < count; ++b) {
      if (a != b) minima[a] = std::min(minima[a], kl(models[a], models[b], tol).value);
    }
    if (minima[a] == kInf) {
      throw PriorUndefinedError("model " + to_string(models[a]) +
                                " is at infinite divergence from every alternative");
    }
  }
  DiscretePrior<int> prior;
  prior.support.resize(count);
  for (std::size_t i = 0; i < count; ++i) prior.support[i] = static_cast<int>(i);
  if (std::all_of(minima.begin(), minima.end(), [](double d) { return d <= 0.0; })) {
    prior.mass.assign(count, 1.0 / static_cast<double>(count));
    return prior;
  }
  // log(e^d - 1) = d + log(1 - e^-d), stable for large d.
  std::vector<double> logw(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double d = minima[i];
    logw[i] = d <= 0.0 ? -kInf : d + std::log(-std::expm1(-d));
  }
  const double lse = log_sum_exp(logw);
  prior.mass.resize(count);
  for (std::size_t i = 0; i < count; ++i) prior.mass[i] = std::exp(logw[i] - lse);
  return prior;
}

UniformLocationPrior::UniformLocationPrior(int n, int k) : n_(n), k_(k) {
  if (n < 2) throw DomainError("location prior needs n >= 2");
  if (k < 1 || k > n - 1) {
    throw DomainError("change-point count k=" + std::to_string(k) + " must lie in 1.." +
                      std::to_string(n - 1));
  }
  log_count_ = log_binomial(n - 1, k);
}

double UniformLocationPrior::mass(const LocationVector& m) const {
  if (m.n() != n_ || m.k() != k_) return 0.0;
  return std::exp(-log_count_);
}

std::vector<LocationVector> UniformLocationPrior::enumerate(std::size_t limit) const {
  if (log_count_ > std::log(static_cast<double>(limit)) + 1e-9) {
    throw DomainError("too many location vectors to enumerate");
  }
  std::vector<LocationVector> out;
  std::vector<int> m(k_);
  for (int i = 0; i < k_; ++i) m[i] = i + 1;
  while (true) {
    out.emplace_back(m, n_);
    int i = k_ - 1;
    while (i >= 0 && m[i] == n_ - k_ + i) --i;
    if (i < 0) break;
    ++m[i];
    for (int j = i + 1; j < k_; ++j) m[j] = m[j - 1] + 1;
  }
  return out;
}

DiscretePrior<LocationVector> UniformLocationPrior::as_discrete(std::size_t limit) const {
  DiscretePrior<LocationVector> prior;
  prior.support = enumerate(limit);
  prior.mass.assign(prior.support.size(), 1.0 / static_cast<double>(prior.support.size()));
  return prior;
}

LocationVector UniformLocationPrior::sample(Rng& rng) const {
  // Floyd's algorithm: k distinct draws from {1..n-1} in O(k).
  std::unordered_set<int> chosen;
  std::vector<int> m;
  m.reserve(k_);
  for (int j = n_ - 1 - k_ + 1; j <= n_ - 1; ++j) {
    const int t = std::uniform_int_distribution<int>(1, j)(rng);
    const int pick = chosen.count(t) ? j : t;
    chosen.insert(pick);
    m.push_back(pick);
  }
  std::sort(m.begin(), m.end());
  return LocationVector(std::move(m), n_);
}

DiscretePrior<int> shifted_binomial_prior(int n) {
  if (n < 2) throw DomainError("shifted binomial prior needs n >= 2");
  DiscretePrior<int> prior;
  std::vector<double> logw;
  const double lq = std::log((n - 1.0) / n);
  const double lr = -std::log(static_cast<double>(n));
  for (int m = 1; m <= n - 1; ++m) {
    prior.support.push_back(m);
    logw.push_back(log_binomial(n - 2, m - 1) + (m - 1) * lq + (n - m - 1) * lr);
  }
  const double lse = log_sum_exp(logw);
  for (double w : logw) prior.mass.push_back(std::exp(w - lse));
  return prior;
}

SegmentedModel::SegmentedModel(std::vector<DistributionSpec> segs, LocationVector locations)
    : segments(std::move(segs)), m(std::move(locations)) {
  if (static_cast<int>(segments.size()) != m.k() + 1) {
    throw DomainError("a model with k change points needs k+1 segment densities");
  }
}

double SegmentedModel::log_likelihood(std::span<const double> data) const {
  if (static_cast<int>(data.size()) != m.n()) throw DomainError("data length differs from n");
  double ll = 0.0;
  for (int s = 0; s <= m.k(); ++s) {
    for (int i = m.boundary(s); i < m.boundary(s + 1); ++i) ll += log_density(segments[s], data[i]);
  }
  return ll;
}

double segmentation_kl(const SegmentedModel& a, const SegmentedModel& b, double tol) {
  if (a.m.n() != b.m.n()) throw DomainError("segmentation_kl needs a common sample size");
  const int n = a.m.n();
  double total = 0.0;
  int i = 0;
  while (i < n) {
    const int sa = a.m.segment_of(i);
    const int sb = b.m.segment_of(i);
    // Extend to the maximal run sharing the same pair of segment indices.
    int j = std::min(a.m.boundary(sa + 1), b.m.boundary(sb + 1));
    const DistributionSpec& fa = a.segments[sa];
    const DistributionSpec& fb = b.segments[sb];
    if (!(fa == fb)) total += (j - i) * kl(fa, fb, tol).value;
    i = j;
  }
  return total;
}

double kl_between_location_vectors(const LocationVector& a, const LocationVector& b,
                                   std::span<const DistributionSpec> segments, double tol) {
  if (a.n() != b.n() || a.k() != b.k()) {
    throw DomainError("location vectors must share n and k");
  }
  std::vector<DistributionSpec> segs(segments.begin(), segments.end());
  return segmentation_kl(SegmentedModel(segs, a), SegmentedModel(segs, b), tol);
}

}  // namespace lbcp
