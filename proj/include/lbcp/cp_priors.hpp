#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lbcp/distributions.hpp"
#include "lbcp/rng.hpp"

namespace lbcp {

/// Change-point locations 1 <= m_1 < ... < m_k <= n-1. Observation i (1-based)
/// belongs to segment s when m_s < i <= m_{s+1}, with m_0 = 0 and m_{k+1} = n.
class LocationVector {
public:
  LocationVector(std::vector<int> m, int n);
  static LocationVector none(int n) { return LocationVector({}, n); }

  int n() const noexcept { return n_; }
  int k() const noexcept { return static_cast<int>(m_.size()); }
  int operator[](std::size_t i) const { return m_[i]; }
  std::span<const int> positions() const noexcept { return m_; }
  /// Boundary s in 0..k+1 (0 and n at the ends).
  int boundary(int s) const { return s == 0 ? 0 : (s == k() + 1 ? n_ : m_[s - 1]); }
  int segment_length(int s) const { return boundary(s + 1) - boundary(s); }
  /// Segment index (0-based) of 0-based observation i.
  int segment_of(int i) const;

  friend bool operator==(const LocationVector&, const LocationVector&) = default;

private:
  std::vector<int> m_;
  int n_;
};

std::string to_string(const LocationVector& m);

/// Finite prior: masses are non-negative and sum to one.
template <class Point>
struct DiscretePrior {
  std::vector<Point> support;
  std::vector<double> mass;

  std::size_t size() const noexcept { return support.size(); }
  double total() const {
    double t = 0.0;
    for (double v : mass) t += v;
    return t;
  }
};

/// Normalised masses proportional to exp(min over m' != m of KL(f_m || f_m')) - 1,
/// indexed by position in `models`. All-zero minima give the uniform prior.
/// Throws PriorUndefinedError when some model is infinitely far from all others.
DiscretePrior<int> loss_based_prior(std::span<const DistributionSpec> models, double tol = 1e-10);

/// Uniform prior over all k-subsets of {1, ..., n-1}.
class UniformLocationPrior {
public:
  UniformLocationPrior(int n, int k);

  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  double log_count() const noexcept { return log_count_; }
  double log_mass() const noexcept { return -log_count_; }
  double mass(const LocationVector& m) const;
  /// Every admissible vector in lexicographic order; throws DomainError above `limit`.
  std::vector<LocationVector> enumerate(std::size_t limit = 5'000'000) const;
  DiscretePrior<LocationVector> as_discrete(std::size_t limit = 5'000'000) const;
  /// One draw without enumerating: k distinct values from {1..n-1}, sorted.
  LocationVector sample(Rng& rng) const;
  /// E[m_{s+1} - m_s] for any segment s; spacings are exchangeable, so n / (k+1).
  double expected_segment_length() const noexcept { return static_cast<double>(n_) / (k_ + 1); }

private:
  int n_;
  int k_;
  double log_count_;
};

/// Single location with mass C(n-2, m-1) ((n-1)/n)^(m-1) (1/n)^(n-m-1), m = 1..n-1.
DiscretePrior<int> shifted_binomial_prior(int n);

/// Segment densities plus locations; segments.size() == m.k() + 1.
struct SegmentedModel {
  std::vector<DistributionSpec> segments;
  LocationVector m;

  SegmentedModel(std::vector<DistributionSpec> segments, LocationVector m);
  const DistributionSpec& density_at(int i) const { return segments[m.segment_of(i)]; }
  double log_likelihood(std::span<const double> data) const;
};

/// KL between the joint laws of two segmented models on the same n, by run
/// decomposition: sum over observations of KL(density under a || density under b).
double segmentation_kl(const SegmentedModel& a, const SegmentedModel& b, double tol = 1e-12);

/// KL between the joint laws with common segment densities and locations a, b.
double kl_between_location_vectors(const LocationVector& a, const LocationVector& b,
                                   std::span<const DistributionSpec> segments, double tol = 1e-12);

}  // namespace lbcp
