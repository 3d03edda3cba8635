#include "lbcp/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <thread>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"

namespace lbcp {

namespace {

bool nonneg_integer(double x) { return x >= 0.0 && std::floor(x) == x && std::isfinite(x); }

template <class Body>
void parallel_rows(int rows, int threads, Body&& body) {
  threads = std::clamp(threads, 1, std::max(1, rows));
  if (threads == 1) {
    for (int r = 0; r < rows; ++r) body(r, 0);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int r = t; r < rows; r += threads) body(r, t);
    });
  }
  for (auto& th : pool) th.join();
}

// Segment log marginals of data[a, b). Slot 0 holds the estimate from every
// prior atom or draw; slots 1..G hold the batch estimates used for the Monte
// Carlo standard error (exact tables repeat slot 0).
class SegmentTable {
public:
  virtual ~SegmentTable() = default;
  virtual void eval(int a, int b, std::span<double> out) const = 0;
};

class ConjugateTable final : public SegmentTable {
public:
  ConjugateTable(const SegmentPrior& prior, std::span<const double> data)
      : family_(prior.family), prior_(*prior.params[0].law()) {
    const std::size_t n = data.size();
    sum_.assign(n + 1, 0.0);
    log_fact_.assign(n + 1, 0.0);
    bad_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = nonneg_integer(data[i]);
      sum_[i + 1] = sum_[i] + (ok ? data[i] : 0.0);
      log_fact_[i + 1] = log_fact_[i] + (ok ? std::lgamma(data[i] + 1.0) : 0.0);
      bad_[i + 1] = bad_[i] + (ok ? 0 : 1);
    }
  }

  double value(int a, int b) const {
    if (bad_[b] != bad_[a]) return -kInf;
    const double len = b - a;
    const double s = sum_[b] - sum_[a];
    const double p0 = prior_[0], p1 = prior_[1];
    if (family_ == Family::Poisson) {
      return p0 * std::log(p1) - std::lgamma(p0) + std::lgamma(p0 + s) - (p0 + s) * std::log(p1 + len) -
             (log_fact_[b] - log_fact_[a]);
    }
    return lbeta(p0 + len, p1 + s) - lbeta(p0, p1);
  }

  void eval(int a, int b, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), value(a, b));
  }

private:
  static double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

  Family family_;
  DistributionSpec prior_;
  std::vector<double> sum_, log_fact_;
  std::vector<int> bad_;
};

// Mixture over parameter atoms with log weights: exact for enumerable priors,
// prior draws with equal weights (split into batches) for Monte Carlo.
class AtomTable final : public SegmentTable {
public:
  AtomTable(std::vector<std::pair<DistributionSpec, double>> atoms, std::span<const double> data, bool sampled,
            int groups, int threads)
      : n_(static_cast<int>(data.size())), atoms_(static_cast<int>(atoms.size())), sampled_(sampled) {
    logw_.resize(atoms_);
    for (int i = 0; i < atoms_; ++i) logw_[i] = atoms[i].second;
    prefix_.assign(static_cast<std::size_t>(atoms_) * (n_ + 1), 0.0);
    bad_.assign(n_ + 1, 0);
    const Family family = atoms.front().first.family();
    for (int i = 0; i < n_; ++i) {
      bool ok = true;
      try {
        validate_sample(family, data.subspan(i, 1));
      } catch (const DataError&) {
        ok = false;
      }
      bad_[i + 1] = bad_[i] + (ok ? 0 : 1);
    }
    parallel_rows(atoms_, threads, [&](int a, int) {
      double* row = &prefix_[static_cast<std::size_t>(a) * (n_ + 1)];
      for (int i = 0; i < n_; ++i) {
        const double l = bad_[i + 1] != bad_[i] ? 0.0 : log_density(atoms[a].first, data[i]);
        row[i + 1] = row[i] + l;
      }
    });
    const int g = sampled ? groups : 0;
    for (int j = 0; j <= g; ++j) bounds_.push_back(g == 0 ? 0 : static_cast<int>(static_cast<long long>(atoms_) * j / g));
    if (g == 0) bounds_.push_back(atoms_);
  }

  void eval(int a, int b, std::span<double> out) const override {
    if (bad_[b] != bad_[a]) {
      std::fill(out.begin(), out.end(), -kInf);
      return;
    }
    double hi = -kInf;
    for (int i = 0; i < atoms_; ++i) hi = std::max(hi, value(i, a, b));
    if (hi == -kInf) {
      std::fill(out.begin(), out.end(), -kInf);
      return;
    }
    const int groups = static_cast<int>(bounds_.size()) - 1;
    double total = 0.0;
    for (int g = 0; g < groups; ++g) {
      double acc = 0.0;
      for (int i = bounds_[g]; i < bounds_[g + 1]; ++i) acc += std::exp(value(i, a, b) - hi);
      total += acc;
      if (sampled_) out[g + 1] = hi + std::log(acc / (bounds_[g + 1] - bounds_[g]));
    }
    out[0] = hi + std::log(sampled_ ? total / atoms_ : total);
    if (!sampled_) std::fill(out.begin() + 1, out.end(), out[0]);
  }

private:
  double value(int i, int a, int b) const {
    const double* row = &prefix_[static_cast<std::size_t>(i) * (n_ + 1)];
    return logw_[i] + row[b] - row[a];
  }

  int n_, atoms_;
  bool sampled_;
  std::vector<double> logw_, prefix_;
  std::vector<int> bad_, bounds_;
};

enum class SegmentRoute { Conjugate, Atoms, Sampled };

SegmentRoute choose_route(const SegmentPrior& sp, const EvidenceConfig& cfg) {
  if (cfg.route != EvidenceRoute::MonteCarlo) {
    if (sp.is_enumerable() && static_cast<int>(sp.atoms().size()) <= cfg.max_atoms) return SegmentRoute::Atoms;
    if (is_conjugate(sp)) return SegmentRoute::Conjugate;
    if (cfg.route == EvidenceRoute::Exact) {
      throw UnsupportedPairError("no exact evidence for a " + std::string(family_name(sp.family)) +
                                 " segment whose priors are neither conjugate nor discrete");
    }
  }
  return SegmentRoute::Sampled;
}

struct Tables {
  std::vector<std::unique_ptr<SegmentTable>> segments;
  bool sampled = false;
  bool all_conjugate = true;
  int groups = 0;  // batches; 0 when nothing is sampled
  int slots() const { return groups + 1; }
};

Tables build_tables(std::span<const SegmentPrior> segments, std::span<const double> data,
                    const EvidenceConfig& cfg) {
  Tables t;
  const int k = static_cast<int>(segments.size()) - 1;
  std::vector<SegmentRoute> routes;
  for (const auto& sp : segments) {
    routes.push_back(choose_route(sp, cfg));
    t.sampled = t.sampled || routes.back() == SegmentRoute::Sampled;
    t.all_conjugate = t.all_conjugate && routes.back() == SegmentRoute::Conjugate;
  }
  if (t.sampled) {
    if (cfg.draws < 2) throw DomainError("Monte Carlo evidence needs at least two draws");
    t.groups = std::clamp(cfg.batches, 1, cfg.draws);
  }
  for (int s = 0; s <= k; ++s) {
    const SegmentPrior& sp = segments[s];
    switch (routes[s]) {
      case SegmentRoute::Conjugate:
        t.segments.push_back(std::make_unique<ConjugateTable>(sp, data));
        break;
      case SegmentRoute::Atoms:
        t.segments.push_back(std::make_unique<AtomTable>(sp.atoms(), data, false, 0, cfg.threads));
        break;
      case SegmentRoute::Sampled: {
        Rng rng = make_stream(cfg.seed, {stream::evidence, static_cast<std::uint64_t>(k),
                                         static_cast<std::uint64_t>(s)});
        std::vector<std::pair<DistributionSpec, double>> draws;
        draws.reserve(cfg.draws);
        for (int d = 0; d < cfg.draws; ++d) draws.emplace_back(sp.draw(rng), 0.0);
        t.segments.push_back(std::make_unique<AtomTable>(std::move(draws), data, true, t.groups, cfg.threads));
        break;
      }
    }
  }
  return t;
}

struct Scan {
  double log_evidence = -kInf;
  std::vector<double> batch_log_evidence;
  std::vector<double> terms;  // log likelihood per location vector, lexicographic
};

// Sum over all location vectors (k <= 2) of the product of segment marginals,
// for the full estimate and every batch at once.
Scan scan_locations(const Tables& t, int n, int threads) {
  const int k = static_cast<int>(t.segments.size()) - 1;
  const int slots = t.slots();
  Scan out;
  std::vector<double> buf(slots);
  if (k == 0) {
    t.segments[0]->eval(0, n, buf);
    out.log_evidence = buf[0];
    out.batch_log_evidence.assign(buf.begin() + 1, buf.end());
    return out;
  }
  if (k > 2) throw DomainError("evidence is available for at most two change points");
  const double log_count = log_binomial(n - 1, k);
  // rows[r * slots + g]: log-sum-exp of the terms in row r for slot g.
  std::vector<double> rows;
  if (k == 1) {
    out.terms.resize(n - 1);
    rows.assign(static_cast<std::size_t>(n - 1) * slots, -kInf);
    std::vector<double> a(slots), b(slots);
    for (int m = 1; m <= n - 1; ++m) {
      t.segments[0]->eval(0, m, a);
      t.segments[1]->eval(m, n, b);
      for (int g = 0; g < slots; ++g) rows[static_cast<std::size_t>(m - 1) * slots + g] = a[g] + b[g];
      out.terms[m - 1] = a[0] + b[0];
    }
  } else {
    std::vector<double> first(static_cast<std::size_t>(n) * slots), last(static_cast<std::size_t>(n) * slots);
    parallel_rows(n - 1, threads, [&](int r, int) {
      const int m = r + 1;
      t.segments[0]->eval(0, m, std::span<double>(&first[static_cast<std::size_t>(m) * slots], slots));
      t.segments[2]->eval(m, n, std::span<double>(&last[static_cast<std::size_t>(m) * slots], slots));
    });
    const std::size_t count = static_cast<std::size_t>(n - 1) * (n - 2) / 2;
    out.terms.resize(count);
    std::vector<std::size_t> offset(n, 0);
    for (int m1 = 2; m1 <= n - 2; ++m1) offset[m1] = offset[m1 - 1] + (n - 1 - (m1 - 1));
    rows.assign(static_cast<std::size_t>(n - 2) * slots, -kInf);
    parallel_rows(n - 2, threads, [&](int r, int) {
      const int m1 = r + 1;
      std::vector<double> mid(slots);
      std::vector<std::vector<double>> row(slots);
      std::size_t idx = offset[m1];
      for (int m2 = m1 + 1; m2 <= n - 1; ++m2) {
        t.segments[1]->eval(m1, m2, mid);
        for (int g = 0; g < slots; ++g) {
          row[g].push_back(first[static_cast<std::size_t>(m1) * slots + g] + mid[g] +
                           last[static_cast<std::size_t>(m2) * slots + g]);
        }
        out.terms[idx++] = row[0].back();
      }
      for (int g = 0; g < slots; ++g) rows[static_cast<std::size_t>(r) * slots + g] = log_sum_exp(row[g]);
    });
  }
  const std::size_t row_count = rows.size() / slots;
  std::vector<double> col(row_count);
  for (int g = 0; g < slots; ++g) {
    for (std::size_t r = 0; r < row_count; ++r) col[r] = rows[r * slots + g];
    const double v = log_sum_exp(col) - log_count;
    if (g == 0) {
      out.log_evidence = v;
    } else {
      out.batch_log_evidence.push_back(v);
    }
  }
  return out;
}

void fill_location_summaries(EvidenceResult& r, const Scan& scan, int n, int k, const EvidenceConfig& cfg) {
  if (k == 0 || scan.terms.empty()) return;
  const double lse = log_sum_exp(scan.terms);
  if (lse == -kInf) return;
  r.location_marginals.assign(k, std::vector<double>(n - 1, 0.0));
  std::size_t best = 0;
  for (std::size_t i = 1; i < scan.terms.size(); ++i) {
    if (scan.terms[i] > scan.terms[best]) best = i;
  }
  const bool keep = cfg.keep_location_posterior && scan.terms.size() <= cfg.posterior_limit;
  DiscretePrior<LocationVector> post;
  std::size_t idx = 0;
  if (k == 1) {
    for (int m = 1; m <= n - 1; ++m, ++idx) {
      const double p = std::exp(scan.terms[idx] - lse);
      r.location_marginals[0][m - 1] = p;
      if (keep) {
        post.support.emplace_back(std::vector<int>{m}, n);
        post.mass.push_back(p);
      }
      if (idx == best) r.map_locations = LocationVector({m}, n);
    }
  } else {
    for (int m1 = 1; m1 <= n - 2; ++m1) {
      for (int m2 = m1 + 1; m2 <= n - 1; ++m2, ++idx) {
        const double p = std::exp(scan.terms[idx] - lse);
        r.location_marginals[0][m1 - 1] += p;
        r.location_marginals[1][m2 - 1] += p;
        if (keep) {
          post.support.emplace_back(std::vector<int>{m1, m2}, n);
          post.mass.push_back(p);
        }
        if (idx == best) r.map_locations = LocationVector({m1, m2}, n);
      }
    }
  }
  if (keep) r.location_posterior = std::move(post);
}

void check_data(std::span<const double> data, int k) {
  if (static_cast<int>(data.size()) < std::max(1, k + 1) || (k >= 1 && data.size() < 2)) {
    throw DomainError("need at least k+1 (and two) observations for k change points");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) throw DataError("non-finite observation at position " + std::to_string(i + 1));
  }
}

}  // namespace

double conjugate_segment_log_marginal(Family family, const DistributionSpec& prior,
                                      std::span<const double> segment) {
  const bool ok = (family == Family::Poisson && prior.family() == Family::Gamma) ||
                  (family == Family::Geometric && prior.family() == Family::Beta);
  if (!ok) {
    throw UnsupportedPairError("no conjugate marginal for " + std::string(family_name(family)) +
                               " with a " + std::string(family_name(prior.family())) + " prior");
  }
  if (segment.empty()) throw DomainError("conjugate marginal needs a non-empty segment");
  std::vector<ParamPrior> params{ParamPrior::distribution(prior)};
  const ConjugateTable table(SegmentPrior(family, params), segment);
  return table.value(0, static_cast<int>(segment.size()));
}

bool is_conjugate(const SegmentPrior& prior) {
  if (prior.params.size() != 1 || prior.params[0].is_fixed() || prior.params[0].shift() != 0.0) return false;
  const Family law = prior.params[0].law()->family();
  return (prior.family == Family::Poisson && law == Family::Gamma) ||
         (prior.family == Family::Geometric && law == Family::Beta);
}

std::string_view evidence_method_name(EvidenceMethod method) {
  switch (method) {
    case EvidenceMethod::ConjugateExact: return "conjugate_exact";
    case EvidenceMethod::ExactEnumeration: return "exact_enumeration";
    case EvidenceMethod::MonteCarlo: return "monte_carlo";
    case EvidenceMethod::SchwarzBic: return "schwarz_bic";
  }
  return "unknown";
}

EvidenceRoute parse_evidence_route(std::string_view text) {
  if (text == "auto") return EvidenceRoute::Auto;
  if (text == "exact") return EvidenceRoute::Exact;
  if (text == "mc" || text == "monte_carlo") return EvidenceRoute::MonteCarlo;
  throw DomainError("evidence method must be auto, exact or mc (got '" + std::string(text) + "')");
}

EvidenceResult log_evidence(std::span<const SegmentPrior> segments, std::span<const double> data,
                            const EvidenceConfig& config) {
  if (segments.empty()) throw DomainError("a model needs at least one segment");
  const int k = static_cast<int>(segments.size()) - 1;
  if (k > 2) throw DomainError("evidence is available for at most two change points");
  check_data(data, k);
  const int n = static_cast<int>(data.size());
  const Tables tables = build_tables(segments, data, config);

  EvidenceResult r;
  const Scan full = scan_locations(tables, n, config.threads);
  r.log_evidence = full.log_evidence;
  if (tables.sampled) {
    r.method = EvidenceMethod::MonteCarlo;
    const std::vector<double>& batch = full.batch_log_evidence;
    double se = 0.0;
    const double hi = *std::max_element(batch.begin(), batch.end());
    if (batch.size() >= 2 && std::isfinite(hi)) {
      // Delta method: se(log Z) ~ se(Z) / Z with Z estimated by batch means.
      std::vector<double> w;
      for (double b : batch) w.push_back(std::exp(b - hi));
      const MeanSe ms = mean_and_se(w);
      se = ms.se / ms.mean;
    }
    r.mc_se = se;
  } else {
    r.method = tables.all_conjugate ? EvidenceMethod::ConjugateExact : EvidenceMethod::ExactEnumeration;
  }
  if (r.log_evidence == -kInf) {
    r.diagnostic = "every location vector has zero likelihood: some observation lies outside the support of "
                   "a segment family";
    for (const auto& sp : segments) {
      try {
        validate_sample(sp.family, data);
      } catch (const DataError& e) {
        r.diagnostic += "; " + std::string(e.what());
        break;
      }
    }
  }
  fill_location_summaries(r, full, n, k, config);
  return r;
}

EvidenceResult mc_log_evidence(std::span<const SegmentPrior> segments, std::span<const double> data,
                               int draws, std::uint64_t seed, int threads) {
  if (draws < 100) throw DomainError("Monte Carlo evidence needs at least 100 draws");
  EvidenceConfig cfg;
  cfg.route = EvidenceRoute::MonteCarlo;
  cfg.draws = draws;
  cfg.seed = seed;
  cfg.threads = threads;
  return log_evidence(segments, data, cfg);
}

DiscretePrior<LocationVector> location_posterior(std::span<const SegmentPrior> segments,
                                                 std::span<const double> data, const EvidenceConfig& config) {
  if (segments.size() < 2) throw DomainError("location posterior needs k >= 1");
  EvidenceConfig cfg = config;
  cfg.keep_location_posterior = true;
  cfg.posterior_limit = std::numeric_limits<std::size_t>::max();
  EvidenceResult r = log_evidence(segments, data, cfg);
  if (!r.location_posterior) {
    throw InfeasibleError("location posterior undefined: " + r.diagnostic);
  }
  return std::move(*r.location_posterior);
}

// ---------------------------------------------------------------------------
// Schwarz approximation

namespace {

struct SegmentMle {
  double log_likelihood = -kInf;
  std::array<double, 2> theta{};
};

class MleTable {
public:
  MleTable(Family family, std::span<const double> data) : family_(family), data_(data.begin(), data.end()) {
    if (family == Family::Normal || family == Family::Beta) {
      throw EstimationError(std::string(family_name(family)) + " is not a sampling family for the Schwarz scan");
    }
    const std::size_t n = data.size();
    sx_.assign(n + 1, 0.0);
    slx_.assign(n + 1, 0.0);
    slx2_.assign(n + 1, 0.0);
    slf_.assign(n + 1, 0.0);
    bad_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = data[i];
      bool ok = true;
      try {
        validate_sample(family, data.subspan(i, 1));
      } catch (const DataError&) {
        ok = false;
      }
      const double lx = ok && x > 0.0 ? std::log(x) : 0.0;
      sx_[i + 1] = sx_[i] + (ok ? x : 0.0);
      slx_[i + 1] = slx_[i] + lx;
      slx2_[i + 1] = slx2_[i] + lx * lx;
      slf_[i + 1] = slf_[i] + (ok && is_discrete(family) ? std::lgamma(x + 1.0) : 0.0);
      bad_[i + 1] = bad_[i] + (ok ? 0 : 1);
    }
  }

  SegmentMle fit(int a, int b) const {
    SegmentMle out;
    const int len = b - a;
    if (len < 2 || bad_[b] != bad_[a]) return out;
    const double L = len;
    const double s = sx_[b] - sx_[a];
    const double sl = slx_[b] - slx_[a];
    switch (family_) {
      case Family::Poisson: {
        const double rate = s / L;
        out.log_likelihood = (s > 0.0 ? s * std::log(rate) : 0.0) - s - (slf_[b] - slf_[a]);
        out.theta = {std::max(rate, std::numeric_limits<double>::min()), 0.0};
        break;
      }
      case Family::Geometric: {
        const double p = 1.0 / (1.0 + s / L);
        out.log_likelihood = L * std::log(p) + (s > 0.0 ? s * std::log1p(-p) : 0.0);
        out.theta = {std::min(p, 1.0 - 1e-16), 0.0};
        break;
      }
      case Family::LogNormal: {
        const double mu = sl / L;
        const double var = (slx2_[b] - slx2_[a]) / L - mu * mu;
        if (!(var > 1e-12 * (1.0 + mu * mu))) return out;
        out.log_likelihood = -sl - 0.5 * L * std::log(2.0 * std::numbers::pi * var) - 0.5 * L;
        out.theta = {mu, 1.0 / var};
        break;
      }
      case Family::Gamma: {
        const double mean = s / L;
        const double c = std::log(mean) - sl / L;
        if (!(c > 1e-12)) return out;
        auto f = [c](double u) {
          const double a = std::exp(u);
          return std::log(a) - boost::math::digamma(a) - c;
        };
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(50);
        const auto [l, r] = boost::math::tools::toms748_solve(f, std::log(1e-10), std::log(1e14), tol, iters);
        const double alpha = std::exp(0.5 * (l + r));
        const double beta = alpha / mean;
        out.log_likelihood = L * (alpha * std::log(beta) - std::lgamma(alpha)) + (alpha - 1.0) * sl - beta * s;
        out.theta = {alpha, beta};
        break;
      }
      case Family::Weibull: return fit_weibull(a, b);
      case Family::StudentT: {
        for (int nu = 2; nu <= 200; ++nu) {
          const DistributionSpec d = DistributionSpec::student_t(nu);
          double ll = 0.0;
          for (int i = a; i < b; ++i) ll += log_density(d, data_[i]);
          if (ll > out.log_likelihood) {
            out.log_likelihood = ll;
            out.theta = {static_cast<double>(nu), 0.0};
          }
        }
        break;
      }
      default: break;
    }
    return out;
  }

private:
  SegmentMle fit_weibull(int a, int b) const {
    SegmentMle out;
    const double L = b - a;
    const double zbar = (slx_[b] - slx_[a]) / L;
    double zmax = -kInf, zspread = 0.0;
    for (int i = a; i < b; ++i) {
      const double z = std::log(data_[i]) - zbar;
      zmax = std::max(zmax, z);
      zspread = std::max(zspread, std::abs(z));
    }
    if (!(zspread > 1e-10)) return out;
    // Profile score in log k: weighted mean of z under weights x^k, minus 1/k.
    auto sums = [&](double k, double& sw, double& swz) {
      sw = 0.0;
      swz = 0.0;
      for (int i = a; i < b; ++i) {
        const double z = std::log(data_[i]) - zbar;
        const double w = std::exp(k * (z - zmax));
        sw += w;
        swz += w * z;
      }
    };
    auto score = [&](double u) {
      const double k = std::exp(u);
      double sw, swz;
      sums(k, sw, swz);
      return swz / sw - 1.0 / k;
    };
    double lo = std::log(1e-3), hi = std::log(10.0);
    while (score(lo) > 0.0 && lo > std::log(1e-12)) lo -= 2.0;
    while (score(hi) < 0.0 && hi < std::log(1e8)) hi += 2.0;
    if (score(lo) > 0.0 || score(hi) < 0.0) {
      throw EstimationError("Weibull shape estimate for observations " + std::to_string(a + 1) + ".." +
                            std::to_string(b) + " did not bracket");
    }
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(48);
    const auto [l, r] = boost::math::tools::toms748_solve(score, lo, hi, tol, iters);
    const double k = std::exp(0.5 * (l + r));
    double sw, swz;
    sums(k, sw, swz);
    // sum e^{k z} = sw * e^{k zmax}
    const double log_mean_pow = std::log(sw / L) + k * zmax;
    out.log_likelihood = L * std::log(k) - L * log_mean_pow - L * zbar - L;
    const double lambda = std::exp(zbar + log_mean_pow / k);
    out.theta = {lambda, k};
    return out;
  }

  Family family_;
  std::vector<double> data_;
  std::vector<double> sx_, slx_, slx2_, slf_;
  std::vector<int> bad_;
};

int continuous_dimension(Family f) { return f == Family::StudentT ? 0 : static_cast<int>(arity(f)); }

DistributionSpec to_spec(Family f, const SegmentMle& m) {
  return DistributionSpec(f, std::span<const double>(m.theta.data(), arity(f)));
}

}  // namespace

SchwarzFit schwarz_fit(std::span<const Family> families, std::span<const double> data, int threads) {
  const int k = static_cast<int>(families.size()) - 1;
  if (k < 0 || k > 2) throw DomainError("the Schwarz scan supports 0, 1 or 2 change points");
  check_data(data, k);
  const int n = static_cast<int>(data.size());
  std::vector<MleTable> tables;
  for (Family f : families) tables.emplace_back(f, data);

  SchwarzFit fit;
  fit.families.assign(families.begin(), families.end());
  for (Family f : families) fit.dimension += continuous_dimension(f);
  fit.log_likelihood = -kInf;
  std::vector<int> best_m;
  if (k == 0) {
    fit.log_likelihood = tables[0].fit(0, n).log_likelihood;
  } else if (k == 1) {
    for (int m = 2; m <= n - 2; ++m) {
      const double v = tables[0].fit(0, m).log_likelihood + tables[1].fit(m, n).log_likelihood;
      if (v > fit.log_likelihood) {
        fit.log_likelihood = v;
        best_m = {m};
      }
    }
  } else {
    std::vector<double> first(n, -kInf), last(n, -kInf);
    parallel_rows(n, threads, [&](int m, int) {
      if (m < 1) return;
      first[m] = tables[0].fit(0, m).log_likelihood;
      last[m] = tables[2].fit(m, n).log_likelihood;
    });
    struct Best {
      double v = -kInf;
      int m1 = 0, m2 = 0;
    };
    const int t = std::clamp(threads, 1, std::max(1, n));
    std::vector<Best> per(t);
    parallel_rows(n, t, [&](int m1, int w) {
      if (m1 < 2 || first[m1] == -kInf) return;
      for (int m2 = m1 + 2; m2 <= n - 2; ++m2) {
        if (last[m2] == -kInf) continue;
        const double v = first[m1] + tables[1].fit(m1, m2).log_likelihood + last[m2];
        Best& b = per[w];
        if (v > b.v || (v == b.v && (m1 < b.m1 || (m1 == b.m1 && m2 < b.m2)))) b = {v, m1, m2};
      }
    });
    Best best;
    for (const Best& b : per) {
      if (b.v > best.v || (b.v == best.v && b.v != -kInf && (b.m1 < best.m1 || (b.m1 == best.m1 && b.m2 < best.m2)))) {
        best = b;
      }
    }
    fit.log_likelihood = best.v;
    if (best.v != -kInf) best_m = {best.m1, best.m2};
  }
  if (fit.log_likelihood == -kInf) {
    throw EstimationError("no admissible segmentation has a finite maximised likelihood");
  }
  fit.locations = LocationVector(best_m, n);
  for (int s = 0; s <= k; ++s) {
    fit.estimates.push_back(to_spec(families[s], tables[s].fit(fit.locations.boundary(s), fit.locations.boundary(s + 1))));
  }
  return fit;
}

double schwarz_log_bayes_factor(const SchwarzFit& i, const SchwarzFit& j, int n) {
  return (i.log_likelihood - j.log_likelihood) - 0.5 * (i.dimension - j.dimension) * std::log(static_cast<double>(n));
}

double schwarz_log_bayes_factor(std::span<const Family> model_i, std::span<const Family> model_j,
                                std::span<const double> data) {
  const SchwarzFit a = schwarz_fit(model_i, data);
  const SchwarzFit b = schwarz_fit(model_j, data);
  return schwarz_log_bayes_factor(a, b, static_cast<int>(data.size()));
}

std::vector<double> posterior_model_probs(std::span<const double> model_priors,
                                          std::span<const double> log_evidences) {
  if (model_priors.size() != log_evidences.size() || model_priors.size() < 2) {
    throw DomainError("need matching prior and evidence vectors with at least two models");
  }
  double total = 0.0;
  for (double p : model_priors) {
    if (!(p >= 0.0)) throw DomainError("model priors must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("model priors must sum to one");
  std::vector<double> logp(model_priors.size());
  for (std::size_t i = 0; i < logp.size(); ++i) logp[i] = std::log(model_priors[i]) + log_evidences[i];
  const double lse = log_sum_exp(logp);
  if (!std::isfinite(lse)) {
    throw InfeasibleError("posterior undefined: every model has zero prior-weighted evidence");
  }
  std::vector<double> post(logp.size());
  for (std::size_t i = 0; i < post.size(); ++i) post[i] = std::exp(logp[i] - lse);
  return post;
}

}  // namespace lbcp
