// Acceptance checks. Usage: acceptance [id ...]; with no ids every check runs.
// Prints one PASS/FAIL line per check and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lbcp/cp_priors.hpp"
#include "lbcp/divergence.hpp"
#include "lbcp/evidence.hpp"
#include "lbcp/experiments.hpp"
#include "lbcp/model_priors.hpp"
#include "lbcp/report.hpp"
#include "oracles.hpp"

using namespace lbcp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string data_file(const std::string& name) { return std::string(LBCP_DATA_DIR) + "/" + name; }

NestedModelSequence scenario_priors(int scenario, int n = 0) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.n = n;
  return scenario_setup(cfg).priors;
}

// Parameter lattice point t in (0, 1) mapped into a family's usual range.
DistributionSpec lattice_member(Family f, double t, double u) {
  auto lin = [](double lo, double hi, double s) { return lo + (hi - lo) * s; };
  auto geo = [](double lo, double hi, double s) { return lo * std::pow(hi / lo, s); };
  switch (f) {
    case Family::Geometric: return DistributionSpec::geometric(lin(0.1, 0.9, t));
    case Family::Poisson: return DistributionSpec::poisson(geo(0.3, 10, t));
    case Family::Gamma: return DistributionSpec::gamma(geo(0.5, 12, t), geo(0.2, 4, u));
    case Family::Weibull: return DistributionSpec::weibull(geo(0.3, 6, t), geo(0.6, 6, u));
    case Family::LogNormal: return DistributionSpec::lognormal(lin(-1, 2, t), geo(0.5, 20, u));
    case Family::Normal: return DistributionSpec::normal(lin(-3, 3, t), geo(0.3, 3, u));
    case Family::Beta: return DistributionSpec::beta(geo(0.6, 6, t), geo(0.6, 6, u));
    default: return DistributionSpec::student_t(2 + std::floor(28 * t));
  }
}

Outcome c01() {
  const Family all[] = {Family::Geometric, Family::Poisson,  Family::Gamma,  Family::Weibull,
                        Family::LogNormal, Family::StudentT, Family::Normal, Family::Beta};
  Outcome o;
  int pairs = 0, points = 0;
  double worst = 0, worst_abs = 0;
  std::string worst_at;
  for (Family fp : all) {
    for (Family fq : all) {
      if (!has_closed_form(fp, fq)) continue;
      ++pairs;
      for (int i = 0; i < 20; ++i) {
        // Two interleaved van der Corput-style coordinates per side.
        const double t1 = (i + 0.5) / 20, u1 = ((i * 7) % 20 + 0.5) / 20;
        const double t2 = ((i * 13 + 5) % 20 + 0.5) / 20, u2 = ((i * 3 + 11) % 20 + 0.5) / 20;
        const auto p = lattice_member(fp, t1, u1), q = lattice_member(fq, t2, u2);
        ++points;
        // Absolute below 1; above 1 the bound scales with the value, since an
        // absolute 1e-8 on a value of 1e7 is finer than double resolution.
        double diff;
        try {
          const double closed = *closed_form_kl(p, q);
          const double scale = std::max(1.0, closed);
          const double numeric = kl(p, q, 1e-9 * scale, KlRoute::Numeric).value;
          worst_abs = std::max(worst_abs, std::abs(closed - numeric));
          diff = std::abs(closed - numeric) / scale;
        } catch (const std::exception& e) {
          o.pass = false;
          o.detail += " " + to_string(p) + "||" + to_string(q) + " threw: " + e.what() + ";";
          continue;
        }
        if (diff > worst) {
          worst = diff;
          worst_at = to_string(p) + "||" + to_string(q);
        }
        if (!(diff <= 1e-8)) o.pass = false;
      }
    }
  }
  o.detail = std::to_string(pairs) + " closed forms x 20 points (" + std::to_string(points) +
             "), worst |closed-numeric|/max(1,closed) = " + fmt(worst, 3) + " at " + worst_at +
             ", worst absolute " + fmt(worst_abs, 3) + o.detail;
  return o;
}

Outcome c02() {
  Outcome o;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = std::uniform_int_distribution<int>(3, 8)(rng);
    const int k = std::uniform_int_distribution<int>(1, 2)(rng);
    std::vector<DistributionSpec> segs;
    std::vector<oracle::LogPmf> pmf;
    for (int s = 0; s <= k; ++s) {
      if (rng() % 2) {
        const double r = std::uniform_real_distribution<double>(0.05, 0.8)(rng);
        segs.push_back(DistributionSpec::poisson(r));
        pmf.push_back([r](int x) { return oracle::poisson_log_pmf(r, x); });
      } else {
        const double p = std::uniform_real_distribution<double>(0.55, 0.95)(rng);
        segs.push_back(DistributionSpec::geometric(p));
        pmf.push_back([p](int x) { return oracle::geometric_log_pmf(p, x); });
      }
    }
    const auto all = UniformLocationPrior(n, k).enumerate();
    const auto& a = all[rng() % all.size()];
    const auto& b = all[rng() % all.size()];
    std::vector<oracle::LogPmf> p, q;
    for (int i = 0; i < n; ++i) {
      p.push_back(pmf[a.segment_of(i)]);
      q.push_back(pmf[b.segment_of(i)]);
    }
    const double brute = oracle::joint_kl_bruteforce(p, q, 1e-18);
    const double decomposed = kl_between_location_vectors(a, b, segs);
    const double d = std::abs(brute - decomposed);
    worst = std::max(worst, d);
    if (!(d <= 1e-6)) {
      o.pass = false;
      o.detail += " seed " + std::to_string(seed) + ": " + fmt(decomposed, 10) + " vs " + fmt(brute, 10) + ";";
    }
  }
  o.detail = "10 instances (n<=8, k<=2), worst |decomposition-bruteforce| = " + fmt(worst, 3) + o.detail;
  return o;
}

Outcome c03() {
  Outcome o;
  double worst_u = 0, worst_s = 0;
  for (int n = 2; n <= 1000; ++n) {
    worst_u = std::max(worst_u, std::abs(two_model_prior_coefficient(LocationPriorKind::Uniform, n) - n / 2.0));
    worst_s = std::max(worst_s, std::abs(two_model_prior_coefficient(LocationPriorKind::ShiftedBinomial, n) -
                                         (2.0 * n - 2) / n));
  }
  o.pass = worst_u <= 1e-12 && worst_s <= 1e-12;
  o.detail = "n=2..1000, worst uniform dev " + fmt(worst_u, 3) + ", worst shifted-binomial dev " + fmt(worst_s, 3);
  return o;
}

McConfig mc(int draws) {
  McConfig m;
  m.draws = draws;
  m.seed = 20190101;
  m.threads = workers();
  return m;
}

Outcome c04() {
  const auto r = model_prior_probabilities(scenario_priors(1), 100, mc(5000));
  Outcome o;
  o.pass = std::abs(r.probs[0] - 0.47) <= 0.02 && std::abs(r.probs[1] - 0.53) <= 0.02;
  o.detail = "priors (" + fmt(r.probs[0], 4) + ", " + fmt(r.probs[1], 4) + "), target (0.47, 0.53) +/- 0.02";
  return o;
}

Outcome c05() {
  const auto r = model_prior_probabilities(scenario_priors(2), 100, mc(5000));
  const double tp[] = {0.27, 0.39, 0.34}, ts[] = {1.09, 1.60, 1.37};
  Outcome o;
  for (int j = 0; j < 3; ++j) {
    if (std::abs(r.probs[j] - tp[j]) > 0.03 || std::abs(r.raw_scores[j] - ts[j]) > 0.05) o.pass = false;
  }
  o.detail = "priors (" + fmt(r.probs[0], 3) + ", " + fmt(r.probs[1], 3) + ", " + fmt(r.probs[2], 3) +
             ") target (0.27, 0.39, 0.34); raw scores (" + fmt(r.raw_scores[0], 4) + ", " + fmt(r.raw_scores[1], 4) +
             ", " + fmt(r.raw_scores[2], 4) + ") target (1.09, 1.60, 1.37)";
  return o;
}

Outcome c06() {
  const auto r = model_prior_probabilities(scenario_priors(3), 300, mc(5000));
  Outcome o;
  o.pass = r.draws == 0 && r.probs.size() == 3;
  for (double p : r.probs) o.pass = o.pass && p == 1.0 / 3;
  o.detail = "draws " + std::to_string(r.draws) + ", priors (" + fmt(r.probs[0], 17) + ", " + fmt(r.probs[1], 17) +
             ", " + fmt(r.probs[2], 17) + ")";
  return o;
}

Outcome c07() {
  const auto w = moment_match(Family::Weibull, 5, 2.5);
  const auto l = moment_match(Family::LogNormal, 5, 2.5);
  const auto g = moment_match(Family::Gamma, 5, 2.5);
  const double wl = hellinger(w, l), wg = hellinger(w, g), lg = hellinger(l, g);
  Outcome o;
  o.pass = std::abs(wl - 0.1411996) <= 2e-3 && std::abs(wg - 0.09718282) <= 2e-3 &&
           std::abs(lg - 0.04899711) <= 2e-3;
  o.detail = "H(W,LN) " + fmt(wl, 7) + ", H(W,G) " + fmt(wg, 7) + ", H(LN,G) " + fmt(lg, 7);
  return o;
}

Outcome c08() {
  const auto r = coal_mining_analysis(ingest_counts(data_file("coal_mining.csv")));
  const double log10_b10 = r.log_bayes[1][0] / std::log(10.0);
  Outcome o;
  o.pass = std::abs(log10_b10 - std::log10(6.20e12)) <= 0.5 && r.models[1].posterior >= 0.999 &&
           r.models[1].method == "conjugate_exact";
  o.detail = "log10 B10 = " + fmt(log10_b10, 5) + " (target " + fmt(std::log10(6.20e12), 5) +
             " +/- 0.5), Pr(M1|x) = " + fmt(r.models[1].posterior, 8);
  return o;
}

Outcome c09() {
  ScenarioConfig cfg;
  cfg.scenario = 3;
  cfg.n = 300;
  cfg.replicates = 20;
  cfg.threads = workers();
  const auto r = run_scenario(cfg);
  Outcome o;
  o.pass = r.wins[2] >= 18 && r.mean_posterior[2] >= 0.6 && r.mean_posterior[2] <= 0.9;
  o.detail = "M2 wins " + std::to_string(r.wins[2]) + "/20 (need >= 18), mean Pr(M2|x) " +
             fmt(r.mean_posterior[2], 4) + " (need [0.6, 0.9]); wins (" + std::to_string(r.wins[0]) + ", " +
             std::to_string(r.wins[1]) + ", " + std::to_string(r.wins[2]) + ")";
  return o;
}

Outcome c10() {
  const auto small = compare_priors_scenario4(500, 20, 20190101, workers());
  const auto large = compare_priors_scenario4(1500, 10, 20190101, workers());
  Outcome o;
  o.pass = small.loss_based.wins[2] >= small.uniform.wins[2] && large.loss_based.wins[2] >= 8;
  o.detail = "n=500: loss-based " + std::to_string(small.loss_based.wins[2]) + "/20 vs uniform " +
             std::to_string(small.uniform.wins[2]) + "/20; n=1500: loss-based " +
             std::to_string(large.loss_based.wins[2]) + "/10 (uniform " + std::to_string(large.uniform.wins[2]) +
             "/10)";
  return o;
}

Outcome c11() {
  const std::vector<double> priors = {0.47, 0.53};
  const std::vector<double> ev = {std::log(12.39), 0.0};
  const double p0 = posterior_model_probs(priors, ev)[0];
  double worst = 0;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-700, 700);
  for (int t = 0; t < 100; ++t) {
    const std::vector<double> pr = {0.2, 0.5, 0.3};
    std::vector<double> e = {u(rng), u(rng), u(rng)};
    const auto a = posterior_model_probs(pr, e);
    const double shift = u(rng);
    for (double& x : e) x += shift;
    const auto b = posterior_model_probs(pr, e);
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  Outcome o;
  o.pass = std::abs(p0 - 0.92) <= 0.005 && worst <= 1e-12;
  o.detail = "Pr(M0|x) = " + fmt(p0, 5) + " (target 0.92 +/- 0.005), worst log-shift change " + fmt(worst, 3);
  return o;
}

// Property suite over seeds 1..10.
Outcome c12() {
  Outcome o;
  auto fail = [&](const std::string& what) {
    o.pass = false;
    o.detail += " " + what + ";";
  };
  int checks = 0;
  const SegmentPrior pg(Family::Poisson, {ParamPrior::parse("gamma:2,1")});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.2, 6);
    const std::string tag = "seed " + std::to_string(seed) + ": ";

    // Normalisation.
    std::vector<DistributionSpec> models;
    for (int i = 0; i < 4; ++i) models.push_back(DistributionSpec::poisson(u(rng)));
    if (std::abs(loss_based_prior(models).total() - 1) > 1e-12) fail(tag + "loss-based prior total");
    const int n = std::uniform_int_distribution<int>(10, 50)(rng);
    if (std::abs(shifted_binomial_prior(n).total() - 1) > 1e-12) fail(tag + "shifted binomial total");
    if (std::abs(UniformLocationPrior(n, 2).as_discrete().total() - 1) > 1e-12) fail(tag + "location prior total");
    ++checks;

    // Data for the evidence checks: conjugate models, n <= 50.
    Rng drng = make_stream(seed, {1});
    std::vector<double> x;
    const int m = n / 2;
    for (const auto& v : sample(DistributionSpec::poisson(u(rng)), m, drng)) x.push_back(v);
    for (const auto& v : sample(DistributionSpec::poisson(u(rng)), n - m, drng)) x.push_back(v);
    for (int k = 0; k <= 2; ++k) {
      const std::vector<SegmentPrior> segs(k + 1, pg);
      EvidenceConfig cfg;
      cfg.keep_location_posterior = k > 0;
      const auto exact = log_evidence(segs, x, cfg);
      if (k > 0 && std::abs(exact.location_posterior->total() - 1) > 1e-12) fail(tag + "location posterior total");
      const auto mc1 = mc_log_evidence(segs, x, 4000, seed);
      const auto mc2 = mc_log_evidence(segs, x, 4000, seed);
      if (mc1.log_evidence != mc2.log_evidence) fail(tag + "mc evidence not reproducible");
      if (std::abs(mc1.log_evidence - exact.log_evidence) > 3 * *mc1.mc_se) {
        fail(tag + "k=" + std::to_string(k) + " |mc-exact| = " + fmt(std::abs(mc1.log_evidence - exact.log_evidence), 3) +
             " > 3 se = " + fmt(3 * *mc1.mc_se, 3));
      }
      ++checks;
    }

    // Posterior normalisation and determinism of a seeded scenario run.
    ScenarioConfig sc;
    sc.scenario = 1;
    sc.n = 60;
    sc.replicates = 2;
    sc.seed = seed;
    sc.prior_draws = 300;
    const auto r1 = run_scenario(sc);
    sc.threads = 3;
    const auto r2 = run_scenario(sc);
    if (frequency_json(r1, {true}) != frequency_json(r2, {true})) fail(tag + "scenario report differs");
    for (const auto& rec : r1.records) {
      double s = 0;
      for (double p : rec.posterior) s += p;
      if (std::abs(s - 1) > 1e-12) fail(tag + "posterior total");
    }
    ++checks;

    // Schwarz antisymmetry.
    Rng brng = make_stream(seed, {2});
    auto y = sample(DistributionSpec::weibull(u(rng), u(rng)), 30, brng);
    const auto y2 = sample(DistributionSpec::lognormal(u(rng) - 3, u(rng)), 30, brng);
    y.insert(y.end(), y2.begin(), y2.end());
    const std::vector<Family> a = {Family::Weibull}, b = {Family::Weibull, Family::LogNormal},
                              c = {Family::Weibull, Family::LogNormal, Family::LogNormal};
    if (schwarz_log_bayes_factor(a, b, y) != -schwarz_log_bayes_factor(b, a, y) ||
        schwarz_log_bayes_factor(b, c, y) != -schwarz_log_bayes_factor(c, b, y)) {
      fail(tag + "Schwarz antisymmetry");
    }
    ++checks;

    // Divergence invariants.
    const auto p = DistributionSpec::gamma(u(rng), u(rng));
    const auto q = DistributionSpec::weibull(u(rng), u(rng));
    if (std::abs(hellinger(p, q) - hellinger(q, p)) > 1e-10) fail(tag + "Hellinger symmetry");
    if (kl(p, q).value < -1e-12) fail(tag + "KL negative");
    const double inf = inf_kl(p, Family::Weibull).value;
    for (int i = 0; i < 50; ++i) {
      if (inf > kl(p, DistributionSpec::weibull(u(rng), u(rng))).value + 1e-9) {
        fail(tag + "inf_kl above a family member");
        break;
      }
    }
    ++checks;
  }
  o.detail = std::to_string(checks) + " property groups over seeds 1..10" + o.detail;
  return o;
}

Outcome sp500() {
  const auto r = sp500_analysis(ingest_prices_to_abs_log_returns(data_file("sp500_2008_2011.csv")));
  Outcome o;
  const double p2 = r.models[2].posterior;
  o.pass = p2 >= 0.95 && p2 > r.models[0].posterior && p2 > r.models[1].posterior &&
           std::abs(r.models[1].prior - r.models[2].prior) <= 0.02;
  o.detail = "n = " + std::to_string(r.n) + ", posteriors (" + fmt(r.models[0].posterior, 4) + ", " +
             fmt(r.models[1].posterior, 4) + ", " + fmt(p2, 6) + "), priors (" + fmt(r.models[0].prior, 3) + ", " +
             fmt(r.models[1].prior, 3) + ", " + fmt(r.models[2].prior, 3) + "), log B02 = " +
             fmt(r.log_bayes[0][2], 4) + ", log B12 = " + fmt(r.log_bayes[1][2], 4);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Check> checks = {
      {"c01", "closed-form KL vs numeric oracle", 30, c01},
      {"c02", "segment decomposition vs brute-force joint KL", 120, c02},
      {"c03", "two-model prior coefficients", 5, c03},
      {"c04", "scenario 1 model priors", 60, c04},
      {"c05", "scenario 2 model priors", 300, c05},
      {"c06", "scenario 3 model priors uniform without draws", 5, c06},
      {"c07", "Hellinger distances of the moment-matched triple", 30, c07},
      {"c08", "coal-mining exact analysis", 10, c08},
      {"c09", "scenario 3 frequency study (R=20, n=300)", 1800, c09},
      {"c10", "scenario 4 paired prior comparison", 1800, c10},
      {"c11", "posterior algebra", 5, c11},
      {"c12", "property suite over 10 seeds", 600, c12},
      {"sp500", "S&P 500 ordering substitute", 60, sp500},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  bool all_pass = true;
  int ran = 0;
  for (const auto& c : checks) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget_seconds) + " s budget";
    }
    all_pass = all_pass && o.pass;
    std::printf("%s %s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown check id\n");
    return 2;
  }
  return all_pass ? 0 : 1;
}
