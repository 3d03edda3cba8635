#include "lbcp/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include "lbcp/errors.hpp"
#include "lbcp/numerics.hpp"

namespace lbcp {

std::string_view model_prior_kind_name(ModelPriorKind kind) {
  return kind == ModelPriorKind::LossBased ? "loss_based" : "uniform";
}

ModelPriorKind parse_model_prior_kind(std::string_view text) {
  if (text == "loss_based" || text == "loss-based") return ModelPriorKind::LossBased;
  if (text == "uniform") return ModelPriorKind::Uniform;
  throw ConfigError("model prior must be loss_based or uniform (got '" + std::string(text) + "')");
}

std::string_view analysis_method_name(AnalysisMethod method) {
  switch (method) {
    case AnalysisMethod::Auto: return "auto";
    case AnalysisMethod::Exact: return "exact";
    case AnalysisMethod::MonteCarlo: return "mc";
    case AnalysisMethod::Bic: return "bic";
  }
  return "auto";
}

AnalysisMethod parse_analysis_method(std::string_view text) {
  if (text == "auto") return AnalysisMethod::Auto;
  if (text == "exact") return AnalysisMethod::Exact;
  if (text == "mc" || text == "monte_carlo") return AnalysisMethod::MonteCarlo;
  if (text == "bic" || text == "schwarz") return AnalysisMethod::Bic;
  throw ConfigError("method must be auto, exact, mc or bic (got '" + std::string(text) + "')");
}

Scenario4Variant parse_scenario4_variant(std::string_view text) {
  if (text == "matched") return Scenario4Variant::Matched;
  if (text == "literal") return Scenario4Variant::Literal;
  throw ConfigError("variant must be matched or literal (got '" + std::string(text) + "')");
}

namespace {

SegmentPrior segment(Family f, std::initializer_list<const char*> params) {
  std::vector<ParamPrior> p;
  for (const char* s : params) p.push_back(ParamPrior::parse(s));
  return SegmentPrior(f, std::move(p));
}

SegmentPrior fixed_segment(const DistributionSpec& d) {
  std::vector<ParamPrior> p;
  for (double v : d.params()) p.push_back(ParamPrior::fixed(v));
  return SegmentPrior(d.family(), std::move(p));
}

std::vector<int> full_breaks(int scenario, int n) {
  switch (scenario) {
    case 1: return {n / 2};
    case 2: return {n / 2, n * 7 / 10};
    case 3: return {static_cast<int>(std::lround(n / 3.0)), static_cast<int>(std::lround(2.0 * n / 3.0))};
    default:
      if (n == 500) return {170, 340};
      if (n == 1500) return {500, 1000};
      return {static_cast<int>(std::lround(n / 3.0)), static_cast<int>(std::lround(2.0 * n / 3.0))};
  }
}

[[noreturn]] void rethrow_with_context(std::exception_ptr e, const std::string& where) {
  try {
    std::rethrow_exception(e);
  } catch (const AccuracyError& x) {
    throw AccuracyError(where + ": " + x.what(), x.achieved_bound());
  } catch (const DataError& x) {
    throw DataError(where + ": " + x.what());
  } catch (const ParameterDomainError& x) {
    throw ParameterDomainError(where + ": " + x.what());
  } catch (const UnsupportedPairError& x) {
    throw UnsupportedPairError(where + ": " + x.what());
  } catch (const ConfigError& x) {
    throw ConfigError(where + ": " + x.what());
  } catch (const InfeasibleError& x) {
    throw InfeasibleError(where + ": " + x.what());
  } catch (const PriorUndefinedError& x) {
    throw PriorUndefinedError(where + ": " + x.what());
  } catch (const EstimationError& x) {
    throw EstimationError(where + ": " + x.what());
  } catch (const std::invalid_argument& x) {
    throw DomainError(where + ": " + x.what());
  }
}

template <class Body>
void for_each_index(int count, int threads, Body&& body) {
  threads = std::clamp(threads, 1, std::max(1, count));
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](int i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads == 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < count; i += threads) guarded(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < count; ++i) {
    if (errors[i]) rethrow_with_context(errors[i], "replicate " + std::to_string(i));
  }
}

struct EvidenceTable {
  std::vector<ReplicateRecord> records;
  std::vector<std::string> methods;
};

EvidenceTable compute_evidence(const ScenarioSetup& setup, const ScenarioConfig& cfg) {
  const int models = setup.priors.model_count();
  const int R = cfg.replicates;
  const int outer = R > 1 ? cfg.threads : 1;
  const int inner = R > 1 ? 1 : cfg.threads;
  EvidenceTable t;
  t.records.resize(R);
  std::vector<std::vector<std::string>> methods(R);
  for_each_index(R, outer, [&](int r) {
    const Sample x = simulate_replicate(setup, cfg.seed, r);
    ReplicateRecord& rec = t.records[r];
    rec.index = r;
    rec.data_hash = data_hash(x);
    EvidenceConfig ec;
    ec.route = cfg.evidence_route;
    ec.draws = cfg.evidence_draws;
    ec.threads = inner;
    ec.seed = make_stream(cfg.seed, {stream::evidence, static_cast<std::uint64_t>(r)})();
    for (int j = 0; j < models; ++j) {
      const std::vector<SegmentPrior> segs = setup.priors.model(j);
      const EvidenceResult e = log_evidence(segs, x, ec);
      rec.log_evidence.push_back(e.log_evidence);
      rec.mc_se.push_back(e.mc_se.value_or(std::numeric_limits<double>::quiet_NaN()));
      methods[r].emplace_back(evidence_method_name(e.method));
      if (j == setup.true_model) rec.map_locations = e.map_locations;
    }
  });
  t.methods = methods.front();
  return t;
}

FrequencyReport summarize(const ScenarioSetup& setup, const ScenarioConfig& cfg, ModelPriorKind kind,
                          const ModelPriorResult& prior, const EvidenceTable& ev) {
  const int models = setup.priors.model_count();
  FrequencyReport rep;
  rep.scenario = setup.scenario;
  rep.n = setup.n;
  rep.replicates = cfg.replicates;
  rep.seed = cfg.seed;
  rep.true_model = setup.true_model;
  rep.prior_kind = kind;
  rep.model_prior = prior;
  rep.evidence_methods = ev.methods;
  rep.records = ev.records;
  rep.wins.assign(models, 0);
  rep.mean_posterior.assign(models, 0.0);
  rep.var_posterior.assign(models, 0.0);
  for (ReplicateRecord& rec : rep.records) {
    try {
      rec.posterior = posterior_model_probs(prior.probs, rec.log_evidence);
    } catch (...) {
      rethrow_with_context(std::current_exception(), "replicate " + std::to_string(rec.index));
    }
    rec.winner = static_cast<int>(std::max_element(rec.posterior.begin(), rec.posterior.end()) - rec.posterior.begin());
    rep.wins[rec.winner] += 1;
  }
  const double R = cfg.replicates;
  for (int j = 0; j < models; ++j) {
    double s = 0.0;
    for (const auto& rec : rep.records) s += rec.posterior[j];
    const double mean = s / R;
    double ss = 0.0;
    for (const auto& rec : rep.records) ss += (rec.posterior[j] - mean) * (rec.posterior[j] - mean);
    rep.mean_posterior[j] = mean;
    rep.var_posterior[j] = R > 1 ? ss / (R - 1.0) : 0.0;
  }
  return rep;
}

ModelPriorResult scenario_model_prior(const ScenarioSetup& setup, const ScenarioConfig& cfg, ModelPriorKind kind) {
  if (kind == ModelPriorKind::Uniform) return uniform_model_prior(setup.priors.model_count());
  McConfig mc;
  mc.draws = cfg.prior_draws;
  mc.seed = cfg.seed;
  mc.threads = cfg.threads;
  return model_prior_probabilities(setup.priors, setup.n, mc);
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (cfg.prior_draws < 1) throw ConfigError("prior draws must be at least 1");
  if (cfg.evidence_draws < 2) throw ConfigError("evidence draws must be at least 2");
}

}  // namespace

ScenarioSetup scenario_setup(const ScenarioConfig& cfg) {
  validate(cfg);
  static constexpr int default_n[] = {0, 100, 100, 300, 500};
  if (cfg.scenario < 1 || cfg.scenario > 4) throw ConfigError("scenario must be 1, 2, 3 or 4");
  const int n = cfg.n > 0 ? cfg.n : default_n[cfg.scenario];
  std::vector<SegmentPrior> priors;
  std::vector<DistributionSpec> truths;
  LocationPriorKind location = LocationPriorKind::Uniform;
  switch (cfg.scenario) {
    case 1:
      priors = {segment(Family::Geometric, {"beta:2,2"}), segment(Family::Poisson, {"gamma:3,1"})};
      truths = {DistributionSpec::geometric(0.8), DistributionSpec::poisson(3.0)};
      location = LocationPriorKind::ShiftedBinomial;
      break;
    case 2:
      priors = {segment(Family::Weibull, {"gamma:1.5,1", "gamma:5,1"}),
                segment(Family::LogNormal, {"normal:0.05,1", "gamma:16,1"}),
                segment(Family::Gamma, {"gamma:10,1", "gamma:0.2,0.1"})};
      truths = {DistributionSpec::weibull(1.5, 5.0), DistributionSpec::lognormal(0.05, 16.0),
                DistributionSpec::gamma(10.0, 2.0)};
      break;
    case 3:
      priors = {segment(Family::StudentT, {"2+poisson:30"}), segment(Family::StudentT, {"2+poisson:3"}),
                segment(Family::StudentT, {"2+poisson:8"})};
      truths = {DistributionSpec::student_t(30), DistributionSpec::student_t(3), DistributionSpec::student_t(8)};
      break;
    default:
      if (cfg.variant == Scenario4Variant::Matched) {
        truths = {moment_match(Family::Weibull, 5.0, 2.5), moment_match(Family::LogNormal, 5.0, 2.5),
                  moment_match(Family::Gamma, 5.0, 2.5)};
      } else {
        truths = {DistributionSpec::weibull(1.5, 5.0), DistributionSpec::lognormal(0.05, 16.0),
                  DistributionSpec::gamma(10.0, 2.0)};
      }
      for (const auto& d : truths) priors.push_back(fixed_segment(d));
      break;
  }
  NestedModelSequence seq(std::move(priors), location);
  const int true_model = cfg.true_model.value_or(seq.max_changes());
  if (true_model < 0 || true_model > seq.max_changes()) {
    throw ConfigError("true model must be between 0 and " + std::to_string(seq.max_changes()));
  }
  if (n < seq.model_count()) {
    throw ConfigError("n must be at least " + std::to_string(seq.model_count()) + " for scenario " +
                      std::to_string(cfg.scenario));
  }
  std::vector<int> breaks = full_breaks(cfg.scenario, n);
  breaks.resize(true_model);
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    const int lo = i == 0 ? 1 : breaks[i - 1] + 1;
    breaks[i] = std::clamp(breaks[i], lo, n - 1);
  }
  LocationVector(breaks, n);  // validates ordering and range
  return ScenarioSetup{cfg.scenario, n, std::move(seq), std::move(truths), true_model, std::move(breaks)};
}

Sample simulate_replicate(const ScenarioSetup& setup, std::uint64_t seed, int r) {
  Rng rng = make_stream(seed, {stream::data, static_cast<std::uint64_t>(r)});
  const LocationVector m(setup.breaks, setup.n);
  Sample x;
  x.reserve(setup.n);
  for (int s = 0; s <= m.k(); ++s) {
    for (int i = 0; i < m.segment_length(s); ++i) x.push_back(draw(setup.truths[s], rng));
  }
  return x;
}

std::uint64_t data_hash(std::span<const double> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : data) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

FrequencyReport run_scenario(const ScenarioConfig& cfg) {
  const ScenarioSetup setup = scenario_setup(cfg);
  const ModelPriorResult prior = scenario_model_prior(setup, cfg, cfg.model_prior);
  const EvidenceTable ev = compute_evidence(setup, cfg);
  return summarize(setup, cfg, cfg.model_prior, prior, ev);
}

PairedReport compare_priors_scenario4(int n, int replicates, std::uint64_t seed, int threads,
                                      Scenario4Variant variant) {
  ScenarioConfig cfg;
  cfg.scenario = 4;
  cfg.n = n;
  cfg.replicates = replicates;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.variant = variant;
  const ScenarioSetup setup = scenario_setup(cfg);
  const EvidenceTable ev = compute_evidence(setup, cfg);
  PairedReport out;
  out.loss_based = summarize(setup, cfg, ModelPriorKind::LossBased,
                             scenario_model_prior(setup, cfg, ModelPriorKind::LossBased), ev);
  out.uniform = summarize(setup, cfg, ModelPriorKind::Uniform,
                          scenario_model_prior(setup, cfg, ModelPriorKind::Uniform), ev);
  return out;
}

// ---------------------------------------------------------------------------
// Data ingestion

namespace {

struct Rows {
  LabeledSample sample;
  std::vector<int> lines;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::optional<double> to_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Rows read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  Rows rows;
  std::string line;
  int number = 0;
  bool first = true;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      fields.push_back(trim(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() > 2) throw DataError("expected one value or a label and a value in '" + path + "'", number);
    const auto value = to_number(fields.back());
    if (!value) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw DataError("malformed value '" + std::string(fields.back()) + "' in '" + path + "'", number);
    }
    if (columns != 0 && fields.size() != columns) {
      throw DataError("inconsistent column count in '" + path + "'", number);
    }
    columns = fields.size();
    first = false;
    if (!std::isfinite(*value)) throw DataError("non-finite value in '" + path + "'", number);
    rows.sample.values.push_back(*value);
    if (fields.size() == 2) rows.sample.labels.emplace_back(fields.front());
    rows.lines.push_back(number);
  }
  if (rows.sample.values.empty()) throw DataError("no data rows in '" + path + "'");
  return rows;
}

}  // namespace

LabeledSample read_series(const std::string& path) { return read_rows(path).sample; }

LabeledSample ingest_counts(const std::string& path) {
  Rows rows = read_rows(path);
  for (std::size_t i = 0; i < rows.sample.values.size(); ++i) {
    const double v = rows.sample.values[i];
    if (v < 0.0 || std::floor(v) != v) {
      throw DataError("count must be a non-negative integer in '" + path + "'", rows.lines[i]);
    }
  }
  return std::move(rows.sample);
}

LabeledSample abs_log_returns(std::span<const double> prices, double floor) {
  if (prices.size() < 2) throw DataError("need at least two prices");
  if (!(floor > 0.0)) throw DomainError("return floor must be positive");
  LabeledSample out;
  int floored = 0;
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (!(prices[t] > 0.0)) throw DataError("price " + std::to_string(t + 1) + " is not positive");
    if (t == 0) continue;
    double r = std::abs(std::log(prices[t] / prices[t - 1]));
    if (r < floor) {
      r = floor;
      ++floored;
    }
    out.values.push_back(r);
  }
  if (floored > 0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d zero absolute returns raised to %g", floored, floor);
    out.notes.emplace_back(buf);
  }
  return out;
}

LabeledSample ingest_prices_to_abs_log_returns(const std::string& path, double floor) {
  const Rows rows = read_rows(path);
  for (std::size_t i = 0; i < rows.sample.values.size(); ++i) {
    if (!(rows.sample.values[i] > 0.0)) throw DataError("price must be positive in '" + path + "'", rows.lines[i]);
  }
  LabeledSample out = abs_log_returns(rows.sample.values, floor);
  if (!rows.sample.labels.empty()) out.labels.assign(rows.sample.labels.begin() + 1, rows.sample.labels.end());
  return out;
}

// ---------------------------------------------------------------------------
// Analyses

AnalysisReport analyze(const NestedModelSequence& seq, const LabeledSample& data, const AnalysisOptions& opt) {
  const int models = seq.model_count();
  const int n = static_cast<int>(data.values.size());
  if (!data.labels.empty() && data.labels.size() != data.values.size()) {
    throw DataError("label count does not match value count");
  }
  AnalysisReport rep;
  rep.n = n;
  rep.prior_kind = opt.model_prior;
  rep.method = opt.method;
  rep.labels = data.labels;
  rep.notes = data.notes;

  ModelPriorResult prior;
  if (opt.model_prior == ModelPriorKind::Uniform) {
    prior = uniform_model_prior(models);
  } else {
    McConfig mc;
    mc.draws = opt.prior_draws;
    mc.seed = opt.seed;
    mc.threads = opt.threads;
    prior = model_prior_probabilities(seq, n, mc);
  }

  std::vector<double> log_ev;
  for (int j = 0; j < models; ++j) {
    ModelReport m;
    m.segments = seq.model(j);
    m.prior = prior.probs[j];
    m.raw_score = prior.raw_scores[j];
    if (opt.method == AnalysisMethod::Bic) {
      std::vector<Family> families;
      for (const auto& s : m.segments) families.push_back(s.family);
      const SchwarzFit fit = schwarz_fit(families, data.values, opt.threads);
      m.log_evidence = fit.log_likelihood - 0.5 * fit.dimension * std::log(static_cast<double>(n));
      m.method = std::string(evidence_method_name(EvidenceMethod::SchwarzBic));
      if (j > 0) m.map_locations = fit.locations;
      m.estimates = fit.estimates;
    } else {
      EvidenceConfig ec;
      ec.route = opt.method == AnalysisMethod::Exact        ? EvidenceRoute::Exact
                 : opt.method == AnalysisMethod::MonteCarlo ? EvidenceRoute::MonteCarlo
                                                            : EvidenceRoute::Auto;
      ec.draws = opt.evidence_draws;
      ec.seed = opt.seed;
      ec.threads = opt.threads;
      ec.keep_location_posterior = opt.keep_location_posterior;
      EvidenceResult e = log_evidence(m.segments, data.values, ec);
      m.log_evidence = e.log_evidence;
      m.method = std::string(evidence_method_name(e.method));
      m.mc_se = e.mc_se;
      m.map_locations = e.map_locations;
      m.location_marginals = std::move(e.location_marginals);
      m.location_posterior = std::move(e.location_posterior);
      m.diagnostic = e.diagnostic;
    }
    log_ev.push_back(m.log_evidence);
    rep.models.push_back(std::move(m));
  }
  const std::vector<double> post = posterior_model_probs(prior.probs, log_ev);
  for (int j = 0; j < models; ++j) rep.models[j].posterior = post[j];
  rep.log_bayes.assign(models, std::vector<double>(models, 0.0));
  for (int j = 0; j < models; ++j) {
    for (int i = 0; i < models; ++i) rep.log_bayes[j][i] = i == j ? 0.0 : log_ev[j] - log_ev[i];
  }
  return rep;
}

NestedModelSequence coal_models() {
  return NestedModelSequence({segment(Family::Poisson, {"gamma:2,1"}), segment(Family::Poisson, {"gamma:2,1"})});
}

NestedModelSequence sp500_models() {
  return NestedModelSequence({segment(Family::Weibull, {"gamma:1,1", "gamma:1,1"}),
                              segment(Family::LogNormal, {"normal:0,10", "gamma:1,1"}),
                              segment(Family::LogNormal, {"normal:0,10", "gamma:1,1"})});
}

AnalysisReport coal_mining_analysis(const LabeledSample& data, const AnalysisOptions& opt) {
  validate_sample(Family::Poisson, data.values);
  AnalysisReport rep = analyze(coal_models(), data, opt);
  rep.title = "coal_mining";
  return rep;
}

AnalysisReport sp500_analysis(const LabeledSample& data, const AnalysisOptions& opt) {
  validate_sample(Family::Weibull, data.values);
  AnalysisOptions o = opt;
  if (o.method == AnalysisMethod::Auto) o.method = AnalysisMethod::Bic;
  AnalysisReport rep = analyze(sp500_models(), data, o);
  rep.title = "sp500";
  return rep;
}

}  // namespace lbcp
