#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lbcp/evidence.hpp"
#include "lbcp/model_priors.hpp"
#include "lbcp/model_spec.hpp"

namespace lbcp {

enum class ModelPriorKind { LossBased, Uniform };
std::string_view model_prior_kind_name(ModelPriorKind kind);
ModelPriorKind parse_model_prior_kind(std::string_view text);

enum class AnalysisMethod { Auto, Exact, MonteCarlo, Bic };
std::string_view analysis_method_name(AnalysisMethod method);
AnalysisMethod parse_analysis_method(std::string_view text);

/// Which sampling laws Scenario 4 draws from.
enum class Scenario4Variant { Matched, Literal };
Scenario4Variant parse_scenario4_variant(std::string_view text);

struct ScenarioConfig {
  int scenario = 3;
  int n = 0;  // 0 selects the scenario's default size
  int replicates = 1;
  std::uint64_t seed = 20190101;
  std::optional<int> true_model;  // default: the largest model
  Scenario4Variant variant = Scenario4Variant::Matched;
  ModelPriorKind model_prior = ModelPriorKind::LossBased;
  EvidenceRoute evidence_route = EvidenceRoute::Auto;
  int prior_draws = 5000;
  int evidence_draws = 2000;
  int threads = 1;
};

/// Fully resolved scenario: parameter priors, truth and break locations.
struct ScenarioSetup {
  int scenario = 0;
  int n = 0;
  NestedModelSequence priors;
  std::vector<DistributionSpec> truths;  // one per segment of the largest model
  int true_model = 0;
  std::vector<int> breaks;  // true_model entries, strictly increasing, in [1, n-1]
};

ScenarioSetup scenario_setup(const ScenarioConfig& cfg);
/// Replicate r's data, from substream (seed, data, r).
Sample simulate_replicate(const ScenarioSetup& setup, std::uint64_t seed, int r);
std::uint64_t data_hash(std::span<const double> data);

struct ReplicateRecord {
  int index = 0;
  std::uint64_t data_hash = 0;
  std::vector<double> log_evidence;
  std::vector<double> mc_se;  // NaN where the evidence is exact
  std::vector<double> posterior;
  int winner = 0;
  std::optional<LocationVector> map_locations;  // under the true model
};

struct FrequencyReport {
  int scenario = 0;
  int n = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  int true_model = 0;
  ModelPriorKind prior_kind = ModelPriorKind::LossBased;
  ModelPriorResult model_prior;
  std::vector<std::string> evidence_methods;  // per model
  std::vector<double> mean_posterior;
  std::vector<double> var_posterior;  // sample variance over replicates (R-1 denominator)
  std::vector<int> wins;              // replicates where the model has the largest posterior
  std::vector<ReplicateRecord> records;
};

FrequencyReport run_scenario(const ScenarioConfig& cfg);

struct PairedReport {
  FrequencyReport loss_based;
  FrequencyReport uniform;
};

/// Scenario 4 analysed under both model priors on the same simulated data.
PairedReport compare_priors_scenario4(int n, int replicates, std::uint64_t seed, int threads = 1,
                                      Scenario4Variant variant = Scenario4Variant::Matched);

/// Values with optional labels (first column of a two-column file).
struct LabeledSample {
  Sample values;
  std::vector<std::string> labels;  // empty or one per value
  std::vector<std::string> notes;
};

/// CSV with one value per row, optional header, optional leading label column.
LabeledSample read_series(const std::string& path);
LabeledSample ingest_counts(const std::string& path);
/// |ln(P_t / P_{t-1})|; exact zeros are raised to `floor` and counted in notes.
LabeledSample ingest_prices_to_abs_log_returns(const std::string& path, double floor = 1e-8);
LabeledSample abs_log_returns(std::span<const double> prices, double floor = 1e-8);

struct AnalysisOptions {
  AnalysisMethod method = AnalysisMethod::Auto;
  ModelPriorKind model_prior = ModelPriorKind::LossBased;
  int evidence_draws = 2000;
  int prior_draws = 5000;
  std::uint64_t seed = 20190101;
  int threads = 1;
  bool keep_location_posterior = true;
};

struct ModelReport {
  std::vector<SegmentPrior> segments;
  double prior = 0.0;
  double raw_score = 0.0;
  double log_evidence = 0.0;
  std::string method;
  std::optional<double> mc_se;
  double posterior = 0.0;
  std::optional<LocationVector> map_locations;
  std::vector<std::vector<double>> location_marginals;
  std::optional<DiscretePrior<LocationVector>> location_posterior;
  std::vector<DistributionSpec> estimates;  // Schwarz route only
  std::string diagnostic;
};

struct AnalysisReport {
  std::string title;
  int n = 0;
  ModelPriorKind prior_kind = ModelPriorKind::LossBased;
  AnalysisMethod method = AnalysisMethod::Auto;
  std::vector<ModelReport> models;
  std::vector<std::vector<double>> log_bayes;  // [j][i] = log B_ji
  std::vector<std::string> labels;
  std::vector<std::string> notes;
};

AnalysisReport analyze(const NestedModelSequence& seq, const LabeledSample& data, const AnalysisOptions& opt);
/// Poisson segments with Gamma(2,1) rate priors, exact evidence.
AnalysisReport coal_mining_analysis(const LabeledSample& data, const AnalysisOptions& opt = {});
/// Weibull, then two LogNormal segments; Schwarz evidence.
AnalysisReport sp500_analysis(const LabeledSample& data, const AnalysisOptions& opt = {});
NestedModelSequence sp500_models();
NestedModelSequence coal_models();

}  // namespace lbcp
