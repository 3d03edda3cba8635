#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "lbcp/numerics.hpp"
#include "lbcp/errors.hpp"
#include "lbcp/experiments.hpp"
#include "lbcp/report.hpp"

using namespace lbcp;
namespace fs = std::filesystem;

namespace {

std::string data_file(const std::string& name) { return std::string(LBCP_DATA_DIR) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("lbcp_test_" + name);
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST(Scenario, SetupDefaults) {
  ScenarioConfig cfg;
  cfg.scenario = 3;
  const auto s = scenario_setup(cfg);
  EXPECT_EQ(s.n, 300);
  EXPECT_EQ(s.true_model, 2);
  EXPECT_EQ(s.breaks, (std::vector<int>{100, 200}));
  cfg.scenario = 4;
  cfg.n = 1500;
  EXPECT_EQ(scenario_setup(cfg).breaks, (std::vector<int>{500, 1000}));
  cfg.scenario = 5;
  EXPECT_THROW(scenario_setup(cfg), std::invalid_argument);
}

TEST(Scenario, SimulatedDataFollowBreaks) {
  ScenarioConfig cfg;
  cfg.scenario = 1;
  cfg.n = 2000;
  const auto s = scenario_setup(cfg);
  const auto x = simulate_replicate(s, 3, 0);
  ASSERT_EQ(x.size(), 2000u);
  double a = 0, b = 0;
  for (int i = 0; i < 1000; ++i) a += x[i];
  for (int i = 1000; i < 2000; ++i) b += x[i];
  EXPECT_NEAR(a / 1000, 0.25, 0.06);  // Geometric(0.8) mean
  EXPECT_NEAR(b / 1000, 3.0, 0.25);   // Poisson(3) mean
  EXPECT_EQ(x, simulate_replicate(s, 3, 0));
  EXPECT_NE(data_hash(x), data_hash(simulate_replicate(s, 3, 1)));
}

TEST(Scenario, OneTrueNoChange) {
  ScenarioConfig cfg;
  cfg.scenario = 1;
  cfg.true_model = 0;
  cfg.prior_draws = 2000;
  const auto r = run_scenario(cfg);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_GE(r.records[0].posterior[0], 0.8);
}

TEST(Scenario, DegenerateTwoObservations) {
  ScenarioConfig cfg;
  cfg.scenario = 1;
  cfg.n = 2;
  cfg.prior_draws = 200;
  const auto r = run_scenario(cfg);
  const auto j = nlohmann::json::parse(frequency_json(r, {}));
  EXPECT_EQ(j["n"], 2);
  EXPECT_EQ(j["replicates"], 1);
  EXPECT_EQ(j["mean_posterior"].size(), 2u);
}

TEST(Scenario, AccountingAndDeterminism) {
  ScenarioConfig cfg;
  cfg.scenario = 1;
  cfg.replicates = 6;
  cfg.prior_draws = 500;
  cfg.seed = 42;
  const auto a = run_scenario(cfg);
  cfg.threads = 4;
  const auto b = run_scenario(cfg);
  EXPECT_EQ(frequency_json(a, {true}), frequency_json(b, {true}));
  EXPECT_EQ(replicates_csv(a, {true}), replicates_csv(b, {true}));
  EXPECT_EQ(std::accumulate(a.wins.begin(), a.wins.end(), 0), 6);
  for (std::size_t j = 0; j < a.mean_posterior.size(); ++j) {
    double s = 0;
    for (const auto& rec : a.records) s += rec.posterior[j];
    EXPECT_NEAR(a.mean_posterior[j], s / 6, 1e-12);
  }
  const auto csv = replicates_csv(a, {});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Scenario, PairedComparisonUsesSameData) {
  const auto p = compare_priors_scenario4(500, 2, 9, 2);
  ASSERT_EQ(p.loss_based.records.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(p.loss_based.records[i].data_hash, p.uniform.records[i].data_hash);
  }
  const auto j = nlohmann::json::parse(paired_json(p, {}));
  EXPECT_TRUE(j["paired_datasets_identical"].get<bool>());
  EXPECT_EQ(p.uniform.model_prior.probs[0], 1.0 / 3);
  const auto one = compare_priors_scenario4(500, 1, 9);
  EXPECT_EQ(one.loss_based.records.size(), 1u);
  EXPECT_EQ(one.uniform.records.size(), 1u);
}

TEST(Ingest, FlatPriceFloored) {
  const std::vector<double> prices = {100, 100};
  const auto r = abs_log_returns(prices, 1e-8);
  ASSERT_EQ(r.values.size(), 1u);
  EXPECT_EQ(r.values[0], 1e-8);
  EXPECT_FALSE(r.notes.empty());
}

TEST(Ingest, SimpleReturn) {
  const std::vector<double> prices = {100, 110};
  EXPECT_NEAR(abs_log_returns(prices).values[0], std::log(1.1), 1e-15);
}

TEST(Ingest, NonPositivePrice) {
  const std::vector<double> prices = {100, 0, 3};
  EXPECT_THROW(abs_log_returns(prices), DataError);
}

TEST(Ingest, CoalFile) {
  const auto d = ingest_counts(data_file("coal_mining.csv"));
  EXPECT_EQ(d.values.size(), 112u);
  EXPECT_EQ(d.labels.front(), "1851");
  EXPECT_EQ(d.labels.back(), "1962");
  EXPECT_EQ(std::accumulate(d.values.begin(), d.values.end(), 0.0), 191.0);
}

TEST(Ingest, MalformedRowNamesLine) {
  const auto path = write_temp("bad.csv", "value\n1\n2\nabc\n4\n");
  try {
    read_series(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos);
  }
  EXPECT_THROW(ingest_counts(write_temp("neg.csv", "1\n-2\n")), DataError);
  EXPECT_THROW(ingest_counts(write_temp("frac.csv", "1\n2.5\n")), DataError);
  EXPECT_THROW(read_series("/nonexistent/file.csv"), DataError);
}

TEST(Coal, StrongEvidenceForOneChange) {
  const auto r = coal_mining_analysis(ingest_counts(data_file("coal_mining.csv")));
  const double log10_b10 = r.log_bayes[1][0] / std::log(10.0);
  EXPECT_LE(std::abs(log10_b10 - 12.79), 0.5);
  EXPECT_GE(r.models[1].posterior, 0.999);
  EXPECT_EQ(r.models[1].method, "conjugate_exact");
}

TEST(Coal, ConstantCountsFavourNoChange) {
  LabeledSample d;
  d.values.assign(60, 2.0);
  const auto r = coal_mining_analysis(d);
  EXPECT_GT(r.models[0].posterior, 0.5);
}

TEST(Sp500, OrderingAndPriors) {
  const auto r = sp500_analysis(ingest_prices_to_abs_log_returns(data_file("sp500_2008_2011.csv")));
  ASSERT_EQ(r.models.size(), 3u);
  EXPECT_GE(r.models[2].posterior, 0.95);
  EXPECT_GT(r.models[2].posterior, r.models[0].posterior);
  EXPECT_GT(r.models[2].posterior, r.models[1].posterior);
  EXPECT_LT(r.log_bayes[0][2], 0);
  EXPECT_LT(r.log_bayes[1][2], 0);
  EXPECT_NEAR(r.models[1].prior, r.models[2].prior, 0.02);
}

TEST(Sp500, ShortWindowCompletes) {
  auto d = ingest_prices_to_abs_log_returns(data_file("sp500_2008_2011.csv"));
  d.values.resize(50);
  d.labels.resize(std::min<std::size_t>(d.labels.size(), 50));
  const auto r = sp500_analysis(d);
  EXPECT_EQ(r.n, 50);
  double s = 0;
  for (const auto& m : r.models) s += m.posterior;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Report, OutputDirectoryIsFreshOrEmpty) {
  const fs::path dir = fs::temp_directory_path() / "lbcp_test_outdir";
  fs::remove_all(dir);
  write_output_dir(dir.string(), {{"a.txt", "x\n"}});
  EXPECT_TRUE(fs::exists(dir / "a.txt"));
  EXPECT_THROW(write_output_dir(dir.string(), {{"b.txt", "y\n"}}), ConfigError);
  fs::remove_all(dir);
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(format_number(0.1, {}), "0.1");
  EXPECT_EQ(format_number(1.0 / 3, {}), "0.333333");
  EXPECT_EQ(std::stod(format_number(1.0 / 3, {true})), 1.0 / 3);
  EXPECT_EQ(format_number(-kInf, {}), "-inf");
}
