#include "lbcp/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "lbcp/config.hpp"
#include "lbcp/divergence.hpp"
#include "lbcp/errors.hpp"
#include "lbcp/experiments.hpp"
#include "lbcp/report.hpp"

namespace lbcp {

namespace {

constexpr std::uint64_t kDefaultSeed = 20190101;

struct Globals {
  bool full_precision = false;
  int threads = 1;
  OutputOptions out() const { return OutputOptions{full_precision}; }
};

void print_model_prior(std::ostream& out, const ModelPriorResult& p, const OutputOptions& o) {
  out << "model,prior,raw_score,log_score,mc_se,unconverged\n";
  for (std::size_t j = 0; j < p.probs.size(); ++j) {
    out << "M" << j << "," << format_number(p.probs[j], o) << "," << format_number(p.raw_scores[j], o) << ","
        << format_number(p.log_scores[j], o) << "," << format_number(p.mc_se[j], o) << ","
        << (p.flagged[j] ? "yes" : "no") << "\n";
  }
}

void print_frequency(std::ostream& out, const FrequencyReport& r, const OutputOptions& o) {
  out << "# scenario " << r.scenario << ", n = " << r.n << ", replicates = " << r.replicates << ", true model M"
      << r.true_model << ", model prior " << model_prior_kind_name(r.prior_kind) << "\n";
  out << "model,prior,mean_posterior,variance_posterior,wins,evidence_method\n";
  for (std::size_t j = 0; j < r.mean_posterior.size(); ++j) {
    out << "M" << j << "," << format_number(r.model_prior.probs[j], o) << ","
        << format_number(r.mean_posterior[j], o) << "," << format_number(r.var_posterior[j], o) << "," << r.wins[j]
        << "/" << r.replicates << "," << r.evidence_methods[j] << "\n";
  }
}

void print_analysis(std::ostream& out, const AnalysisReport& r, const OutputOptions& o) {
  out << "model,prior,log_evidence,mc_se,posterior,evidence_method,map_locations\n";
  for (std::size_t j = 0; j < r.models.size(); ++j) {
    const ModelReport& m = r.models[j];
    out << "M" << j << "," << format_number(m.prior, o) << "," << format_number(m.log_evidence, o) << ","
        << (m.mc_se ? format_number(*m.mc_se, o) : "") << "," << format_number(m.posterior, o) << "," << m.method
        << ",";
    if (m.map_locations) {
      for (int i = 0; i < m.map_locations->k(); ++i) out << (i ? " " : "") << (*m.map_locations)[i];
    }
    out << "\n";
  }
  for (std::size_t a = 0; a < r.log_bayes.size(); ++a) {
    for (std::size_t b = 0; b < r.log_bayes.size(); ++b) {
      if (a != b) out << "log B" << a << b << " = " << format_number(r.log_bayes[a][b], o) << "\n";
    }
  }
  for (const auto& n : r.notes) out << "note: " << n << "\n";
  for (const auto& m : r.models) {
    if (!m.diagnostic.empty()) out << "diagnostic: " << m.diagnostic << "\n";
  }
}

void emit_analysis(std::ostream& out, const AnalysisReport& rep, const LabeledSample& data,
                   const std::optional<std::string>& out_flag, const OutputOptions& o) {
  print_analysis(out, rep, o);
  if (const auto dir = resolve_output_dir(out_flag)) {
    write_output_dir(*dir, {{"report.json", analysis_json(rep, o)},
                            {"location_posterior.csv", location_posterior_csv(rep, o)},
                            {"series.csv", series_csv(data.values, data.labels, o)}});
    out << "wrote " << *dir << "\n";
  }
}

std::vector<DistributionSpec> densities_for(const ScenarioSetup& s) { return s.truths; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loss-based objective priors for Bayesian change-point analysis", "lbcp"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--full-precision", g.full_precision, "Print numbers with 17 significant digits");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1, 1024));

  std::function<void()> action;

  // kl / hellinger
  std::string p_text, q_text, route_text = "auto";
  double tol = 1e-8;
  auto* kl_cmd = app.add_subcommand("kl", "Kullback-Leibler divergence KL(p || q)");
  kl_cmd->add_option("--p", p_text, "First distribution, e.g. poisson:1")->required();
  kl_cmd->add_option("--q", q_text, "Second distribution")->required();
  kl_cmd->add_option("--tol", tol, "Absolute accuracy target")->check(CLI::PositiveNumber);
  kl_cmd->add_option("--route", route_text, "auto | closed | numeric")->check(CLI::IsMember({"auto", "closed", "numeric"}));
  kl_cmd->callback([&] {
    action = [&] {
      const KlResult r = kl(parse_distribution(p_text), parse_distribution(q_text), tol, parse_kl_route(route_text));
      out << "value = " << format_number(r.value, g.out()) << "\n";
      out << "method = " << method_name(r.method) << "\n";
      out << "error_bound = " << format_number(r.error_bound, g.out()) << "\n";
    };
  });

  double h_tol = 1e-10;
  auto* hel_cmd = app.add_subcommand("hellinger", "Hellinger distance between two distributions");
  hel_cmd->add_option("--p", p_text, "First distribution")->required();
  hel_cmd->add_option("--q", q_text, "Second distribution")->required();
  hel_cmd->add_option("--tol", h_tol, "Absolute accuracy target")->check(CLI::PositiveNumber);
  hel_cmd->callback([&] {
    action = [&] {
      out << "value = " << format_number(hellinger(parse_distribution(p_text), parse_distribution(q_text), h_tol), g.out())
          << "\n";
    };
  });

  // prior
  auto* prior_cmd = app.add_subcommand("prior", "Priors on change-point locations and discrete models");
  prior_cmd->require_subcommand(1);
  int pn = 0, pk = 1;
  std::size_t limit = 5'000'000;
  auto* loc_cmd = prior_cmd->add_subcommand("locations", "Uniform prior over location vectors");
  loc_cmd->add_option("--n", pn, "Sample size")->required()->check(CLI::Range(2, 100000000));
  loc_cmd->add_option("--k", pk, "Number of change points")->check(CLI::Range(0, 1000));
  loc_cmd->add_option("--limit", limit, "Maximum number of rows");
  loc_cmd->callback([&] {
    action = [&] {
      const UniformLocationPrior prior(pn, pk);
      const auto all = prior.enumerate(limit);
      for (int c = 1; c <= pk; ++c) out << "m" << c << ",";
      out << "mass\n";
      const std::string mass = format_number(std::exp(prior.log_mass()), g.out());
      for (const auto& m : all) {
        for (int p : m.positions()) out << p << ",";
        out << mass << "\n";
      }
    };
  });
  auto* sb_cmd = prior_cmd->add_subcommand("shifted-binomial", "Shifted binomial prior on a single location");
  sb_cmd->add_option("--n", pn, "Sample size")->required()->check(CLI::Range(2, 100000000));
  sb_cmd->callback([&] {
    action = [&] {
      const auto prior = shifted_binomial_prior(pn);
      out << "m,mass\n";
      for (std::size_t i = 0; i < prior.size(); ++i) {
        out << prior.support[i] << "," << format_number(prior.mass[i], g.out()) << "\n";
      }
    };
  });
  std::vector<std::string> lb_models;
  auto* lb_cmd = prior_cmd->add_subcommand("loss-based", "Loss-based prior over a finite set of distributions");
  lb_cmd->add_option("--model", lb_models, "Candidate distribution (repeat at least twice)")->required();
  lb_cmd->callback([&] {
    action = [&] {
      if (lb_models.size() < 2) throw ConfigError("--model must be given at least twice");
      std::vector<DistributionSpec> models;
      for (const auto& m : lb_models) models.push_back(parse_distribution(m));
      const auto prior = loss_based_prior(models);
      out << "index,distribution,mass\n";
      for (std::size_t i = 0; i < prior.size(); ++i) {
        out << prior.support[i] << "," << to_string(models[prior.support[i]]) << ","
            << format_number(prior.mass[i], g.out()) << "\n";
      }
    };
  });

  // model-priors
  std::string config_path;
  int scenario = 0, n = 0, prior_draws = 5000;
  std::uint64_t seed = kDefaultSeed;
  auto* mp_cmd = app.add_subcommand("model-priors", "Loss-based prior over the number of change points");
  auto* mp_config = mp_cmd->add_option("--config", config_path, "Model config file")->check(CLI::ExistingFile);
  auto* mp_scenario = mp_cmd->add_option("--scenario", scenario, "Built-in scenario 1-4")->check(CLI::Range(1, 4));
  mp_config->excludes(mp_scenario);
  mp_cmd->add_option("--n", n, "Sample size (scenario default when omitted)")->check(CLI::Range(2, 100000000));
  mp_cmd->add_option("--draws", prior_draws, "Monte Carlo draws per expectation")->check(CLI::Range(1, 100000000));
  mp_cmd->add_option("--seed", seed, "Master seed");
  mp_cmd->callback([&] {
    action = [&] {
      McConfig mc;
      mc.draws = prior_draws;
      mc.seed = seed;
      mc.threads = g.threads;
      if (!config_path.empty()) {
        if (n == 0) throw ConfigError("--n is required with --config");
        const ModelConfig cfg = load_model_config(config_path);
        print_model_prior(out, model_prior_probabilities(cfg.sequence, n, mc), g.out());
        return;
      }
      if (scenario == 0) throw ConfigError("one of --config or --scenario is required");
      ScenarioConfig sc;
      sc.scenario = scenario;
      sc.n = n;
      const ScenarioSetup setup = scenario_setup(sc);
      print_model_prior(out, model_prior_probabilities(setup.priors, setup.n, mc), g.out());
    };
  });

  // analyze
  std::string data_path, method_text = "auto", model_prior_text;
  int draws = 2000;
  std::optional<std::string> out_dir;
  auto* an_cmd = app.add_subcommand("analyze", "Model selection on a data file");
  an_cmd->add_option("--data", data_path, "CSV with one value per row")->required();
  an_cmd->add_option("--models", config_path, "Model config file")->required();
  an_cmd->add_option("--method", method_text, "auto | exact | mc | bic")
      ->check(CLI::IsMember({"auto", "exact", "mc", "bic"}));
  an_cmd->add_option("--draws", draws, "Prior draws per segment for Monte Carlo evidence")
      ->check(CLI::Range(100, 100000000));
  auto* an_seed = an_cmd->add_option("--seed", seed, "Master seed (required with --method mc)");
  an_cmd->add_option("--prior-draws", prior_draws, "Monte Carlo draws for the model prior")
      ->check(CLI::Range(1, 100000000));
  an_cmd->add_option("--model-prior", model_prior_text, "loss_based | uniform (overrides the config)")
      ->check(CLI::IsMember({"loss_based", "uniform"}));
  an_cmd->add_option("--out", out_dir, "Output directory (default $LBCP_OUT_DIR)");
  an_cmd->callback([&] {
    action = [&] {
      const AnalysisMethod method = parse_analysis_method(method_text);
      if (method == AnalysisMethod::MonteCarlo && an_seed->count() == 0) {
        throw ConfigError("--seed is required with --method mc");
      }
      const ModelConfig cfg = load_model_config(config_path);
      const LabeledSample data = read_series(data_path);
      AnalysisOptions opt;
      opt.method = method;
      opt.model_prior = model_prior_text.empty() ? cfg.model_prior : parse_model_prior_kind(model_prior_text);
      opt.evidence_draws = draws;
      opt.prior_draws = prior_draws;
      opt.seed = seed;
      opt.threads = g.threads;
      AnalysisReport rep = analyze(cfg.sequence, data, opt);
      rep.title = std::filesystem::path(data_path).stem().string();
      emit_analysis(out, rep, data, out_dir, g.out());
    };
  });

  // simulate
  int replicates = 1, true_model = -1;
  std::string variant_text = "matched";
  bool compare = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Repeated-sampling study of a built-in scenario");
  sim_cmd->add_option("--scenario", scenario, "Scenario 1-4")->required()->check(CLI::Range(1, 4));
  sim_cmd->add_option("--n", n, "Sample size (scenario default when omitted)")->check(CLI::Range(2, 100000000));
  sim_cmd->add_option("--replicates", replicates, "Number of simulated data sets")->check(CLI::Range(1, 100000000));
  sim_cmd->add_option("--seed", seed, "Master seed");
  sim_cmd->add_option("--true-model", true_model, "Generating model index (default: the largest)")
      ->check(CLI::Range(0, 2));
  sim_cmd->add_option("--variant", variant_text, "Scenario 4 laws: matched | literal")
      ->check(CLI::IsMember({"matched", "literal"}));
  sim_cmd->add_option("--model-prior", model_prior_text, "loss_based | uniform")
      ->check(CLI::IsMember({"loss_based", "uniform"}));
  sim_cmd->add_flag("--compare-priors", compare, "Scenario 4: loss-based and uniform priors on the same data");
  sim_cmd->add_option("--method", method_text, "Evidence route: auto | exact | mc")
      ->check(CLI::IsMember({"auto", "exact", "mc"}));
  sim_cmd->add_option("--draws", draws, "Prior draws per segment for Monte Carlo evidence")
      ->check(CLI::Range(100, 100000000));
  sim_cmd->add_option("--prior-draws", prior_draws, "Monte Carlo draws for the model prior")
      ->check(CLI::Range(1, 100000000));
  sim_cmd->add_option("--out", out_dir, "Output directory (default $LBCP_OUT_DIR)");
  sim_cmd->callback([&] {
    action = [&] {
      ScenarioConfig sc;
      sc.scenario = scenario;
      sc.n = n;
      sc.replicates = replicates;
      sc.seed = seed;
      if (true_model >= 0) sc.true_model = true_model;
      sc.variant = parse_scenario4_variant(variant_text);
      if (!model_prior_text.empty()) sc.model_prior = parse_model_prior_kind(model_prior_text);
      sc.evidence_route = parse_evidence_route(method_text);
      sc.evidence_draws = draws;
      sc.prior_draws = prior_draws;
      sc.threads = g.threads;
      const OutputOptions o = g.out();
      const ScenarioSetup setup = scenario_setup(sc);
      std::vector<std::pair<std::string, std::string>> files;
      if (compare) {
        if (scenario != 4) throw ConfigError("--compare-priors applies to scenario 4 only");
        if (sc.true_model && *sc.true_model != 2) throw ConfigError("--compare-priors uses the true model M2");
        if (!model_prior_text.empty()) throw ConfigError("--compare-priors runs both model priors; drop --model-prior");
        const PairedReport rep = compare_priors_scenario4(setup.n, replicates, seed, g.threads, sc.variant);
        print_frequency(out, rep.loss_based, o);
        print_frequency(out, rep.uniform, o);
        files = {{"report.json", paired_json(rep, o)},
                 {"replicates_loss_based.csv", replicates_csv(rep.loss_based, o)},
                 {"replicates_uniform.csv", replicates_csv(rep.uniform, o)}};
      } else {
        const FrequencyReport rep = run_scenario(sc);
        print_frequency(out, rep, o);
        files = {{"report.json", frequency_json(rep, o)}, {"replicates.csv", replicates_csv(rep, o)}};
      }
      files.emplace_back("series.csv", series_csv(simulate_replicate(setup, seed, 0), {}, o));
      if (scenario == 2 || scenario == 4) {
        files.emplace_back("densities.csv", densities_csv(densities_for(setup), 0.01, 10.0, 500, o));
      } else if (scenario == 3) {
        files.emplace_back("densities.csv", densities_csv(densities_for(setup), -6.0, 6.0, 481, o));
      }
      if (const auto dir = resolve_output_dir(out_dir)) {
        write_output_dir(*dir, files);
        out << "wrote " << *dir << "\n";
      }
    };
  });

  // real
  auto* real_cmd = app.add_subcommand("real", "Real-data analyses");
  real_cmd->require_subcommand(1);
  double floor = 1e-8;
  auto* coal_cmd = real_cmd->add_subcommand("coal", "Coal-mining disaster counts, Poisson segments");
  coal_cmd->add_option("--data", data_path, "CSV of yearly counts (year,count)")->required();
  coal_cmd->add_option("--method", method_text, "auto | exact | mc")->check(CLI::IsMember({"auto", "exact", "mc"}));
  coal_cmd->add_option("--draws", draws, "Prior draws per segment for Monte Carlo evidence")
      ->check(CLI::Range(100, 100000000));
  coal_cmd->add_option("--seed", seed, "Master seed");
  coal_cmd->add_option("--out", out_dir, "Output directory (default $LBCP_OUT_DIR)");
  coal_cmd->callback([&] {
    action = [&] {
      const LabeledSample data = ingest_counts(data_path);
      AnalysisOptions opt;
      opt.method = parse_analysis_method(method_text);
      opt.evidence_draws = draws;
      opt.seed = seed;
      opt.threads = g.threads;
      emit_analysis(out, coal_mining_analysis(data, opt), data, out_dir, g.out());
    };
  });
  auto* sp_cmd = real_cmd->add_subcommand("sp500", "S&P 500 absolute daily log-returns, Weibull/LogNormal segments");
  sp_cmd->add_option("--data", data_path, "CSV of closing prices (date,close)")->required();
  sp_cmd->add_option("--method", method_text, "bic | auto | mc")->check(CLI::IsMember({"auto", "bic", "mc"}));
  sp_cmd->add_option("--draws", draws, "Prior draws per segment for Monte Carlo evidence")
      ->check(CLI::Range(100, 100000000));
  sp_cmd->add_option("--prior-draws", prior_draws, "Monte Carlo draws for the model prior")
      ->check(CLI::Range(1, 100000000));
  sp_cmd->add_option("--floor", floor, "Replacement for zero absolute returns")->check(CLI::PositiveNumber);
  sp_cmd->add_option("--seed", seed, "Master seed");
  sp_cmd->add_option("--out", out_dir, "Output directory (default $LBCP_OUT_DIR)");
  sp_cmd->callback([&] {
    action = [&] {
      const LabeledSample data = ingest_prices_to_abs_log_returns(data_path, floor);
      AnalysisOptions opt;
      opt.method = parse_analysis_method(method_text);
      opt.evidence_draws = draws;
      opt.prior_draws = prior_draws;
      opt.seed = seed;
      opt.threads = g.threads;
      emit_analysis(out, sp500_analysis(data, opt), data, out_dir, g.out());
    };
  });

  // moment-match
  std::string family_text;
  double mean = 0.0, variance = 0.0;
  auto* mm_cmd = app.add_subcommand("moment-match", "Parameters of a family with a given mean and variance");
  mm_cmd->add_option("--family", family_text, "Target family")->required();
  mm_cmd->add_option("--mean", mean, "Mean")->required();
  mm_cmd->add_option("--variance", variance, "Variance")->required();
  mm_cmd->callback([&] {
    action = [&] {
      const DistributionSpec d = moment_match(parse_family(family_text), mean, variance);
      const auto names = parameter_names(d.family());
      out << "family = " << family_name(d.family()) << "\n";
      for (std::size_t i = 0; i < d.params().size(); ++i) {
        out << names[i] << " = " << format_number(d[i], g.out()) << "\n";
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    out.flush();
    return code == 0 ? 0 : 1;
  }

  int code = 0;
  try {
    if (action) action();
  } catch (const AccuracyError& e) {
    err << "numeric failure: " << e.what() << " (achieved bound " << e.achieved_bound() << ")\n";
    code = 2;
  } catch (const InfeasibleError& e) {
    err << "numeric failure: " << e.what() << "\n";
    code = 2;
  } catch (const EstimationError& e) {
    err << "numeric failure: " << e.what() << "\n";
    code = 2;
  } catch (const PriorUndefinedError& e) {
    err << "numeric failure: " << e.what() << "\n";
    code = 2;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    code = 2;
  }
  out.flush();
  err.flush();
  return code;
}

}  // namespace lbcp
