#include "lbcp/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lbcp/errors.hpp"

namespace lbcp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v, const OutputOptions& opt) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, opt.full_precision ? "%.17g" : "%.6g", v);
  return buf;
}

namespace {

json number(double v, const OutputOptions& opt) {
  if (!std::isfinite(v)) return format_number(v, opt);
  return std::strtod(format_number(v, opt).c_str(), nullptr);
}

json numbers(const std::vector<double>& v, const OutputOptions& opt) {
  json a = json::array();
  for (double x : v) a.push_back(number(x, opt));
  return a;
}

json positions(const LocationVector& m) {
  json a = json::array();
  for (int p : m.positions()) a.push_back(p);
  return a;
}

std::string describe(const SegmentPrior& s) {
  std::string out(family_name(s.family));
  out += "(";
  const auto names = parameter_names(s.family);
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    if (i) out += ", ";
    out += std::string(names[i]) + " ~ " + to_string(s.params[i]);
  }
  return out + ")";
}

json model_prior_json(const ModelPriorResult& p, ModelPriorKind kind, const OutputOptions& opt) {
  json j;
  j["kind"] = std::string(model_prior_kind_name(kind));
  j["probabilities"] = numbers(p.probs, opt);
  j["raw_scores"] = numbers(p.raw_scores, opt);
  j["log_scores"] = numbers(p.log_scores, opt);
  j["mc_se"] = numbers(p.mc_se, opt);
  json flags = json::array();
  for (bool f : p.flagged) flags.push_back(f);
  j["unconverged_solves"] = flags;
  j["draws"] = p.draws;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string analysis_json(const AnalysisReport& rep, const OutputOptions& opt) {
  json j;
  j["analysis"] = rep.title.empty() ? "custom" : rep.title;
  j["n"] = rep.n;
  j["model_prior"] = std::string(model_prior_kind_name(rep.prior_kind));
  j["method"] = std::string(analysis_method_name(rep.method));
  json models = json::array();
  for (std::size_t k = 0; k < rep.models.size(); ++k) {
    const ModelReport& m = rep.models[k];
    json e;
    e["model"] = "M" + std::to_string(k);
    json segs = json::array();
    for (const auto& s : m.segments) segs.push_back(describe(s));
    e["segments"] = segs;
    e["prior"] = number(m.prior, opt);
    e["raw_score"] = number(m.raw_score, opt);
    e["log_evidence"] = number(m.log_evidence, opt);
    e["evidence_method"] = m.method;
    e["mc_se"] = m.mc_se ? number(*m.mc_se, opt) : json(nullptr);
    e["posterior"] = number(m.posterior, opt);
    if (m.map_locations && m.map_locations->k() > 0) {
      e["map_locations"] = positions(*m.map_locations);
      if (!rep.labels.empty()) {
        // Label of the first observation after each change.
        json labels = json::array();
        for (int p : m.map_locations->positions()) labels.push_back(rep.labels[p]);
        e["map_change_labels"] = labels;
      }
    }
    if (!m.estimates.empty()) {
      json est = json::array();
      for (const auto& d : m.estimates) est.push_back(to_string(d));
      e["estimates"] = est;
    }
    if (!m.diagnostic.empty()) e["diagnostic"] = m.diagnostic;
    models.push_back(e);
  }
  j["models"] = models;
  json lb = json::object();
  json bf = json::object();
  for (std::size_t a = 0; a < rep.log_bayes.size(); ++a) {
    for (std::size_t b = 0; b < rep.log_bayes.size(); ++b) {
      if (a == b) continue;
      const std::string key = "B" + std::to_string(a) + std::to_string(b);
      lb[key] = number(rep.log_bayes[a][b], opt);
      bf[key] = number(std::exp(rep.log_bayes[a][b]), opt);
    }
  }
  j["log_bayes_factors"] = lb;
  j["bayes_factors"] = bf;
  j["notes"] = rep.notes;
  return dump(j);
}

namespace {

json frequency_object(const FrequencyReport& rep, const OutputOptions& opt) {
  json j;
  j["scenario"] = rep.scenario;
  j["n"] = rep.n;
  j["replicates"] = rep.replicates;
  j["seed"] = rep.seed;
  j["true_model"] = rep.true_model;
  j["model_prior"] = model_prior_json(rep.model_prior, rep.prior_kind, opt);
  j["evidence_methods"] = rep.evidence_methods;
  j["mean_posterior"] = numbers(rep.mean_posterior, opt);
  j["variance_posterior"] = numbers(rep.var_posterior, opt);
  j["wins"] = rep.wins;
  json hashes = json::array();
  for (const auto& r : rep.records) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r.data_hash));
    hashes.push_back(buf);
  }
  j["data_hashes"] = hashes;
  return j;
}

}  // namespace

std::string frequency_json(const FrequencyReport& rep, const OutputOptions& opt) {
  return dump(frequency_object(rep, opt));
}

std::string paired_json(const PairedReport& rep, const OutputOptions& opt) {
  json j;
  j["loss_based"] = frequency_object(rep.loss_based, opt);
  j["uniform"] = frequency_object(rep.uniform, opt);
  bool same = rep.loss_based.records.size() == rep.uniform.records.size();
  for (std::size_t i = 0; same && i < rep.loss_based.records.size(); ++i) {
    same = rep.loss_based.records[i].data_hash == rep.uniform.records[i].data_hash;
  }
  j["paired_datasets_identical"] = same;
  return dump(j);
}

std::string replicates_csv(const FrequencyReport& rep, const OutputOptions& opt) {
  const std::size_t models = rep.mean_posterior.size();
  std::ostringstream out;
  out << "replicate,data_hash";
  for (std::size_t j = 0; j < models; ++j) out << ",log_evidence_M" << j;
  for (std::size_t j = 0; j < models; ++j) out << ",mc_se_M" << j;
  for (std::size_t j = 0; j < models; ++j) out << ",posterior_M" << j;
  out << ",winner,map_locations\n";
  for (const auto& r : rep.records) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.data_hash));
    out << r.index << "," << hash;
    for (double v : r.log_evidence) out << "," << format_number(v, opt);
    for (double v : r.mc_se) out << "," << (std::isnan(v) ? "" : format_number(v, opt));
    for (double v : r.posterior) out << "," << format_number(v, opt);
    out << "," << r.winner << ",";
    if (r.map_locations) {
      for (int i = 0; i < r.map_locations->k(); ++i) out << (i ? " " : "") << (*r.map_locations)[i];
    }
    out << "\n";
  }
  return out.str();
}

std::string location_posterior_csv(const AnalysisReport& rep, const OutputOptions& opt) {
  std::ostringstream out;
  out << "model,change,m,label,probability\n";
  for (std::size_t k = 0; k < rep.models.size(); ++k) {
    const auto& marg = rep.models[k].location_marginals;
    for (std::size_t c = 0; c < marg.size(); ++c) {
      for (std::size_t i = 0; i < marg[c].size(); ++i) {
        const int m = static_cast<int>(i) + 1;
        out << "M" << k << "," << c + 1 << "," << m << "," << (rep.labels.empty() ? "" : rep.labels[m]) << ","
            << format_number(marg[c][i], opt) << "\n";
      }
    }
  }
  return out.str();
}

std::string series_csv(const Sample& values, const std::vector<std::string>& labels, const OutputOptions& opt) {
  std::ostringstream out;
  out << (labels.empty() ? "index" : "label") << ",value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (labels.empty()) {
      out << i + 1;
    } else {
      out << labels[i];
    }
    out << "," << format_number(values[i], opt) << "\n";
  }
  return out.str();
}

std::string densities_csv(const std::vector<DistributionSpec>& laws, double lo, double hi, int points,
                          const OutputOptions& opt) {
  if (points < 2 || !(hi > lo)) throw DomainError("density grid needs two points and hi > lo");
  std::ostringstream out;
  out << "x";
  for (const auto& d : laws) out << "," << family_name(d.family());
  out << "\n";
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    out << format_number(x, opt);
    for (const auto& d : laws) out << "," << format_number(std::exp(log_density(d, x)), opt);
    out << "\n";
  }
  return out.str();
}

void write_output_dir(const std::string& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  const fs::path target = fs::absolute(dir);
  std::error_code ec;
  if (fs::exists(target, ec)) {
    if (!fs::is_directory(target) || !fs::is_empty(target)) {
      throw ConfigError("output directory '" + dir + "' exists and is not empty");
    }
  }
  const fs::path parent = target.parent_path();
  fs::create_directories(parent, ec);
  if (ec) throw ConfigError("cannot create '" + parent.string() + "': " + ec.message());
  fs::path staging;
  for (int i = 0;; ++i) {
    staging = parent / ("." + target.filename().string() + ".partial" + std::to_string(i));
    if (fs::create_directory(staging, ec)) break;
    if (i > 1000) throw ConfigError("cannot create a staging directory next to '" + dir + "'");
  }
  try {
    for (const auto& [name, content] : files) {
      std::ofstream out(staging / name, std::ios::binary);
      out << content;
      out.close();
      if (!out) throw ConfigError("cannot write '" + (staging / name).string() + "'");
    }
    if (fs::exists(target)) fs::remove(target);
    fs::rename(staging, target);
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

std::optional<std::string> resolve_output_dir(const std::optional<std::string>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("LBCP_OUT_DIR"); env != nullptr && *env != '\0') return std::string(env);
  return std::nullopt;
}

}  // namespace lbcp
