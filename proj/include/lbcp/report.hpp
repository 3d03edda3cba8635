#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lbcp/experiments.hpp"

namespace lbcp {

struct OutputOptions {
  bool full_precision = false;  // shortest round-trip decimal instead of 6 significant digits
};

/// 6 significant digits, or 17 with full precision; "inf", "-inf", "nan" otherwise.
std::string format_number(double v, const OutputOptions& opt);

std::string analysis_json(const AnalysisReport& rep, const OutputOptions& opt);
std::string frequency_json(const FrequencyReport& rep, const OutputOptions& opt);
std::string paired_json(const PairedReport& rep, const OutputOptions& opt);

/// CSV bodies (with header lines).
std::string replicates_csv(const FrequencyReport& rep, const OutputOptions& opt);
std::string location_posterior_csv(const AnalysisReport& rep, const OutputOptions& opt);
/// Two columns: label (or 1-based index) and value.
std::string series_csv(const Sample& values, const std::vector<std::string>& labels, const OutputOptions& opt);
/// Densities of the segment laws on a grid, one column per law.
std::string densities_csv(const std::vector<DistributionSpec>& laws, double lo, double hi, int points,
                          const OutputOptions& opt);

/// Writes every (file name, content) pair into a fresh sibling directory and
/// renames it to `dir`, which must not exist or be empty.
void write_output_dir(const std::string& dir, const std::vector<std::pair<std::string, std::string>>& files);

/// --out value if given, else $LBCP_OUT_DIR, else none.
std::optional<std::string> resolve_output_dir(const std::optional<std::string>& flag);

}  // namespace lbcp
