#include "lbcp/config.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lbcp/errors.hpp"

namespace lbcp {

namespace pt = boost::property_tree;

namespace {

int segment_index(const std::string& section) {
  const std::string prefix = "segment.";
  if (section.rfind(prefix, 0) != 0 || section.size() == prefix.size()) {
    throw ConfigError("unknown section [" + section + "]");
  }
  const std::string digits = section.substr(prefix.size());
  for (char c : digits) {
    if (c < '0' || c > '9') throw ConfigError("segment sections are named [segment.N]; got [" + section + "]");
  }
  if (digits.size() > 4) throw ConfigError("segment index too large in [" + section + "]");
  return std::stoi(digits);
}

SegmentPrior read_segment(const std::string& section, const pt::ptree& body) {
  std::optional<Family> family;
  std::map<std::string, std::string> values;
  for (const auto& [key, child] : body) {
    if (!child.empty()) throw ConfigError("nested keys are not allowed in [" + section + "]");
    if (key == "family") {
      try {
        family = parse_family(child.data());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("[" + section + "] family: " + e.what());
      }
    } else {
      values[key] = child.data();
    }
  }
  if (!family) throw ConfigError("[" + section + "] needs a family key");
  std::vector<ParamPrior> params;
  for (std::string_view name : parameter_names(*family)) {
    const auto it = values.find(std::string(name));
    if (it == values.end()) {
      throw ConfigError("[" + section + "] is missing the prior for parameter '" + std::string(name) + "'");
    }
    try {
      params.push_back(ParamPrior::parse(it->second));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("[" + section + "] " + it->first + ": " + e.what());
    }
    values.erase(it);
  }
  if (!values.empty()) {
    throw ConfigError("[" + section + "] has unknown key '" + values.begin()->first + "' for family " +
                      std::string(family_name(*family)));
  }
  try {
    return SegmentPrior(*family, std::move(params));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[" + section + "] " + e.what());
  }
}

}  // namespace

ModelConfig parse_model_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  std::map<int, SegmentPrior> segments;
  std::optional<int> max_changes;
  LocationPriorKind location = LocationPriorKind::Uniform;
  ModelPriorKind model_prior = ModelPriorKind::LossBased;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    if (section == "model") {
      for (const auto& [key, child] : body) {
        const std::string& v = child.data();
        if (key == "max_changes") {
          try {
            std::size_t used = 0;
            max_changes = std::stoi(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
          } catch (const std::exception&) {
            throw ConfigError("[model] max_changes must be an integer");
          }
        } else if (key == "location_prior") {
          try {
            location = parse_location_prior(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("[model] location_prior: ") + e.what());
          }
        } else if (key == "model_prior") {
          model_prior = parse_model_prior_kind(v);
        } else {
          throw ConfigError("[model] has unknown key '" + key + "'");
        }
      }
      continue;
    }
    const int idx = segment_index(section);
    if (segments.count(idx)) throw ConfigError("duplicate section [" + section + "]");
    segments.emplace(idx, read_segment(section, body));
  }
  std::vector<SegmentPrior> ordered;
  for (const auto& [idx, seg] : segments) {
    if (idx != static_cast<int>(ordered.size())) {
      throw ConfigError("segment sections must be numbered 0.." + std::to_string(segments.size() - 1));
    }
    ordered.push_back(seg);
  }
  if (ordered.size() < 2) throw ConfigError("a model config needs at least two segments");
  if (max_changes && *max_changes != static_cast<int>(ordered.size()) - 1) {
    throw ConfigError("[model] max_changes = " + std::to_string(*max_changes) + " but " +
                      std::to_string(ordered.size()) + " segments are defined");
  }
  try {
    return ModelConfig{NestedModelSequence(std::move(ordered), location), model_prior};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_config(buf.str());
}

}  // namespace lbcp
