#pragma once

#include <string>

#include "lbcp/experiments.hpp"
#include "lbcp/model_spec.hpp"

namespace lbcp {

/// Nested model sequence read from an INI file:
///
///   [model]
///   max_changes = 2             ; optional, checked against the segment count
///   location_prior = uniform    ; uniform | shifted_binomial
///   model_prior = loss_based    ; loss_based | uniform
///
///   [segment.0]
///   family = weibull
///   scale = gamma:1.5,1         ; one key per parameter, named as in the family
///   shape = gamma:5,1
///
/// Segments are numbered 0..K without gaps; unknown sections or keys are errors.
struct ModelConfig {
  NestedModelSequence sequence;
  ModelPriorKind model_prior = ModelPriorKind::LossBased;
};

ModelConfig parse_model_config(const std::string& text);
ModelConfig load_model_config(const std::string& path);

}  // namespace lbcp
