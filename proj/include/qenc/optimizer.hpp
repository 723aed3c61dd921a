#pragma once

// Adam with bias correction, keyed by parameter group name.

#include <cstdint>
#include <map>
#include <string>

#include "qenc/model.hpp"

namespace qenc {

struct AdamConfig {
  Real learning_rate = 1e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, DenseArray> m;  // first moments, per group
  std::map<std::string, DenseArray> v;  // second moments, per group
};

using GradientMap = std::map<std::string, DenseArray>;

// Scales all gradients by min(1, max_norm/||g||); returns the global norm.
Real clip_by_global_norm(GradientMap& grads, Real max_norm);

// One bias-corrected update. Groups missing from `grads` are left untouched.
// Throws std::runtime_error naming the group when a gradient is non-finite
// or shaped differently from its parameter.
void adam_step(ModelParameters& params, const GradientMap& grads, OptimizerState& state);

}  // namespace qenc
