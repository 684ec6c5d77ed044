#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gaitmtl/nn/tensor.hpp"

namespace gaitmtl::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates are aligned with the order of the parameter list passed
/// to `adam_step`; that list must stay the same across steps.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// Bias-corrected Adam update from each parameter's accumulated gradient.
/// Masked (non-trainable) parameters keep their values and moments. Throws
/// NumericalError before touching anything if a trainable gradient is not
/// finite.
void adam_step(std::span<const ParamRef> params, AdamState& state);

}  // namespace gaitmtl::nn
