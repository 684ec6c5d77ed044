#pragma once

#include <functional>
#include <string>

#include "gaitmtl/nn/layers.hpp"
#include "gaitmtl/nn/module.hpp"

namespace gaitmtl::nn {

using LossFn = std::function<LossResult(const Tensor& output)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Denominator floor for the relative error, so parameters with vanishing
  /// gradients are judged on absolute error instead.
  double magnitude_floor = 1e-4;
  /// Test hook: negate the analytic gradient of the first checked tensor.
  bool flip_first_gradient = false;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic gradients of every trainable parameter against central
/// differences (f(p + eps) - f(p - eps)) / 2 eps of loss(module(input)) in
/// training mode. Buffers (running statistics) are restored afterwards.
GradCheckResult grad_check(Module& module, const Tensor& input, const LossFn& loss,
                           const GradCheckOptions& options = {});

}  // namespace gaitmtl::nn
