#include "gaitmtl/nn/adam.hpp"

#include <cmath>

#include "gaitmtl/errors.hpp"

namespace gaitmtl::nn {

void adam_step(std::span<const ParamRef> params, AdamState& state) {
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
      state.m.emplace_back(p.param->value.shape());
      state.v.emplace_back(p.param->value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    fail(Errc::kShapeError, "optimizer state does not match the parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Param& p = *params[i].param;
    if (p.grad.shape() != p.value.shape() || state.m[i].shape() != p.value.shape()) {
      fail(Errc::kShapeError, "gradient/moment shape mismatch for " + p.name);
    }
    if (params[i].trainable && !p.grad.all_finite()) {
      fail(Errc::kNumericalError, "non-finite gradient in " + p.name);
    }
  }

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    Param& p = *params[i].param;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace gaitmtl::nn
