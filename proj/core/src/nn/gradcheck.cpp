#include "gaitmtl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gaitmtl::nn {

GradCheckResult grad_check(Module& module, const Tensor& input, const LossFn& loss,
                           const GradCheckOptions& options) {
  std::vector<Tensor> saved;
  for (const auto& b : module.buffers()) saved.push_back(*b.tensor);
  auto restore = [&] {
    auto bufs = module.buffers();
    for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i].tensor = saved[i];
  };

  module.zero_grad();
  const Tensor out = module.forward(input, true);
  module.backward(loss(out).grad);
  restore();

  auto eval = [&] {
    const double l = loss(module.forward(input, true)).loss;
    restore();
    return l;
  };

  GradCheckResult result;
  bool first = true;
  for (const auto& ref : module.parameters()) {
    if (!ref.trainable) continue;
    Param& p = *ref.param;
    const double sign = (first && options.flip_first_gradient) ? -1.0 : 1.0;
    first = false;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value[i];
      p.value[i] = original + options.epsilon;
      const double plus = eval();
      p.value[i] = original - options.epsilon;
      const double minus = eval();
      p.value[i] = original;

      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double analytic = sign * p.grad[i];
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), options.magnitude_floor});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++result.checked;
      if (result.worst_param.empty() || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace gaitmtl::nn
