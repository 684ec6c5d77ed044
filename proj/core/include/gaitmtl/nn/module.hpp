#pragma once

#include <vector>

#include "gaitmtl/nn/tensor.hpp"

namespace gaitmtl::nn {

/// A differentiable computation with learnable parameters.
class Module {
 public:
  virtual ~Module() = default;

  /// `training` selects batch statistics in trainable normalization layers.
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  /// Accumulates parameter gradients of the last forward pass.
  virtual void backward(const Tensor& grad_out) = 0;
  virtual std::vector<ParamRef> parameters() = 0;
  virtual std::vector<BufferRef> buffers() = 0;

  void zero_grad() {
    for (auto& p : parameters()) p.param->zero_grad();
  }
};

}  // namespace gaitmtl::nn
