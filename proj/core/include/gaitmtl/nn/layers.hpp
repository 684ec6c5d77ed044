#pragma once

// Batched layer primitives. Convolutional activations are (batch, channels,
// length); fully connected activations are (batch, features). Every backward
// routine returns exact analytic gradients of its forward counterpart.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gaitmtl/nn/tensor.hpp"

namespace gaitmtl::nn {

// --- valid 1-D convolution, stride 1 ---------------------------------------

/// x: (B, Cin, L), w: (Cout, Cin, k), b: (Cout) -> (B, Cout, L - k + 1).
Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct ConvGrads {
  Tensor grad_x;  ///< empty when not requested
  Tensor grad_w;
  Tensor grad_b;
};

ConvGrads conv_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                        bool need_grad_x = true);

/// Convolution layer that keeps its unfolded input between forward and backward.
class Conv1d {
 public:
  Conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, const std::string& prefix);

  Tensor forward(const Tensor& x);
  /// Accumulates into weight/bias grads; returns grad w.r.t. the input when asked.
  Tensor backward(const Tensor& grad_out, bool need_grad_x);

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  const Param& weight() const { return weight_; }
  const Param& bias() const { return bias_; }
  std::size_t in_channels() const { return in_ch_; }
  std::size_t out_channels() const { return out_ch_; }
  std::size_t kernel() const { return kernel_; }

 private:
  std::size_t in_ch_, out_ch_, kernel_;
  Param weight_;
  Param bias_;
  std::vector<double> cols_;
  std::size_t batch_ = 0, in_len_ = 0;
};

// --- batch normalization ----------------------------------------------------

enum class NormMode { kTrain, kEval };

struct BatchNormState {
  Param gamma;
  Param beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  explicit BatchNormState(std::size_t channels = 0, const std::string& prefix = "bn");
};

struct BatchNormCache {
  Tensor x_hat;
  std::vector<double> inv_std;
  NormMode mode = NormMode::kTrain;
};

/// Per-channel normalization over (batch, length). Train mode uses batch
/// statistics and updates the running estimates; eval mode is a fixed affine map.
Tensor batchnorm_forward(const Tensor& x, BatchNormState& state, NormMode mode,
                         BatchNormCache* cache = nullptr);

/// Eval-mode normalization without touching any state.
Tensor batchnorm_eval(const Tensor& x, const BatchNormState& state);

struct BatchNormGrads {
  Tensor grad_x;
  Tensor grad_gamma;
  Tensor grad_beta;
};

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                  const BatchNormState& state);

// --- activations / pooling ----------------------------------------------------

Tensor relu(const Tensor& x);
/// Passes gradient where x > 0; the derivative at exactly 0 is 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& x);

struct PoolResult {
  Tensor y;
  std::vector<std::size_t> argmax;  ///< flat input index per output element
};

/// 2x1 max pooling along length: (B, C, L) -> (B, C, floor(L / 2)). Ties pick
/// the first index.
PoolResult maxpool_forward(const Tensor& x);
Tensor maxpool_backward(const Tensor& grad_out, std::span<const std::size_t> argmax,
                        const Shape& input_shape);

// --- fully connected ----------------------------------------------------------

/// x: (B, in), w: (out, in), b: (out) -> (B, out).
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct LinearGrads {
  Tensor grad_x;
  Tensor grad_w;
  Tensor grad_b;
};

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                            bool need_grad_x = true);

// --- output layers / losses ---------------------------------------------------

/// Row-wise max-subtracted softmax of (B, K) logits.
Tensor softmax(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  ///< d(loss)/d(input)
};

/// Mean over the batch of -log softmax(logits)[target]; gradient is
/// (softmax - one_hot) / B.
LossResult softmax_xent(const Tensor& logits, std::span<const int> targets);

/// Mean squared error over every element of `pred`.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace gaitmtl::nn
