#include "gaitmtl/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "gaitmtl/errors.hpp"

namespace gaitmtl::nn {

namespace {

using ColMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMap = Eigen::Map<ColMatrix>;
using ConstColMap = Eigen::Map<const ColMatrix>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

void expect_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    fail(Errc::kShapeError, std::string(what) + " must have rank " + std::to_string(rank) +
                                ", got " + shape_string(t.shape()));
  }
}

/// Unfolds (B, Cin, L) into a column-major (Cin*k) x (B*Lout) matrix.
void im2col(const Tensor& x, std::size_t k, std::vector<double>& cols) {
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t lout = len - k + 1;
  const std::size_t rows = cin * k;
  cols.resize(rows * batch * lout);
  const double* src = x.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < lout; ++i) {
      double* col = cols.data() + (b * lout + i) * rows;
      for (std::size_t c = 0; c < cin; ++c) {
        const double* in = src + (b * cin + c) * len + i;
        for (std::size_t j = 0; j < k; ++j) col[c * k + j] = in[j];
      }
    }
  }
}

void check_conv_shapes(const Tensor& x, const Tensor& w) {
  expect_rank(x, 3, "conv input");
  expect_rank(w, 3, "conv weight");
  if (w.dim(1) != x.dim(1)) {
    fail(Errc::kShapeError, "conv input channels " + std::to_string(x.dim(1)) +
                                " != weight channels " + std::to_string(w.dim(1)));
  }
  if (x.dim(2) < w.dim(2)) {
    fail(Errc::kShapeError, "conv input length " + std::to_string(x.dim(2)) +
                                " shorter than kernel " + std::to_string(w.dim(2)));
  }
}

Tensor conv_forward_cols(const std::vector<double>& cols, std::size_t batch, std::size_t lout,
                         const Tensor& w, const Tensor& b) {
  const std::size_t cout = w.dim(0);
  const std::size_t rows = w.dim(1) * w.dim(2);
  ConstRowMap wm(w.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows));
  ConstColMap cm(cols.data(), static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(batch * lout));
  RowMatrix y = wm * cm;  // (Cout, B*Lout)
  Tensor out({batch, cout, lout});
  double* dst = out.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t o = 0; o < cout; ++o) {
      const double* row = y.data() + o * batch * lout + bi * lout;
      double* d = dst + (bi * cout + o) * lout;
      const double bias = b[o];
      for (std::size_t i = 0; i < lout; ++i) d[i] = row[i] + bias;
    }
  }
  return out;
}

ConvGrads conv_backward_cols(const Tensor& grad_out, const std::vector<double>& cols,
                             const Shape& x_shape, const Tensor& w, bool need_grad_x) {
  const std::size_t batch = x_shape[0], cin = x_shape[1], len = x_shape[2];
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t lout = len - k + 1;
  const std::size_t rows = cin * k;
  if (grad_out.rank() != 3 || grad_out.dim(0) != batch || grad_out.dim(1) != cout ||
      grad_out.dim(2) != lout) {
    fail(Errc::kShapeError, "conv grad_out shape " + shape_string(grad_out.shape()) +
                                " inconsistent with forward");
  }
  // Gather grad_out into (Cout, B*Lout).
  RowMatrix g(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(batch * lout));
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t o = 0; o < cout; ++o) {
      const double* src = grad_out.data() + (bi * cout + o) * lout;
      double* d = g.data() + o * batch * lout + bi * lout;
      std::copy(src, src + lout, d);
    }
  }
  ConstColMap cm(cols.data(), static_cast<Eigen::Index>(rows),
                 static_cast<Eigen::Index>(batch * lout));

  ConvGrads grads;
  grads.grad_w = Tensor({cout, cin, k});
  RowMap gw(grads.grad_w.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows));
  gw.noalias() = g * cm.transpose();

  grads.grad_b = Tensor({cout});
  for (std::size_t o = 0; o < cout; ++o) {
    double s = 0.0;
    const double* row = g.data() + o * batch * lout;
    for (std::size_t i = 0; i < batch * lout; ++i) s += row[i];
    grads.grad_b[o] = s;
  }

  if (need_grad_x) {
    ConstRowMap wm(w.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows));
    ColMatrix gcols = wm.transpose() * g;  // (Cin*k, B*Lout)
    grads.grad_x = Tensor(x_shape);
    double* gx = grads.grad_x.data();
    for (std::size_t bi = 0; bi < batch; ++bi) {
      for (std::size_t i = 0; i < lout; ++i) {
        const double* col = gcols.data() + (bi * lout + i) * rows;
        for (std::size_t c = 0; c < cin; ++c) {
          double* out = gx + (bi * cin + c) * len + i;
          for (std::size_t j = 0; j < k; ++j) out[j] += col[c * k + j];
        }
      }
    }
  }
  return grads;
}

}  // namespace

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_conv_shapes(x, w);
  if (b.size() != w.dim(0)) fail(Errc::kShapeError, "conv bias size mismatch");
  std::vector<double> cols;
  im2col(x, w.dim(2), cols);
  return conv_forward_cols(cols, x.dim(0), x.dim(2) - w.dim(2) + 1, w, b);
}

ConvGrads conv_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                        bool need_grad_x) {
  check_conv_shapes(x, w);
  std::vector<double> cols;
  im2col(x, w.dim(2), cols);
  return conv_backward_cols(grad_out, cols, x.shape(), w, need_grad_x);
}

Conv1d::Conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
               const std::string& prefix)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      weight_(prefix + ".weight", Tensor({out_ch, in_ch, kernel})),
      bias_(prefix + ".bias", Tensor({out_ch})) {}

Tensor Conv1d::forward(const Tensor& x) {
  check_conv_shapes(x, weight_.value);
  batch_ = x.dim(0);
  in_len_ = x.dim(2);
  im2col(x, kernel_, cols_);
  return conv_forward_cols(cols_, batch_, in_len_ - kernel_ + 1, weight_.value, bias_.value);
}

Tensor Conv1d::backward(const Tensor& grad_out, bool need_grad_x) {
  auto g = conv_backward_cols(grad_out, cols_, {batch_, in_ch_, in_len_}, weight_.value,
                              need_grad_x);
  for (std::size_t i = 0; i < g.grad_w.size(); ++i) weight_.grad[i] += g.grad_w[i];
  for (std::size_t i = 0; i < g.grad_b.size(); ++i) bias_.grad[i] += g.grad_b[i];
  return std::move(g.grad_x);
}

// --- batch norm ---------------------------------------------------------------

BatchNormState::BatchNormState(std::size_t channels, const std::string& prefix)
    : gamma(prefix + ".gamma", Tensor({channels}, 1.0)),
      beta(prefix + ".beta", Tensor({channels}, 0.0)),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0) {}

Tensor batchnorm_forward(const Tensor& x, BatchNormState& state, NormMode mode,
                         BatchNormCache* cache) {
  expect_rank(x, 3, "batch-norm input");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (ch != state.gamma.value.size()) fail(Errc::kShapeError, "batch-norm channel mismatch");
  if (mode == NormMode::kTrain && batch < 2) {
    fail(Errc::kInvalidBatch, "batch norm in train mode needs a batch of at least 2");
  }
  const double n = static_cast<double>(batch * len);
  std::vector<double> mean(ch), inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    if (mode == NormMode::kTrain) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = x.data() + (b * ch + c) * len;
        for (std::size_t i = 0; i < len; ++i) s += p[i];
      }
      const double mu = s / n;
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = x.data() + (b * ch + c) * len;
        for (std::size_t i = 0; i < len; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / n;
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + state.epsilon);
      const double m = state.momentum;
      state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mu;
      const double unbiased = n > 1.0 ? ss / (n - 1.0) : var;
      state.running_var[c] = (1.0 - m) * state.running_var[c] + m * unbiased;
    } else {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.epsilon);
    }
  }
  Tensor y(x.shape());
  Tensor x_hat;
  if (cache) x_hat = Tensor(x.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t off = (b * ch + c) * len;
      const double g = state.gamma.value[c], be = state.beta.value[c], mu = mean[c], is = inv_std[c];
      for (std::size_t i = 0; i < len; ++i) {
        const double h = (x[off + i] - mu) * is;
        if (cache) x_hat[off + i] = h;
        y[off + i] = g * h + be;
      }
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return y;
}

Tensor batchnorm_eval(const Tensor& x, const BatchNormState& state) {
  expect_rank(x, 3, "batch-norm input");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (ch != state.gamma.value.size()) fail(Errc::kShapeError, "batch-norm channel mismatch");
  Tensor y(x.shape());
  for (std::size_t c = 0; c < ch; ++c) {
    const double mu = state.running_mean[c];
    const double is = 1.0 / std::sqrt(state.running_var[c] + state.epsilon);
    const double g = state.gamma.value[c], be = state.beta.value[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * len;
      for (std::size_t i = 0; i < len; ++i) y[off + i] = g * ((x[off + i] - mu) * is) + be;
    }
  }
  return y;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormCache& cache,
                                  const BatchNormState& state) {
  if (grad_out.shape() != cache.x_hat.shape()) {
    fail(Errc::kShapeError, "batch-norm grad_out shape mismatch");
  }
  const std::size_t batch = grad_out.dim(0), ch = grad_out.dim(1), len = grad_out.dim(2);
  const double n = static_cast<double>(batch * len);
  BatchNormGrads g{Tensor(grad_out.shape()), Tensor({ch}), Tensor({ch})};
  for (std::size_t c = 0; c < ch; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * len;
      for (std::size_t i = 0; i < len; ++i) {
        sum_g += grad_out[off + i];
        sum_gx += grad_out[off + i] * cache.x_hat[off + i];
      }
    }
    g.grad_beta[c] = sum_g;
    g.grad_gamma[c] = sum_gx;
    const double scale = state.gamma.value[c] * cache.inv_std[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * len;
      for (std::size_t i = 0; i < len; ++i) {
        if (cache.mode == NormMode::kEval) {
          g.grad_x[off + i] = scale * grad_out[off + i];
        } else {
          g.grad_x[off + i] =
              scale / n * (n * grad_out[off + i] - sum_g - cache.x_hat[off + i] * sum_gx);
        }
      }
    }
  }
  return g;
}

// --- activations ----------------------------------------------------------------

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& x) {
  if (grad_out.shape() != x.shape()) fail(Errc::kShapeError, "relu grad shape mismatch");
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
  return g;
}

PoolResult maxpool_forward(const Tensor& x) {
  expect_rank(x, 3, "max-pool input");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (len < 2) fail(Errc::kShapeError, "max-pool input shorter than 2");
  const std::size_t lout = len / 2;
  PoolResult r{Tensor({batch, ch, lout}), std::vector<std::size_t>(batch * ch * lout)};
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    for (std::size_t i = 0; i < lout; ++i) {
      const std::size_t a = bc * len + 2 * i;
      const std::size_t pick = x[a + 1] > x[a] ? a + 1 : a;
      r.y[bc * lout + i] = x[pick];
      r.argmax[bc * lout + i] = pick;
    }
  }
  return r;
}

Tensor maxpool_backward(const Tensor& grad_out, std::span<const std::size_t> argmax,
                        const Shape& input_shape) {
  if (grad_out.size() != argmax.size()) fail(Errc::kShapeError, "max-pool grad size mismatch");
  Tensor g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
  return g;
}

// --- fully connected --------------------------------------------------------------

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  expect_rank(x, 2, "linear input");
  expect_rank(w, 2, "linear weight");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (w.dim(1) != in) {
    fail(Errc::kShapeError, "linear input features " + std::to_string(in) + " != weight " +
                                std::to_string(w.dim(1)));
  }
  if (b.size() != out) fail(Errc::kShapeError, "linear bias size mismatch");
  Tensor y({batch, out});
  ConstRowMap xm(x.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
  ConstRowMap wm(w.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  RowMap ym(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
  ym.noalias() = xm * wm.transpose();
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) y[r * out + o] += b[o];
  }
  return y;
}

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                            bool need_grad_x) {
  expect_rank(grad_out, 2, "linear grad_out");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (grad_out.dim(0) != batch || grad_out.dim(1) != out) {
    fail(Errc::kShapeError, "linear grad_out shape mismatch");
  }
  ConstRowMap gm(grad_out.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
  ConstRowMap xm(x.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
  LinearGrads g;
  g.grad_w = Tensor({out, in});
  RowMap gw(g.grad_w.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  gw.noalias() = gm.transpose() * xm;
  g.grad_b = Tensor({out});
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) g.grad_b[o] += grad_out[r * out + o];
  }
  if (need_grad_x) {
    g.grad_x = Tensor({batch, in});
    ConstRowMap wm(w.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    RowMap gx(g.grad_x.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in));
    gx.noalias() = gm * wm;
  }
  return g;
}

// --- losses -------------------------------------------------------------------------

Tensor softmax(const Tensor& logits) {
  expect_rank(logits, 2, "softmax input");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  Tensor p(logits.shape());
  for (std::size_t r = 0; r < batch; ++r) {
    const double* z = logits.data() + r * k;
    const double mx = *std::max_element(z, z + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[r * k + j] = std::exp(z[j] - mx);
      s += p[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) p[r * k + j] /= s;
  }
  return p;
}

LossResult softmax_xent(const Tensor& logits, std::span<const int> targets) {
  expect_rank(logits, 2, "logits");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  if (k < 2) fail(Errc::kShapeError, "cross-entropy needs at least 2 classes");
  if (targets.size() != batch) fail(Errc::kShapeError, "target count != batch size");
  LossResult r{0.0, Tensor(logits.shape())};
  for (std::size_t row = 0; row < batch; ++row) {
    const int t = targets[row];
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      fail(Errc::kInvalidLabel, "class index " + std::to_string(t) + " out of range");
    }
    const double* z = logits.data() + row * k;
    const double mx = *std::max_element(z, z + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(z[j] - mx);
    const double log_sum = std::log(s);
    r.loss += -(z[t] - mx - log_sum);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(z[j] - mx - log_sum);
      r.grad[row * k + j] = (p - (static_cast<std::size_t>(t) == j ? 1.0 : 0.0)) /
                            static_cast<double>(batch);
    }
  }
  r.loss /= static_cast<double>(batch);
  return r;
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) fail(Errc::kShapeError, "mse shape mismatch");
  if (pred.empty()) fail(Errc::kShapeError, "mse of empty tensor");
  const double n = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

}  // namespace gaitmtl::nn
