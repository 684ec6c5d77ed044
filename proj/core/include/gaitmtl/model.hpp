#pragma once

// Multitask architecture: a stack of convolutional blocks (conv -> batch norm
// -> ReLU -> optional 2x1 max-pool) feeding task-specific MLP heads. The phase
// head reads the last block; the terrain head reads block 2 and shares blocks
// 1-2 (same storage) with the phase model.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gaitmtl/nn/layers.hpp"
#include "gaitmtl/nn/module.hpp"

namespace gaitmtl {

struct ConvBlockSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  bool pool = false;
  std::size_t in_length = 0;
  std::size_t out_length = 0;

  friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

/// The nine-block feature network with lengths derived from `input_length`.
/// The first `count` rows are returned (2 for the terrain tap).
std::vector<ConvBlockSpec> backbone_spec(std::size_t input_length = 200, std::size_t count = 9);

enum class OutputActivation { kIdentity, kRelu, kSoftmax };

struct HeadSpec {
  std::size_t input_features = 0;
  std::vector<std::size_t> hidden;
  std::size_t outputs = 0;
  OutputActivation activation = OutputActivation::kIdentity;

  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

struct ModelSpec {
  std::string name;
  std::size_t input_channels = 6;
  std::size_t input_length = 200;
  std::vector<ConvBlockSpec> blocks;
  HeadSpec head;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
  /// FNV-1a 64 of the canonical JSON dump.
  std::uint64_t fingerprint() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct GprHeadOptions {
  std::vector<std::size_t> hidden{128, 64};
  /// Apply ReLU to the two phase outputs instead of leaving them linear.
  bool relu_output = false;
};

struct TcHeadOptions {
  std::vector<std::size_t> hidden{64};
};

inline constexpr std::size_t kTerrainTapBlocks = 2;
inline constexpr std::size_t kNumTerrains = 3;

ModelSpec gpr_model_spec(const GprHeadOptions& options = {});
ModelSpec tc_model_spec(const TcHeadOptions& options = {});
ModelSpec mlp_baseline_spec(const TcHeadOptions& options = {});

class ConvBlock {
 public:
  ConvBlock(const ConvBlockSpec& spec, const std::string& prefix);

  nn::Tensor forward(const nn::Tensor& x, nn::NormMode mode);
  nn::Tensor backward(const nn::Tensor& grad_out, bool need_grad_x);
  nn::Tensor infer(const nn::Tensor& x) const;

  const ConvBlockSpec& spec() const { return spec_; }
  nn::Conv1d& conv() { return conv_; }
  nn::BatchNormState& norm() { return norm_; }
  const nn::Conv1d& conv() const { return conv_; }
  const nn::BatchNormState& norm() const { return norm_; }

  std::vector<nn::Param*> params();
  std::vector<nn::BufferRef> buffers();

 private:
  ConvBlockSpec spec_;
  nn::Conv1d conv_;
  nn::BatchNormState norm_;
  nn::BatchNormCache norm_cache_;
  nn::Tensor pre_relu_;
  nn::Shape pool_in_shape_;
  std::vector<std::size_t> pool_argmax_;
};

class MlpHead {
 public:
  MlpHead(const HeadSpec& spec, const std::string& prefix);

  /// Input (B, ...) is flattened to (B, input_features).
  nn::Tensor forward(const nn::Tensor& x);
  nn::Tensor backward(const nn::Tensor& grad_out, bool need_grad_x);
  /// Output activation applied; softmax only when `apply_softmax`.
  nn::Tensor infer(const nn::Tensor& x, bool apply_softmax = true) const;

  const HeadSpec& spec() const { return spec_; }
  std::vector<nn::Param*> params();

 private:
  struct Dense {
    nn::Param weight;
    nn::Param bias;
    nn::Tensor input;
    nn::Tensor pre_activation;
  };
  HeadSpec spec_;
  std::vector<Dense> layers_;
  nn::Shape input_shape_;
};

/// A backbone prefix plus one head. Blocks are held by shared pointer so two
/// networks can share storage; the trainability mask is per network.
class Network : public nn::Module {
 public:
  Network(ModelSpec spec, std::vector<std::shared_ptr<ConvBlock>> blocks,
          std::unique_ptr<MlpHead> head);

  /// Head output before any softmax (softmax is fused into the loss). A ReLU
  /// output activation is applied here. Frozen blocks always normalize with
  /// their running statistics.
  nn::Tensor forward(const nn::Tensor& x, bool training) override;
  void backward(const nn::Tensor& grad_out) override;
  std::vector<nn::ParamRef> parameters() override;
  std::vector<nn::BufferRef> buffers() override;

  /// Eval-mode forward with the output activation applied (softmax included).
  /// Keeps no caches, so concurrent calls on one network are safe.
  nn::Tensor predict(const nn::Tensor& x) const;
  /// Like `predict` but stops before any softmax.
  nn::Tensor predict_raw(const nn::Tensor& x) const;

  const ModelSpec& spec() const { return spec_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const std::shared_ptr<ConvBlock>& block(std::size_t i) const { return blocks_.at(i); }
  MlpHead& head() { return *head_; }
  const MlpHead& head() const { return *head_; }

  bool block_trainable(std::size_t i) const { return block_trainable_.at(i); }
  void set_block_trainable(std::size_t i, bool trainable) { block_trainable_.at(i) = trainable; }
  bool head_trainable() const { return head_trainable_; }
  void set_head_trainable(bool trainable) { head_trainable_ = trainable; }

  /// Output shape (channels, length, 1) of every block in the last forward.
  const std::vector<nn::Shape>& block_output_shapes() const { return block_shapes_; }

 private:
  ModelSpec spec_;
  std::vector<std::shared_ptr<ConvBlock>> blocks_;
  std::unique_ptr<MlpHead> head_;
  std::vector<bool> block_trainable_;
  bool head_trainable_ = true;
  std::vector<nn::Shape> block_shapes_;
};

/// Nine blocks + phase head (1650 -> hidden -> 2).
Network build_gpr_model(std::uint64_t seed, const GprHeadOptions& options = {});
/// Terrain network on blocks 1-2 of `gpr` (shared storage) + fresh head.
Network attach_tc_head(Network& gpr, std::uint64_t seed, const TcHeadOptions& options = {});
/// Masks every backbone block; their batch norms switch to running statistics.
void freeze_backbone(Network& model);
/// Same structure as the terrain network, every parameter fresh and trainable.
Network build_tc_scratch(std::uint64_t seed, const TcHeadOptions& options = {});
/// Head-only network reading the flattened 6x200 input.
Network build_mlp_baseline(std::uint64_t seed, const TcHeadOptions& options = {});
/// Builds an untrained network of arbitrary spec (weights from `seed`).
Network build_network(const ModelSpec& spec, std::uint64_t seed);

// --- persistence ---------------------------------------------------------------

std::string serialize_weights(Network& model);
void save_weights(Network& model, const std::filesystem::path& path);
/// Rebuilds the network from the spec embedded in the file.
Network load_weights(const std::filesystem::path& path);
/// Same, but rejects files whose fingerprint differs from `expected`.
Network load_weights(const std::filesystem::path& path, const ModelSpec& expected);
Network deserialize_weights(const std::string& bytes);

/// Phase network plus a terrain network sharing its first two blocks.
struct MultitaskModel {
  Network gpr;
  Network tc;
};

std::string serialize_multitask(MultitaskModel& model);
void save_multitask(MultitaskModel& model, const std::filesystem::path& path);
MultitaskModel load_multitask(const std::filesystem::path& path);
MultitaskModel deserialize_multitask(const std::string& bytes);

}  // namespace gaitmtl
