#include "gaitmtl/model.hpp"

#include <cmath>
#include <random>
#include <set>

#include "gaitmtl/csv_io.hpp"
#include "gaitmtl/errors.hpp"
#include "gaitmtl/random.hpp"
#include "gaitmtl/weights_io.hpp"

namespace gaitmtl {

using nn::Tensor;

namespace {

struct BlockRow {
  std::size_t in_ch, out_ch, kernel;
  bool pool;
};

// Feature network rows: channels, kernel length, 2x1 pooling.
constexpr BlockRow kBackboneRows[] = {
    {6, 10, 5, true},   {10, 20, 5, true},  {20, 20, 3, false},
    {20, 30, 3, false}, {30, 30, 3, false}, {30, 40, 3, false},
    {40, 40, 3, false}, {40, 50, 3, false}, {50, 50, 3, false},
};

std::string_view activation_name(OutputActivation a) {
  switch (a) {
    case OutputActivation::kIdentity: return "identity";
    case OutputActivation::kRelu: return "relu";
    case OutputActivation::kSoftmax: return "softmax";
  }
  return "identity";
}

OutputActivation activation_from(const std::string& s) {
  if (s == "identity") return OutputActivation::kIdentity;
  if (s == "relu") return OutputActivation::kRelu;
  if (s == "softmax") return OutputActivation::kSoftmax;
  fail(Errc::kCorruptFile, "unknown output activation '" + s + "'");
}

std::size_t tap_features(const std::vector<ConvBlockSpec>& blocks, std::size_t channels,
                         std::size_t length) {
  if (blocks.empty()) return channels * length;
  return blocks.back().out_channels * blocks.back().out_length;
}

void init_uniform(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
}

void init_block(ConvBlock& block, std::mt19937_64& rng) {
  const auto& s = block.spec();
  init_uniform(block.conv().weight().value, s.in_channels * s.kernel, rng);
}

std::string block_prefix(std::size_t i) { return "block" + std::to_string(i + 1); }

}  // namespace

// --- specs -----------------------------------------------------------------------

std::vector<ConvBlockSpec> backbone_spec(std::size_t input_length, std::size_t count) {
  if (count > std::size(kBackboneRows)) fail(Errc::kInvalidConfig, "backbone has 9 blocks");
  std::vector<ConvBlockSpec> out;
  std::size_t len = input_length;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& row = kBackboneRows[i];
    if (len < row.kernel) {
      fail(Errc::kShapeError, "input length " + std::to_string(input_length) +
                                  " too short for block " + std::to_string(i + 1));
    }
    ConvBlockSpec b{row.in_ch, row.out_ch, row.kernel, row.pool, len, len - row.kernel + 1};
    if (b.pool) b.out_length /= 2;
    len = b.out_length;
    out.push_back(b);
  }
  return out;
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json blocks_json = nlohmann::json::array();
  std::size_t channels = input_channels;
  for (const auto& b : blocks) {
    blocks_json.push_back({
        {"in_channels", b.in_channels},
        {"out_channels", b.out_channels},
        {"kernel", {b.kernel, 1}},
        {"pool", b.pool ? nlohmann::json::array({2, 1}) : nlohmann::json(nullptr)},
        {"input_size", {channels, b.in_length, 1}},
        {"output_size", {b.out_channels, b.out_length, 1}},
    });
    channels = b.out_channels;
  }
  return {
      {"name", name},
      {"input_size", {input_channels, input_length, 1}},
      {"blocks", blocks_json},
      {"head",
       {{"input_features", head.input_features},
        {"hidden", head.hidden},
        {"outputs", head.outputs},
        {"output_activation", activation_name(head.activation)}}},
  };
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.name = j.at("name").get<std::string>();
    s.input_channels = j.at("input_size").at(0).get<std::size_t>();
    s.input_length = j.at("input_size").at(1).get<std::size_t>();
    for (const auto& b : j.at("blocks")) {
      ConvBlockSpec c;
      c.in_channels = b.at("in_channels").get<std::size_t>();
      c.out_channels = b.at("out_channels").get<std::size_t>();
      c.kernel = b.at("kernel").at(0).get<std::size_t>();
      c.pool = !b.at("pool").is_null();
      c.in_length = b.at("input_size").at(1).get<std::size_t>();
      c.out_length = b.at("output_size").at(1).get<std::size_t>();
      s.blocks.push_back(c);
    }
    const auto& h = j.at("head");
    s.head.input_features = h.at("input_features").get<std::size_t>();
    s.head.hidden = h.at("hidden").get<std::vector<std::size_t>>();
    s.head.outputs = h.at("outputs").get<std::size_t>();
    s.head.activation = activation_from(h.at("output_activation").get<std::string>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kCorruptFile, std::string("malformed model spec: ") + e.what());
  }
}

std::uint64_t ModelSpec::fingerprint() const { return fnv1a64(to_json().dump()); }

ModelSpec gpr_model_spec(const GprHeadOptions& options) {
  ModelSpec s;
  s.name = "gpr";
  s.blocks = backbone_spec(s.input_length, 9);
  s.head = {tap_features(s.blocks, s.input_channels, s.input_length), options.hidden, 2,
            options.relu_output ? OutputActivation::kRelu : OutputActivation::kIdentity};
  return s;
}

ModelSpec tc_model_spec(const TcHeadOptions& options) {
  ModelSpec s;
  s.name = "tc";
  s.blocks = backbone_spec(s.input_length, kTerrainTapBlocks);
  s.head = {tap_features(s.blocks, s.input_channels, s.input_length), options.hidden,
            kNumTerrains, OutputActivation::kSoftmax};
  return s;
}

ModelSpec mlp_baseline_spec(const TcHeadOptions& options) {
  ModelSpec s;
  s.name = "mlp";
  s.head = {s.input_channels * s.input_length, options.hidden, kNumTerrains,
            OutputActivation::kSoftmax};
  return s;
}

// --- conv block --------------------------------------------------------------------

ConvBlock::ConvBlock(const ConvBlockSpec& spec, const std::string& prefix)
    : spec_(spec),
      conv_(spec.in_channels, spec.out_channels, spec.kernel, prefix + ".conv"),
      norm_(spec.out_channels, prefix + ".bn") {}

Tensor ConvBlock::forward(const Tensor& x, nn::NormMode mode) {
  Tensor h = nn::batchnorm_forward(conv_.forward(x), norm_, mode, &norm_cache_);
  pre_relu_ = h;
  h = nn::relu(h);
  if (!spec_.pool) return h;
  pool_in_shape_ = h.shape();
  auto pooled = nn::maxpool_forward(h);
  pool_argmax_ = std::move(pooled.argmax);
  return std::move(pooled.y);
}

Tensor ConvBlock::backward(const Tensor& grad_out, bool need_grad_x) {
  Tensor g = spec_.pool ? nn::maxpool_backward(grad_out, pool_argmax_, pool_in_shape_) : grad_out;
  g = nn::relu_backward(g, pre_relu_);
  auto bn = nn::batchnorm_backward(g, norm_cache_, norm_);
  for (std::size_t i = 0; i < bn.grad_gamma.size(); ++i) {
    norm_.gamma.grad[i] += bn.grad_gamma[i];
    norm_.beta.grad[i] += bn.grad_beta[i];
  }
  return conv_.backward(bn.grad_x, need_grad_x);
}

Tensor ConvBlock::infer(const Tensor& x) const {
  Tensor h = nn::relu(nn::batchnorm_eval(
      nn::conv_forward(x, conv_.weight().value, conv_.bias().value), norm_));
  if (!spec_.pool) return h;
  return nn::maxpool_forward(h).y;
}

std::vector<nn::Param*> ConvBlock::params() {
  return {&conv_.weight(), &conv_.bias(), &norm_.gamma, &norm_.beta};
}

std::vector<nn::BufferRef> ConvBlock::buffers() {
  const std::string prefix = norm_.gamma.name.substr(0, norm_.gamma.name.rfind('.'));
  return {{prefix + ".running_mean", &norm_.running_mean},
          {prefix + ".running_var", &norm_.running_var}};
}

// --- MLP head ----------------------------------------------------------------------

MlpHead::MlpHead(const HeadSpec& spec, const std::string& prefix) : spec_(spec) {
  std::size_t in = spec.input_features;
  std::vector<std::size_t> widths = spec.hidden;
  widths.push_back(spec.outputs);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string name = prefix + ".fc" + std::to_string(i + 1);
    layers_.push_back({nn::Param(name + ".weight", Tensor({widths[i], in})),
                       nn::Param(name + ".bias", Tensor({widths[i]})), {}, {}});
    in = widths[i];
  }
}

Tensor MlpHead::forward(const Tensor& x) {
  input_shape_ = x.shape();
  const std::size_t batch = x.dim(0);
  if (x.size() != batch * spec_.input_features) {
    fail(Errc::kShapeError, "head expects " + std::to_string(spec_.input_features) +
                                " features, got input " + nn::shape_string(x.shape()));
  }
  Tensor h = x.reshaped({batch, spec_.input_features});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    l.input = h;
    h = nn::linear_forward(h, l.weight.value, l.bias.value);
    const bool last = i + 1 == layers_.size();
    if (!last || spec_.activation == OutputActivation::kRelu) {
      l.pre_activation = h;
      h = nn::relu(h);
    }
  }
  return h;
}

Tensor MlpHead::backward(const Tensor& grad_out, bool need_grad_x) {
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    auto& l = layers_[i];
    const bool last = i + 1 == layers_.size();
    if (!last || spec_.activation == OutputActivation::kRelu) {
      g = nn::relu_backward(g, l.pre_activation);
    }
    auto lg = nn::linear_backward(g, l.input, l.weight.value, i > 0 || need_grad_x);
    for (std::size_t j = 0; j < lg.grad_w.size(); ++j) l.weight.grad[j] += lg.grad_w[j];
    for (std::size_t j = 0; j < lg.grad_b.size(); ++j) l.bias.grad[j] += lg.grad_b[j];
    g = std::move(lg.grad_x);
  }
  if (need_grad_x) g.reshape(input_shape_);
  return g;
}

Tensor MlpHead::infer(const Tensor& x, bool apply_softmax) const {
  const std::size_t batch = x.dim(0);
  if (x.size() != batch * spec_.input_features) {
    fail(Errc::kShapeError, "head expects " + std::to_string(spec_.input_features) + " features");
  }
  Tensor h = x.reshaped({batch, spec_.input_features});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = nn::linear_forward(h, layers_[i].weight.value, layers_[i].bias.value);
    const bool last = i + 1 == layers_.size();
    if (!last || spec_.activation == OutputActivation::kRelu) h = nn::relu(h);
  }
  if (apply_softmax && spec_.activation == OutputActivation::kSoftmax) h = nn::softmax(h);
  return h;
}

std::vector<nn::Param*> MlpHead::params() {
  std::vector<nn::Param*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

// --- network -------------------------------------------------------------------------

Network::Network(ModelSpec spec, std::vector<std::shared_ptr<ConvBlock>> blocks,
                 std::unique_ptr<MlpHead> head)
    : spec_(std::move(spec)),
      blocks_(std::move(blocks)),
      head_(std::move(head)),
      block_trainable_(blocks_.size(), true) {
  if (blocks_.size() != spec_.blocks.size()) fail(Errc::kShapeError, "block count != spec");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (!(blocks_[i]->spec() == spec_.blocks[i])) {
      fail(Errc::kShapeError, "block " + std::to_string(i + 1) + " does not match spec");
    }
  }
  if (!(head_->spec() == spec_.head)) fail(Errc::kShapeError, "head does not match spec");
}

Tensor Network::forward(const Tensor& x, bool training) {
  if (x.rank() != 3 || x.dim(1) != spec_.input_channels || x.dim(2) != spec_.input_length) {
    fail(Errc::kShapeError, "network input must be (B, " + std::to_string(spec_.input_channels) +
                                ", " + std::to_string(spec_.input_length) + "), got " +
                                nn::shape_string(x.shape()));
  }
  block_shapes_.clear();
  Tensor h = x;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto mode =
        training && block_trainable_[i] ? nn::NormMode::kTrain : nn::NormMode::kEval;
    h = blocks_[i]->forward(h, mode);
    block_shapes_.push_back({h.dim(1), h.dim(2), 1});
  }
  return head_->forward(h);
}

void Network::backward(const Tensor& grad_out) {
  std::size_t lowest = blocks_.size();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (block_trainable_[i]) {
      lowest = i;
      break;
    }
  }
  Tensor g = head_->backward(grad_out, lowest < blocks_.size());
  for (std::size_t i = blocks_.size(); i-- > lowest;) {
    g = blocks_[i]->backward(g, i > lowest);
  }
}

std::vector<nn::ParamRef> Network::parameters() {
  std::vector<nn::ParamRef> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    for (auto* p : blocks_[i]->params()) out.push_back({p, block_trainable_[i]});
  }
  for (auto* p : head_->params()) out.push_back({p, head_trainable_});
  return out;
}

std::vector<nn::BufferRef> Network::buffers() {
  std::vector<nn::BufferRef> out;
  for (auto& b : blocks_) {
    for (auto& r : b->buffers()) out.push_back(r);
  }
  return out;
}

Tensor Network::predict(const Tensor& x) const {
  Tensor h = x;
  for (const auto& b : blocks_) h = b->infer(h);
  return head_->infer(h, true);
}

Tensor Network::predict_raw(const Tensor& x) const {
  Tensor h = x;
  for (const auto& b : blocks_) h = b->infer(h);
  return head_->infer(h, false);
}

// --- builders -------------------------------------------------------------------------

namespace {

std::vector<std::shared_ptr<ConvBlock>> make_blocks(const std::vector<ConvBlockSpec>& specs,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, seed_stream::kBackboneInit));
  std::vector<std::shared_ptr<ConvBlock>> blocks;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    blocks.push_back(std::make_shared<ConvBlock>(specs[i], block_prefix(i)));
    init_block(*blocks.back(), rng);
  }
  return blocks;
}

std::unique_ptr<MlpHead> make_head(const HeadSpec& spec, std::uint64_t seed, std::uint64_t stream) {
  auto head = std::make_unique<MlpHead>(spec, "head");
  std::mt19937_64 rng(mix_seed(seed, stream));
  for (auto* p : head->params()) {
    if (p->value.rank() == 2) init_uniform(p->value, p->value.dim(1), rng);
  }
  return head;
}

}  // namespace

Network build_network(const ModelSpec& spec, std::uint64_t seed) {
  return Network(spec, make_blocks(spec.blocks, seed),
                 make_head(spec.head, seed, seed_stream::kGprHeadInit));
}

Network build_gpr_model(std::uint64_t seed, const GprHeadOptions& options) {
  return build_network(gpr_model_spec(options), seed);
}

Network attach_tc_head(Network& gpr, std::uint64_t seed, const TcHeadOptions& options) {
  ModelSpec spec = tc_model_spec(options);
  if (gpr.num_blocks() < kTerrainTapBlocks) {
    fail(Errc::kShapeError, "phase network has fewer than 2 blocks");
  }
  std::vector<std::shared_ptr<ConvBlock>> shared;
  for (std::size_t i = 0; i < kTerrainTapBlocks; ++i) shared.push_back(gpr.block(i));
  return Network(std::move(spec), std::move(shared),
                 make_head(tc_model_spec(options).head, seed, seed_stream::kTcHeadInit));
}

void freeze_backbone(Network& model) {
  for (std::size_t i = 0; i < model.num_blocks(); ++i) model.set_block_trainable(i, false);
}

Network build_tc_scratch(std::uint64_t seed, const TcHeadOptions& options) {
  return build_network(tc_model_spec(options), mix_seed(seed, seed_stream::kScratchInit));
}

Network build_mlp_baseline(std::uint64_t seed, const TcHeadOptions& options) {
  return build_network(mlp_baseline_spec(options), mix_seed(seed, seed_stream::kMlpInit));
}

// --- persistence -------------------------------------------------------------------

namespace {

void append_entries(Network& model, const std::string& prefix, std::set<const void*>* skip,
                    WeightFile& file) {
  for (const auto& ref : model.parameters()) {
    if (skip && skip->count(ref.param)) continue;
    file.entries.push_back({prefix + ref.param->name, ref.param->value.shape(),
                            std::vector<double>(ref.param->value.values().begin(),
                                                ref.param->value.values().end()),
                            ref.trainable});
  }
  for (const auto& buf : model.buffers()) {
    if (skip && skip->count(buf.tensor)) continue;
    file.entries.push_back({prefix + buf.name, buf.tensor->shape(),
                            std::vector<double>(buf.tensor->values().begin(),
                                                buf.tensor->values().end()),
                            false});
  }
}

void assign(Tensor& dst, const WeightFile& file, const std::string& name) {
  const auto* e = file.find(name);
  if (!e) fail(Errc::kIncompatibleWeights, "weight file lacks tensor " + name);
  if (e->shape != dst.shape()) {
    fail(Errc::kIncompatibleWeights, "tensor " + name + " has shape " + nn::shape_string(e->shape) +
                                         ", expected " + nn::shape_string(dst.shape()));
  }
  std::copy(e->values.begin(), e->values.end(), dst.values().begin());
}

void import_entries(Network& model, const std::string& prefix, const WeightFile& file,
                    bool include_blocks) {
  for (std::size_t i = 0; i < model.num_blocks() && include_blocks; ++i) {
    auto& block = *model.block(i);
    for (auto* p : block.params()) assign(p->value, file, prefix + p->name);
    for (auto& b : block.buffers()) assign(*b.tensor, file, prefix + b.name);
    const auto* w = file.find(prefix + block.conv().weight().name);
    model.set_block_trainable(i, w->trainable);
  }
  const auto head_params = model.head().params();
  for (auto* p : head_params) assign(p->value, file, prefix + p->name);
  model.set_head_trainable(file.find(prefix + head_params.front()->name)->trainable);
}

WeightFile decode_checked(const std::string& bytes) {
  WeightFile file = decode_weights(bytes);
  if (fnv1a64(file.spec_json) != file.fingerprint) {
    fail(Errc::kCorruptFile, "embedded spec does not match its fingerprint");
  }
  return file;
}

nlohmann::json parse_spec_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kCorruptFile, std::string("unreadable embedded spec: ") + e.what());
  }
}

nlohmann::json multitask_json(const MultitaskModel& m) {
  return {{"gpr", m.gpr.spec().to_json()},
          {"tc", m.tc.spec().to_json()},
          {"shared_blocks", kTerrainTapBlocks}};
}

}  // namespace

std::string serialize_weights(Network& model) {
  WeightFile file;
  file.spec_json = model.spec().to_json().dump();
  file.fingerprint = fnv1a64(file.spec_json);
  append_entries(model, "", nullptr, file);
  return encode_weights(file);
}

void save_weights(Network& model, const std::filesystem::path& path) {
  csv::write_text_file(path, serialize_weights(model));
}

Network deserialize_weights(const std::string& bytes) {
  const WeightFile file = decode_checked(bytes);
  const auto j = parse_spec_json(file.spec_json);
  if (j.contains("shared_blocks")) {
    fail(Errc::kIncompatibleWeights, "file holds a multitask model, not a single network");
  }
  Network model = build_network(ModelSpec::from_json(j), 0);
  if (model.spec().fingerprint() != file.fingerprint) {
    fail(Errc::kIncompatibleWeights, "spec fingerprint mismatch after rebuild");
  }
  import_entries(model, "", file, true);
  return model;
}

Network load_weights(const std::filesystem::path& path) {
  return deserialize_weights(csv::read_text_file(path));
}

Network load_weights(const std::filesystem::path& path, const ModelSpec& expected) {
  const std::string bytes = csv::read_text_file(path);
  const WeightFile header = decode_weights(bytes);
  if (header.fingerprint != expected.fingerprint()) {
    fail(Errc::kIncompatibleWeights, "weight file was saved for a different model spec");
  }
  return deserialize_weights(bytes);
}

std::string serialize_multitask(MultitaskModel& model) {
  for (std::size_t i = 0; i < kTerrainTapBlocks; ++i) {
    if (model.tc.block(i) != model.gpr.block(i)) {
      fail(Errc::kIncompatibleWeights, "terrain network does not share blocks with phase network");
    }
  }
  WeightFile file;
  file.spec_json = multitask_json(model).dump();
  file.fingerprint = fnv1a64(file.spec_json);
  append_entries(model.gpr, "gpr.", nullptr, file);
  std::set<const void*> shared;
  for (auto& p : model.gpr.parameters()) shared.insert(p.param);
  for (auto& b : model.gpr.buffers()) shared.insert(b.tensor);
  append_entries(model.tc, "tc.", &shared, file);
  // Shared blocks carry the terrain network's mask under their own prefix.
  for (std::size_t i = 0; i < kTerrainTapBlocks; ++i) {
    file.entries.push_back({"tc.mask." + block_prefix(i), {1}, {model.tc.block_trainable(i) ? 1.0 : 0.0},
                            false});
  }
  return encode_weights(file);
}

void save_multitask(MultitaskModel& model, const std::filesystem::path& path) {
  csv::write_text_file(path, serialize_multitask(model));
}

MultitaskModel deserialize_multitask(const std::string& bytes) {
  const WeightFile file = decode_checked(bytes);
  const auto j = parse_spec_json(file.spec_json);
  if (!j.contains("shared_blocks")) {
    fail(Errc::kIncompatibleWeights, "file holds a single network, not a multitask model");
  }
  const ModelSpec gpr_spec = ModelSpec::from_json(j.at("gpr"));
  const ModelSpec tc_spec = ModelSpec::from_json(j.at("tc"));
  Network gpr = build_network(gpr_spec, 0);
  import_entries(gpr, "gpr.", file, true);
  TcHeadOptions tc_options{tc_spec.head.hidden};
  Network tc = attach_tc_head(gpr, 0, tc_options);
  if (!(tc.spec() == tc_spec)) fail(Errc::kIncompatibleWeights, "terrain spec mismatch");
  import_entries(tc, "tc.", file, false);
  for (std::size_t i = 0; i < kTerrainTapBlocks; ++i) {
    const auto* m = file.find("tc.mask." + block_prefix(i));
    if (!m) fail(Errc::kIncompatibleWeights, "missing terrain mask entry");
    tc.set_block_trainable(i, m->values.at(0) != 0.0);
  }
  MultitaskModel out{std::move(gpr), std::move(tc)};
  if (fnv1a64(multitask_json(out).dump()) != file.fingerprint) {
    fail(Errc::kIncompatibleWeights, "multitask fingerprint mismatch");
  }
  return out;
}

MultitaskModel load_multitask(const std::filesystem::path& path) {
  return deserialize_multitask(csv::read_text_file(path));
}

}  // namespace gaitmtl
