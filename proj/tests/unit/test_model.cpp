#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <utility>

#include "gaitmtl/errors.hpp"
#include "gaitmtl/model.hpp"
#include "gaitmtl/weights_io.hpp"

namespace gaitmtl {
namespace {

using nn::Shape;
using nn::Tensor;

Tensor random_input(std::size_t batch, std::uint64_t seed, std::size_t len = 200) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor x({batch, 6, len});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = u(rng);
  return x;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gaitmtl_model_test_" + name);
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::kIo;
}

const std::vector<std::pair<std::size_t, std::size_t>> kFeatureSizes{
    {10, 98}, {20, 47}, {20, 45}, {30, 43}, {30, 41}, {40, 39}, {40, 37}, {50, 35}, {50, 33}};

TEST(SpecTest, BackboneRows) {
  const auto spec = backbone_spec();
  ASSERT_EQ(spec.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(spec[i].out_channels, kFeatureSizes[i].first) << i;
    EXPECT_EQ(spec[i].out_length, kFeatureSizes[i].second) << i;
  }
  EXPECT_EQ(spec[0].kernel, 5u);
  EXPECT_TRUE(spec[0].pool);
  EXPECT_TRUE(spec[1].pool);
  EXPECT_FALSE(spec[2].pool);
  EXPECT_EQ(backbone_spec(200, 2).size(), 2u);
}

TEST(SpecTest, HeadWidths) {
  EXPECT_EQ(gpr_model_spec().head.input_features, 1650u);
  EXPECT_EQ(gpr_model_spec().head.outputs, 2u);
  EXPECT_EQ(tc_model_spec().head.input_features, 940u);
  EXPECT_EQ(tc_model_spec().head.outputs, 3u);
  EXPECT_EQ(tc_model_spec().head.activation, OutputActivation::kSoftmax);
  EXPECT_EQ(mlp_baseline_spec().head.input_features, 1200u);
  EXPECT_TRUE(mlp_baseline_spec().blocks.empty());
  GprHeadOptions relu;
  relu.relu_output = true;
  EXPECT_EQ(gpr_model_spec(relu).head.activation, OutputActivation::kRelu);
}

TEST(SpecTest, JsonRoundTripAndFingerprint) {
  const ModelSpec a = gpr_model_spec();
  EXPECT_EQ(ModelSpec::from_json(a.to_json()), a);
  EXPECT_EQ(a.fingerprint(), gpr_model_spec().fingerprint());
  EXPECT_NE(a.fingerprint(), tc_model_spec().fingerprint());
  EXPECT_EQ(code_of([] { ModelSpec::from_json(nlohmann::json{{"name", 3}}); }), Errc::kCorruptFile);
}

TEST(NetworkTest, PhaseForwardShapes) {
  Network gpr = build_gpr_model(1);
  const Tensor y = gpr.forward(random_input(3, 1), false);
  EXPECT_EQ(y.shape(), (Shape{3, 2}));
  const auto& shapes = gpr.block_output_shapes();
  ASSERT_EQ(shapes.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(shapes[i], (Shape{kFeatureSizes[i].first, kFeatureSizes[i].second, 1}));
  }
}

TEST(NetworkTest, TerrainTapShares) {
  Network gpr = build_gpr_model(2);
  Network tc = attach_tc_head(gpr, 2);
  ASSERT_EQ(tc.num_blocks(), 2u);
  EXPECT_EQ(tc.block(0).get(), gpr.block(0).get());
  EXPECT_EQ(tc.block(1).get(), gpr.block(1).get());
  const Tensor p = tc.predict(random_input(4, 2));
  EXPECT_EQ(p.shape(), (Shape{4, 3}));
  tc.forward(random_input(4, 3), false);
  EXPECT_EQ(tc.block_output_shapes().back(), (Shape{20, 47, 1}));
  for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(p[3 * r] + p[3 * r + 1] + p[3 * r + 2], 1.0, 1e-12);
}

TEST(NetworkTest, WrongInputShapeRejected) {
  Network gpr = build_gpr_model(1);
  EXPECT_EQ(code_of([&] { gpr.forward(Tensor({2, 5, 200}), false); }), Errc::kShapeError);
  EXPECT_EQ(code_of([&] { gpr.predict(Tensor({2, 6, 150})); }), Errc::kShapeError);
}

TEST(NetworkTest, SeededInitialisation) {
  Network a = build_gpr_model(7), b = build_gpr_model(7), c = build_gpr_model(8);
  EXPECT_EQ(serialize_weights(a), serialize_weights(b));
  EXPECT_NE(serialize_weights(a), serialize_weights(c));
  for (const auto& ref : a.parameters()) {
    const auto& p = *ref.param;
    if (p.name.find("conv.weight") == std::string::npos && p.name.find("fc") == std::string::npos) continue;
    if (p.name.find("bias") != std::string::npos) continue;
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < p.value.rank(); ++d) fan_in *= p.value.dim(d);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double v : p.value.values()) ASSERT_LE(std::fabs(v), bound) << p.name;
  }
}

TEST(NetworkTest, FreezeMasksBackboneOnly) {
  Network gpr = build_gpr_model(3);
  Network tc = attach_tc_head(gpr, 3);
  freeze_backbone(tc);
  for (const auto& ref : tc.parameters()) {
    const bool is_head = ref.param->name.rfind("head.", 0) == 0;
    EXPECT_EQ(ref.trainable, is_head) << ref.param->name;
  }
  for (const auto& ref : gpr.parameters()) EXPECT_TRUE(ref.trainable);
}

TEST(NetworkTest, FrozenBlocksNormaliseWithRunningStatistics) {
  Network gpr = build_gpr_model(4);
  // Give the running statistics non-trivial values first.
  gpr.forward(random_input(8, 4), true);
  Network tc = attach_tc_head(gpr, 4);
  freeze_backbone(tc);
  const Tensor x = random_input(5, 5);
  const auto before = serialize_weights(gpr);
  const Tensor train_out = tc.forward(x, true);
  EXPECT_EQ(train_out, tc.predict_raw(x));
  EXPECT_EQ(serialize_weights(gpr), before);
}

TEST(NetworkTest, BackwardStopsAtFrozenBlocks) {
  Network gpr = build_gpr_model(5);
  Network tc = attach_tc_head(gpr, 5);
  freeze_backbone(tc);
  tc.zero_grad();
  const Tensor out = tc.forward(random_input(4, 6), true);
  tc.backward(Tensor(out.shape(), 1.0));
  for (const auto& ref : tc.parameters()) {
    if (ref.trainable) continue;
    for (double g : ref.param->grad.values()) ASSERT_EQ(g, 0.0) << ref.param->name;
  }
}

TEST(PersistenceTest, SaveLoadForwardIsBitwiseEqual) {
  Network gpr = build_gpr_model(11);
  gpr.forward(random_input(6, 11), true);
  const auto path = temp_path("gpr.gmtw");
  save_weights(gpr, path);
  const Network loaded = load_weights(path);
  for (std::uint64_t probe = 0; probe < 10; ++probe) {
    const Tensor x = random_input(2, 100 + probe);
    EXPECT_EQ(gpr.predict(x), loaded.predict(x));
  }
  Network again = load_weights(path);
  EXPECT_EQ(serialize_weights(again), serialize_weights(gpr));
  std::filesystem::remove(path);
}

TEST(PersistenceTest, FingerprintMismatchRejected) {
  Network gpr = build_gpr_model(12);
  const auto path = temp_path("fp.gmtw");
  save_weights(gpr, path);
  EXPECT_EQ(code_of([&] { load_weights(path, tc_model_spec()); }), Errc::kIncompatibleWeights);
  EXPECT_NO_THROW(load_weights(path, gpr_model_spec()));
  std::filesystem::remove(path);
}

TEST(PersistenceTest, CorruptBytesRejected) {
  Network gpr = build_gpr_model(13);
  std::string bytes = serialize_weights(gpr);
  EXPECT_EQ(code_of([&] { deserialize_weights(bytes.substr(0, bytes.size() / 2)); }), Errc::kCorruptFile);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_weights(bad_magic); }), Errc::kCorruptFile);
  EXPECT_EQ(code_of([&] { deserialize_weights(bytes + "x"); }), Errc::kCorruptFile);
  EXPECT_EQ(code_of([] { load_weights(temp_path("missing.gmtw")); }), Errc::kIo);
}

TEST(PersistenceTest, FingerprintIsSpecHash) {
  Network gpr = build_gpr_model(14);
  const WeightFile f = decode_weights(serialize_weights(gpr));
  EXPECT_EQ(f.fingerprint, gpr_model_spec().fingerprint());
  EXPECT_EQ(f.fingerprint, fnv1a64(gpr_model_spec().to_json().dump()));
  EXPECT_NE(f.find("block1.bn.running_mean"), nullptr);
  EXPECT_NE(f.find("head.fc3.weight"), nullptr);
}

TEST(PersistenceTest, MultitaskRoundTripKeepsSharing) {
  Network gpr = build_gpr_model(15);
  Network tc = attach_tc_head(gpr, 15);
  freeze_backbone(tc);
  MultitaskModel mt{std::move(gpr), std::move(tc)};
  const auto bytes = serialize_multitask(mt);
  MultitaskModel back = deserialize_multitask(bytes);
  EXPECT_EQ(back.tc.block(0).get(), back.gpr.block(0).get());
  EXPECT_FALSE(back.tc.block_trainable(0));
  const Tensor x = random_input(3, 16);
  EXPECT_EQ(back.gpr.predict(x), mt.gpr.predict(x));
  EXPECT_EQ(back.tc.predict(x), mt.tc.predict(x));
  EXPECT_EQ(serialize_multitask(back), bytes);
}

TEST(PersistenceTest, FnvReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace gaitmtl
