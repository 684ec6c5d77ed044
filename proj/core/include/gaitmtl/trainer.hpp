#pragma once

// Two-stage protocol: train the phase network on a random 9:1 window split,
// then train a terrain head on frozen block-2 features using only five gait
// cycles per terrain, and compare against two baselines trained on the same
// cycles.

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "gaitmtl/dataset.hpp"
#include "gaitmtl/model.hpp"

namespace gaitmtl {

enum class Task { kGpr, kTc };
enum class LossKind { kMse, kCrossEntropy };

struct TrainConfig {
  Task task = Task::kGpr;
  double lr = 1e-4;
  LossKind loss = LossKind::kMse;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  /// Test-loss curves use at most this many evenly spaced test windows.
  std::size_t curve_test_limit = 2048;

  static TrainConfig gpr_defaults(std::uint64_t seed = 0);
  static TrainConfig tc_defaults(std::uint64_t seed = 0);
  void validate() const;
  nlohmann::json to_json() const;
  /// Fields that differ from the task's defaults (seed excluded).
  nlohmann::json overrides() const;
};

struct Split {
  std::vector<WindowRef> train;
  std::vector<WindowRef> test;
};

/// Seeded shuffle then a 90/10 partition by window.
Split split_gpr(std::span<const WindowRef> windows, std::uint64_t seed);

/// `cycles_per_terrain` labeled cycles drawn per terrain; all windows ending in
/// those cycles train, every other window tests.
Split split_tc(std::span<const WindowRef> windows, std::uint64_t seed,
               std::size_t cycles_per_terrain = 5);
std::vector<int> selected_cycles(std::span<const WindowRef> train);

struct TrainHistory {
  std::vector<double> train_loss;  ///< mean over batches, per epoch
  std::vector<double> test_loss;   ///< per epoch, empty without a test set
};

using ProgressFn = std::function<void(const std::string&)>;

/// Seeded per-epoch shuffle, mini-batches with the last partial batch kept,
/// Adam honoring the network's trainability mask. Throws NumericalError with
/// epoch/batch coordinates on a non-finite loss.
TrainHistory train(Network& model, const Dataset& data, std::span<const WindowRef> train_set,
                   const TrainConfig& cfg, std::span<const WindowRef> test_set = {},
                   const ProgressFn& progress = {});

/// attach_tc_head + freeze_backbone + train with the terrain config.
Network train_tc_stage(Network& gpr, const Dataset& data, std::span<const WindowRef> tc_train,
                       const TrainConfig& cfg, const TcHeadOptions& head = {},
                       std::span<const WindowRef> tc_test = {}, TrainHistory* history = nullptr,
                       const ProgressFn& progress = {});

/// Circular RMSE (%) between recovered and labeled gait percent.
double evaluate_gpr(const Network& model, const Dataset& data, std::span<const WindowRef> test);
std::vector<double> predict_percent(const Network& model, const Dataset& data,
                                    std::span<const WindowRef> windows);

struct TcMetrics {
  double accuracy_pct = 0.0;
  double cross_entropy = 0.0;
};

TcMetrics evaluate_tc(const Network& model, const Dataset& data, std::span<const WindowRef> test);
/// Accuracy / mean cross-entropy of class probabilities against labels.
TcMetrics score_probabilities(const nn::Tensor& probs, std::span<const int> labels);

/// Stacks windows into a (B, 6, 200) batch.
nn::Tensor make_batch(const Dataset& data, std::span<const WindowRef> windows);

// --- comparison ---------------------------------------------------------------------

inline constexpr const char* kModelNames[3] = {"model1_multitask", "model2_scratch",
                                               "model3_mlp"};

struct ComparisonConfig {
  TrainConfig gpr = TrainConfig::gpr_defaults();
  TrainConfig tc = TrainConfig::tc_defaults();
  GprHeadOptions gpr_head;
  TcHeadOptions tc_head;
  std::size_t cycles_per_terrain = 5;

  nlohmann::json to_json() const;
};

struct GprRun {
  std::uint64_t seed = 0;
  double rmse_pct = 0.0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  TrainHistory history;
};

struct TcRun {
  std::string model;
  std::uint64_t seed = 0;
  TcMetrics metrics;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  std::vector<int> train_cycles;
  TrainHistory history;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation over seeds
};

MeanStd mean_std(std::span<const double> values);

struct ComparisonReport {
  nlohmann::json provenance;
  std::vector<GprRun> gpr;
  std::vector<TcRun> tc;  ///< ordered by (model, seed)

  MeanStd gpr_rmse() const;
  MeanStd accuracy(const std::string& model) const;
  MeanStd cross_entropy(const std::string& model) const;

  nlohmann::json to_json() const;
  static ComparisonReport from_json(const nlohmann::json& j);
};

/// Trained networks from one comparison seed, serialized.
struct SeedArtifacts {
  std::uint64_t seed = 0;
  std::string gpr_weights;
  std::string multitask_weights;
};

ComparisonReport run_comparison(const Dataset& data, std::span<const std::uint64_t> seeds,
                                const ComparisonConfig& cfg,
                                std::vector<SeedArtifacts>* artifacts = nullptr,
                                const ProgressFn& progress = {});

enum class ReportFormat { kJson, kText };

std::string render_report(const ComparisonReport& report, ReportFormat format);
void emit_report(const ComparisonReport& report, const std::filesystem::path& path,
                 ReportFormat format);
/// `epoch,train_loss,test_loss`
std::string loss_curve_csv(const TrainHistory& history);

}  // namespace gaitmtl
