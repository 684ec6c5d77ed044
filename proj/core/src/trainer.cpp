#include "gaitmtl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "gaitmtl/errors.hpp"
#include "gaitmtl/nn/adam.hpp"
#include "gaitmtl/random.hpp"
#include "gaitmtl/weights_io.hpp"

namespace gaitmtl {

using nn::Tensor;

namespace {

constexpr std::size_t kEvalChunk = 256;

std::string task_name(Task t) { return t == Task::kGpr ? "gpr" : "tc"; }
std::string loss_name(LossKind l) { return l == LossKind::kMse ? "mse" : "cross_entropy"; }

Tensor phase_targets(std::span<const WindowRef> windows) {
  Tensor t({windows.size(), 2});
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!windows[i].label) fail(Errc::kInvalidData, "phase window without a label");
    t[2 * i] = windows[i].label->x;
    t[2 * i + 1] = windows[i].label->y;
  }
  return t;
}

std::vector<int> terrain_targets(std::span<const WindowRef> windows) {
  std::vector<int> out(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) out[i] = static_cast<int>(windows[i].terrain);
  return out;
}

nn::LossResult batch_loss(const Tensor& output, std::span<const WindowRef> windows,
                          LossKind kind) {
  if (kind == LossKind::kMse) return nn::mse_loss(output, phase_targets(windows));
  const auto labels = terrain_targets(windows);
  return nn::softmax_xent(output, labels);
}

std::vector<WindowRef> evenly_spaced(std::span<const WindowRef> windows, std::size_t limit) {
  if (windows.size() <= limit) return {windows.begin(), windows.end()};
  std::vector<WindowRef> out;
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) out.push_back(windows[i * windows.size() / limit]);
  return out;
}

double eval_loss(const Network& model, const Dataset& data, std::span<const WindowRef> windows,
                 LossKind kind) {
  double total = 0.0;
  for (std::size_t i = 0; i < windows.size(); i += kEvalChunk) {
    const auto chunk = windows.subspan(i, std::min(kEvalChunk, windows.size() - i));
    const Tensor out = model.predict_raw(make_batch(data, chunk));
    total += batch_loss(out, chunk, kind).loss * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(windows.size());
}

}  // namespace

// --- config ---------------------------------------------------------------------------

TrainConfig TrainConfig::gpr_defaults(std::uint64_t seed) {
  TrainConfig c;
  c.task = Task::kGpr;
  c.loss = LossKind::kMse;
  c.epochs = 20;
  c.seed = seed;
  return c;
}

TrainConfig TrainConfig::tc_defaults(std::uint64_t seed) {
  TrainConfig c;
  c.task = Task::kTc;
  c.loss = LossKind::kCrossEntropy;
  c.epochs = 10;
  c.seed = seed;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(Errc::kInvalidConfig, "learning rate must be >= 0");
  if (batch_size < 1) fail(Errc::kInvalidConfig, "batch size must be >= 1");
  if ((task == Task::kGpr) != (loss == LossKind::kMse)) {
    fail(Errc::kInvalidConfig, "phase task uses mse, terrain task uses cross-entropy");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"task", task_name(task)},  {"optimizer", "adam"},   {"lr", lr},
          {"loss", loss_name(loss)},  {"batch_size", batch_size}, {"epochs", epochs},
          {"seed", seed},             {"curve_test_limit", curve_test_limit}};
}

nlohmann::json TrainConfig::overrides() const {
  const TrainConfig d = task == Task::kGpr ? gpr_defaults(seed) : tc_defaults(seed);
  nlohmann::json out = nlohmann::json::object();
  const auto mine = to_json();
  const auto base = d.to_json();
  for (const auto& [k, v] : mine.items()) {
    if (base.at(k) != v) out[k] = {{"default", base.at(k)}, {"value", v}};
  }
  return out;
}

// --- splits ------------------------------------------------------------------------------

Split split_gpr(std::span<const WindowRef> windows, std::uint64_t seed) {
  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(seed, seed_stream::kGprSplit));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test = (windows.size() + 5) / 10;
  const std::size_t n_train = windows.size() - n_test;
  Split s;
  s.train.reserve(n_train);
  s.test.reserve(n_test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? s.train : s.test).push_back(windows[order[i]]);
  }
  return s;
}

Split split_tc(std::span<const WindowRef> windows, std::uint64_t seed,
               std::size_t cycles_per_terrain) {
  std::mt19937_64 rng(mix_seed(seed, seed_stream::kTcSplit));
  std::set<int> chosen;
  for (auto terrain : kAllTerrains) {
    std::set<int> cycles;
    bool present = false;
    for (const auto& w : windows) {
      if (w.terrain != terrain) continue;
      present = true;
      if (w.cycle >= 0) cycles.insert(w.cycle);
    }
    if (!present) continue;
    if (cycles.size() < cycles_per_terrain) {
      fail(Errc::kInvalidSplit, "terrain " + std::string(terrain_code(terrain)) + " has only " +
                                    std::to_string(cycles.size()) + " labeled cycles");
    }
    std::vector<int> pool(cycles.begin(), cycles.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cycles_per_terrain));
  }
  Split s;
  for (const auto& w : windows) {
    (w.cycle >= 0 && chosen.count(w.cycle) ? s.train : s.test).push_back(w);
  }
  return s;
}

std::vector<int> selected_cycles(std::span<const WindowRef> train) {
  std::set<int> c;
  for (const auto& w : train) c.insert(w.cycle);
  return {c.begin(), c.end()};
}

// --- training ---------------------------------------------------------------------------

Tensor make_batch(const Dataset& data, std::span<const WindowRef> windows) {
  if (windows.empty()) fail(Errc::kInvalidData, "empty batch");
  Tensor batch({windows.size(), kNumChannels, kRecords});
  const std::size_t per = kNumChannels * kRecords;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const InputTensor in = data.input(windows[i]);
    if (in.values().size() != per) fail(Errc::kShapeError, "window is not 6x200");
    std::copy(in.values().begin(), in.values().end(), batch.data() + i * per);
  }
  return batch;
}

TrainHistory train(Network& model, const Dataset& data, std::span<const WindowRef> train_set,
                   const TrainConfig& cfg, std::span<const WindowRef> test_set,
                   const ProgressFn& progress) {
  cfg.validate();
  if (train_set.empty()) fail(Errc::kInvalidData, "empty training set");
  const auto curve_set = evenly_spaced(test_set, cfg.curve_test_limit);

  nn::AdamState adam(nn::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  std::mt19937_64 rng(mix_seed(cfg.seed, seed_stream::kShuffle));
  std::vector<WindowRef> order(train_set.begin(), train_set.end());
  const auto params = model.parameters();

  // A lone trailing window would leave batch statistics undefined; it joins
  // the previous batch instead of being dropped.
  std::vector<std::size_t> bounds;
  for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) bounds.push_back(b);
  if (bounds.size() > 1 && order.size() - bounds.back() == 1) bounds.pop_back();
  bounds.push_back(order.size());

  TrainHistory history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t bi = 0; bi + 1 < bounds.size(); ++bi) {
      const std::span<const WindowRef> batch(order.data() + bounds[bi], bounds[bi + 1] - bounds[bi]);
      model.zero_grad();
      const Tensor out = model.forward(make_batch(data, batch), true);
      auto loss = batch_loss(out, batch, cfg.loss);
      if (!std::isfinite(loss.loss)) {
        fail(Errc::kNumericalError, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                        ", batch " + std::to_string(bi + 1));
      }
      model.backward(loss.grad);
      nn::adam_step(params, adam);
      total += loss.loss * static_cast<double>(batch.size());
    }
    history.train_loss.push_back(total / static_cast<double>(order.size()));
    if (!curve_set.empty()) history.test_loss.push_back(eval_loss(model, data, curve_set, cfg.loss));
    if (progress) {
      std::string msg = task_name(cfg.task) + " epoch " + std::to_string(epoch + 1) + "/" +
                        std::to_string(cfg.epochs) + " train_loss=" +
                        std::to_string(history.train_loss.back());
      if (!history.test_loss.empty()) msg += " test_loss=" + std::to_string(history.test_loss.back());
      progress(msg);
    }
  }
  return history;
}

Network train_tc_stage(Network& gpr, const Dataset& data, std::span<const WindowRef> tc_train,
                       const TrainConfig& cfg, const TcHeadOptions& head,
                       std::span<const WindowRef> tc_test, TrainHistory* history,
                       const ProgressFn& progress) {
  Network tc = attach_tc_head(gpr, cfg.seed, head);
  freeze_backbone(tc);
  auto h = train(tc, data, tc_train, cfg, tc_test, progress);
  if (history) *history = std::move(h);
  return tc;
}

// --- evaluation -------------------------------------------------------------------------

std::vector<double> predict_percent(const Network& model, const Dataset& data,
                                    std::span<const WindowRef> windows) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); i += kEvalChunk) {
    const auto chunk = windows.subspan(i, std::min(kEvalChunk, windows.size() - i));
    const Tensor y = model.predict(make_batch(data, chunk));
    if (y.dim(1) != 2) fail(Errc::kShapeError, "phase network must output 2 values");
    for (std::size_t r = 0; r < chunk.size(); ++r) {
      const double x = y[2 * r], s = y[2 * r + 1];
      // An all-zero output (possible with a ReLU output layer) has no angle;
      // it is scored as 0 %.
      out.push_back(x == 0.0 && s == 0.0 ? 0.0 : from_phase_xy(x, s));
    }
  }
  return out;
}

double evaluate_gpr(const Network& model, const Dataset& data, std::span<const WindowRef> test) {
  const auto pred = predict_percent(model, data, test);
  std::vector<double> truth;
  truth.reserve(test.size());
  for (const auto& w : test) {
    if (!w.label) fail(Errc::kInvalidData, "phase test window without a label");
    truth.push_back(w.label->percent);
  }
  return circular_rmse(pred, truth);
}

TcMetrics score_probabilities(const Tensor& probs, std::span<const int> labels) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
    fail(Errc::kShapeError, "probability/label count mismatch");
  }
  if (labels.empty()) fail(Errc::kInvalidData, "no samples to score");
  const std::size_t k = probs.dim(1);
  std::size_t correct = 0;
  double xent = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const double* p = probs.data() + r * k;
    const auto best = static_cast<int>(std::max_element(p, p + k) - p);
    if (best == labels[r]) ++correct;
    xent -= std::log(std::max(p[labels[r]], 1e-300));
  }
  const double n = static_cast<double>(labels.size());
  return {100.0 * static_cast<double>(correct) / n, xent / n};
}

TcMetrics evaluate_tc(const Network& model, const Dataset& data, std::span<const WindowRef> test) {
  if (test.empty()) fail(Errc::kInvalidData, "empty terrain test set");
  std::size_t correct = 0;
  double xent = 0.0;
  for (std::size_t i = 0; i < test.size(); i += kEvalChunk) {
    const auto chunk = test.subspan(i, std::min(kEvalChunk, test.size() - i));
    const Tensor logits = model.predict_raw(make_batch(data, chunk));
    const auto labels = terrain_targets(chunk);
    const auto loss = nn::softmax_xent(logits, labels);
    xent += loss.loss * static_cast<double>(chunk.size());
    const std::size_t k = logits.dim(1);
    for (std::size_t r = 0; r < chunk.size(); ++r) {
      const double* z = logits.data() + r * k;
      if (std::max_element(z, z + k) - z == labels[r]) ++correct;
    }
  }
  const double n = static_cast<double>(test.size());
  return {100.0 * static_cast<double>(correct) / n, xent / n};
}

// --- comparison -----------------------------------------------------------------------

nlohmann::json ComparisonConfig::to_json() const {
  return {{"gpr", gpr.to_json()},
          {"tc", tc.to_json()},
          {"gpr_head_hidden", gpr_head.hidden},
          {"gpr_relu_output", gpr_head.relu_output},
          {"tc_head_hidden", tc_head.hidden},
          {"cycles_per_terrain", cycles_per_terrain}};
}

ComparisonReport run_comparison(const Dataset& data, std::span<const std::uint64_t> seeds,
                                const ComparisonConfig& cfg, std::vector<SeedArtifacts>* artifacts,
                                const ProgressFn& progress) {
  if (seeds.empty()) fail(Errc::kInvalidConfig, "no seeds given");
  ComparisonReport report;
  std::map<std::string, std::vector<TcRun>> by_model;
  auto log = [&](const std::string& m) {
    if (progress) progress(m);
  };

  for (const auto seed : seeds) {
    log("seed " + std::to_string(seed) + ": phase network");
    const Split gsplit = split_gpr(data.gpr_windows(), seed);
    Network gpr = build_gpr_model(seed, cfg.gpr_head);
    TrainConfig gcfg = cfg.gpr;
    gcfg.seed = seed;
    GprRun grun;
    grun.seed = seed;
    grun.history = train(gpr, data, gsplit.train, gcfg, gsplit.test, progress);
    grun.rmse_pct = evaluate_gpr(gpr, data, gsplit.test);
    grun.train_windows = gsplit.train.size();
    grun.test_windows = gsplit.test.size();
    log("seed " + std::to_string(seed) + ": phase RMSE " + std::to_string(grun.rmse_pct) + " %");
    report.gpr.push_back(grun);

    const Split tsplit = split_tc(data.tc_windows(), seed, cfg.cycles_per_terrain);
    const auto cycles = selected_cycles(tsplit.train);
    TrainConfig tcfg = cfg.tc;
    tcfg.seed = seed;

    auto finish = [&](const char* name, Network& model, TrainHistory history) {
      TcRun run;
      run.model = name;
      run.seed = seed;
      run.metrics = evaluate_tc(model, data, tsplit.test);
      run.train_windows = tsplit.train.size();
      run.test_windows = tsplit.test.size();
      run.train_cycles = cycles;
      run.history = std::move(history);
      log("seed " + std::to_string(seed) + ": " + name + " accuracy " +
          std::to_string(run.metrics.accuracy_pct) + " %");
      by_model[name].push_back(std::move(run));
    };

    TrainHistory h1;
    Network model1 = train_tc_stage(gpr, data, tsplit.train, tcfg, cfg.tc_head, tsplit.test, &h1,
                                    progress);
    finish(kModelNames[0], model1, std::move(h1));

    Network model2 = build_tc_scratch(seed, cfg.tc_head);
    auto h2 = train(model2, data, tsplit.train, tcfg, tsplit.test, progress);
    finish(kModelNames[1], model2, std::move(h2));

    Network model3 = build_mlp_baseline(seed, cfg.tc_head);
    auto h3 = train(model3, data, tsplit.train, tcfg, tsplit.test, progress);
    finish(kModelNames[2], model3, std::move(h3));

    if (artifacts) {
      MultitaskModel mt{std::move(gpr), std::move(model1)};
      SeedArtifacts a;
      a.seed = seed;
      a.gpr_weights = serialize_weights(mt.gpr);
      a.multitask_weights = serialize_multitask(mt);
      artifacts->push_back(std::move(a));
    }
  }

  for (const char* name : kModelNames) {
    for (auto& r : by_model[name]) report.tc.push_back(std::move(r));
  }

  nlohmann::json seed_list = nlohmann::json::array();
  for (auto s : seeds) seed_list.push_back(s);
  nlohmann::json overrides = {{"gpr", cfg.gpr.overrides()}, {"tc", cfg.tc.overrides()}};
  report.provenance = {
      {"dataset", data.config().to_json()},
      {"manifest_fnv1a64", fnv1a64(data.manifest().dump())},
      {"seeds", seed_list},
      {"config", cfg.to_json()},
      {"overrides", overrides},
      {"gpr_windows", data.gpr_windows().size()},
      {"tc_windows", data.tc_windows().size()},
      {"spread", "sample standard deviation over seeds"},
  };
  return report;
}

}  // namespace gaitmtl
