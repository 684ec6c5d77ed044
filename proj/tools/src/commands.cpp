#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "gaitmtl/csv_io.hpp"
#include "gaitmtl/errors.hpp"
#include "gaitmtl/labeler.hpp"
#include "gaitmtl/model.hpp"
#include "gaitmtl/nn/gradcheck.hpp"
#include "gaitmtl/random.hpp"
#include "gaitmtl/synth.hpp"

namespace gaitmtl::cli {

namespace {

constexpr std::size_t kInferChunk = 256;

ProgressFn progress_to(std::ostream* log) {
  if (!log) return {};
  return [log](const std::string& msg) { *log << msg << '\n' << std::flush; };
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  csv::write_text_file(path, j.dump(2) + "\n");
}

void echo_config(const RunConfig& cfg, const fs::path& out_dir) {
  write_json(out_dir / "config.json", cfg.to_json());
}

std::string trial_stem(std::size_t index, const TrialCondition& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "trial_%02zu_%s_%gbpm", index, std::string(terrain_code(c.terrain)).c_str(),
                c.cadence_bpm);
  return buf;
}

nlohmann::json read_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(csv::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::kInvalidData, path.string() + ": " + e.what());
  }
}

}  // namespace

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidConfig: return kExitUsage;
    case Errc::kNumericalError: return kExitNumerical;
    default: return kExitData;
  }
}

Dataset load_or_generate(const RunConfig& cfg, const std::optional<fs::path>& data_dir) {
  if (!data_dir) return generate_dataset(cfg.dataset);
  const auto manifest = read_json_file(*data_dir / "manifest.json");
  std::vector<SensorTrial> trials;
  try {
    for (const auto& e : manifest.at("trials")) {
      SensorTrial t;
      t.condition.terrain = parse_terrain(e.at("terrain").get<std::string>());
      t.condition.cadence_bpm = e.at("cadence_bpm").get<double>();
      t.condition.duration_s = e.at("duration_s").get<double>();
      t.condition.seed = e.at("seed").get<std::uint64_t>();
      t.imu = csv::read_imu_file(*data_dir / e.at("imu").get<std::string>());
      t.fsr = csv::read_fsr_file(*data_dir / e.at("fsr").get<std::string>());
      trials.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kInvalidData, "malformed manifest: " + std::string(e.what()));
  }
  if (trials.empty()) fail(Errc::kInsufficientData, "manifest lists no trials");
  return build_dataset(cfg.dataset, std::move(trials));
}

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.dataset.validate();
  std::vector<SensorTrial> trials;
  for (const auto& c : grid_conditions(cfg.dataset)) {
    trials.push_back(generate_trial(c, cfg.dataset.generator));
  }
  const Dataset data = build_dataset(cfg.dataset, std::move(trials));
  auto manifest = data.manifest();
  for (std::size_t i = 0; i < data.trials().size(); ++i) {
    const auto& lt = data.trials()[i];
    const std::string stem = "trials/" + trial_stem(i, lt.trial.condition);
    csv::write_imu_file(out_dir / (stem + ".imu.csv"), lt.trial.imu);
    csv::write_fsr_file(out_dir / (stem + ".fsr.csv"), lt.trial.fsr);
    std::ostringstream labels;
    csv::write_labels(labels, lt.timestamps, lt.percent);
    csv::write_text_file(out_dir / (stem + ".labels.csv"), labels.str());
    auto& entry = manifest["trials"][i];
    entry["imu"] = stem + ".imu.csv";
    entry["fsr"] = stem + ".fsr.csv";
    entry["labels"] = stem + ".labels.csv";
  }
  write_json(out_dir / "manifest.json", manifest);
  echo_config(cfg, out_dir);
}

GprOutcome cmd_train_gpr(const RunConfig& cfg, const fs::path& out_dir,
                         const std::optional<fs::path>& data_dir, std::ostream* log) {
  const Dataset data = load_or_generate(cfg, data_dir);
  const Split split = split_gpr(data.gpr_windows(), cfg.seed);
  Network model = build_gpr_model(cfg.seed, cfg.training.gpr_head);
  TrainConfig tcfg = cfg.training.gpr;
  tcfg.seed = cfg.seed;
  const auto history = train(model, data, split.train, tcfg, split.test, progress_to(log));

  GprOutcome outcome;
  outcome.rmse_pct = evaluate_gpr(model, data, split.test);
  outcome.train_windows = split.train.size();
  outcome.test_windows = split.test.size();

  save_weights(model, out_dir / "gpr.gmtw");
  csv::write_text_file(out_dir / "gpr_loss.csv", loss_curve_csv(history));
  write_json(out_dir / "gpr_metrics.json", {{"seed", cfg.seed},
                                            {"rmse_pct", outcome.rmse_pct},
                                            {"train_windows", outcome.train_windows},
                                            {"test_windows", outcome.test_windows},
                                            {"overrides", tcfg.overrides()}});
  echo_config(cfg, out_dir);
  return outcome;
}

TcMetrics cmd_train_tc(const RunConfig& cfg, const fs::path& gpr_weights, const fs::path& out_dir,
                       const std::optional<fs::path>& data_dir, std::ostream* log) {
  Network gpr = load_weights(gpr_weights);
  if (gpr.num_blocks() < kTerrainTapBlocks || gpr.spec().head.outputs != 2) {
    fail(Errc::kIncompatibleWeights, gpr_weights.string() + " is not a phase network");
  }
  const Dataset data = load_or_generate(cfg, data_dir);
  const Split split = split_tc(data.tc_windows(), cfg.seed, cfg.training.cycles_per_terrain);
  TrainConfig tcfg = cfg.training.tc;
  tcfg.seed = cfg.seed;
  TrainHistory history;
  Network tc = train_tc_stage(gpr, data, split.train, tcfg, cfg.training.tc_head, split.test,
                              &history, progress_to(log));
  const TcMetrics metrics = evaluate_tc(tc, data, split.test);

  MultitaskModel mt{std::move(gpr), std::move(tc)};
  save_multitask(mt, out_dir / "multitask.gmtw");
  csv::write_text_file(out_dir / "tc_loss.csv", loss_curve_csv(history));
  write_json(out_dir / "tc_metrics.json", {{"seed", cfg.seed},
                                           {"accuracy_pct", metrics.accuracy_pct},
                                           {"cross_entropy", metrics.cross_entropy},
                                           {"train_windows", split.train.size()},
                                           {"test_windows", split.test.size()},
                                           {"train_cycles", selected_cycles(split.train)},
                                           {"overrides", tcfg.overrides()}});
  echo_config(cfg, out_dir);
  return metrics;
}

ComparisonReport cmd_compare(const RunConfig& cfg, const fs::path& out_dir,
                             const std::optional<fs::path>& data_dir, bool save_weights,
                             std::ostream* log) {
  const Dataset data = load_or_generate(cfg, data_dir);
  std::vector<SeedArtifacts> artifacts;
  const auto report = run_comparison(data, cfg.seeds, cfg.training,
                                     save_weights ? &artifacts : nullptr, progress_to(log));
  emit_report(report, out_dir / "comparison.json", ReportFormat::kJson);
  emit_report(report, out_dir / "comparison.txt", ReportFormat::kText);
  for (const auto& g : report.gpr) {
    csv::write_text_file(out_dir / "curves" / ("gpr_seed" + std::to_string(g.seed) + ".csv"),
                         loss_curve_csv(g.history));
  }
  for (const auto& t : report.tc) {
    csv::write_text_file(
        out_dir / "curves" / (t.model + "_seed" + std::to_string(t.seed) + ".csv"),
        loss_curve_csv(t.history));
  }
  for (const auto& a : artifacts) {
    const fs::path dir = out_dir / "weights" / ("seed" + std::to_string(a.seed));
    csv::write_text_file(dir / "gpr.gmtw", a.gpr_weights);
    csv::write_text_file(dir / "multitask.gmtw", a.multitask_weights);
  }
  echo_config(cfg, out_dir);
  return report;
}

std::size_t cmd_infer(const fs::path& weights, const fs::path& imu_csv, const WindowConfig& window,
                      const fs::path& out_csv) {
  window.validate();
  const MultitaskModel mt = load_multitask(weights);
  const auto imu = csv::read_imu_file(imu_csv);
  const Channels channels = select_features(imu);
  const auto windows = stack_windows(channels, window);
  const std::size_t len = window.window_length();

  std::string out = "t,percent,x,y,terrain";
  for (auto t : kAllTerrains) out += ",p_" + std::string(terrain_code(t));
  out += "\n";

  const std::size_t per = kNumChannels * kRecords;
  for (std::size_t begin = 0; begin < windows.size(); begin += kInferChunk) {
    const std::size_t n = std::min(kInferChunk, windows.size() - begin);
    nn::Tensor batch({n, kNumChannels, kRecords});
    for (std::size_t i = 0; i < n; ++i) {
      const InputTensor in = make_input(windows[begin + i], window);
      std::copy(in.values().begin(), in.values().end(), batch.data() + i * per);
    }
    const nn::Tensor xy = mt.gpr.predict(batch);
    const nn::Tensor probs = mt.tc.predict(batch);
    const std::size_t k = probs.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = xy[2 * i], y = xy[2 * i + 1];
      const std::size_t last = (begin + i) * window.stride + len - 1;
      const double* p = probs.data() + i * k;
      const auto best = static_cast<std::size_t>(std::max_element(p, p + k) - p);
      out += csv::format_double(imu[last].t) + ",";
      // An all-zero phase output has no angle; the percent column is left empty.
      out += (x == 0.0 && y == 0.0 ? std::string() : csv::format_double(from_phase_xy(x, y)));
      out += "," + csv::format_double(x) + "," + csv::format_double(y) + ",";
      out += std::string(terrain_code(kAllTerrains.at(best)));
      for (std::size_t c = 0; c < k; ++c) out += "," + csv::format_double(p[c]);
      out += "\n";
    }
  }
  csv::write_text_file(out_csv, out);
  return windows.size();
}

GradcheckOutcome cmd_gradcheck(std::uint64_t seed, double tolerance, bool inject_sign_flip) {
  constexpr std::size_t kLength = 20, kBatch = 4, kBlocks = 2;
  const auto blocks = backbone_spec(kLength, kBlocks);
  const std::size_t features = blocks.back().out_channels * blocks.back().out_length;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  nn::Tensor input({kBatch, kNumChannels, kLength});
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = unit(rng);
  nn::Tensor targets({kBatch, 2});
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = 2.0 * unit(rng) - 1.0;
  const std::vector<int> labels{0, 1, 2, 1};

  nn::GradCheckOptions opts;
  opts.flip_first_gradient = inject_sign_flip;
  GradcheckOutcome outcome;
  outcome.tolerance = tolerance;

  auto check = [&](const ModelSpec& spec, const nn::LossFn& loss) {
    Network net = build_network(spec, seed);
    const auto r = nn::grad_check(net, input, loss, opts);
    outcome.checked += r.checked;
    if (outcome.worst_param.empty() || r.max_relative_error > outcome.max_relative_error) {
      outcome.max_relative_error = r.max_relative_error;
      outcome.worst_param = spec.name + ":" + r.worst_param + "[" + std::to_string(r.worst_index) + "]";
    }
  };

  ModelSpec phase{"reduced_phase", kNumChannels, kLength, blocks,
                  HeadSpec{features, {8}, 2, OutputActivation::kIdentity}};
  check(phase, [&](const nn::Tensor& out) { return nn::mse_loss(out, targets); });
  ModelSpec terrain{"reduced_terrain", kNumChannels, kLength, blocks,
                    HeadSpec{features, {8}, 3, OutputActivation::kSoftmax}};
  check(terrain, [&](const nn::Tensor& out) { return nn::softmax_xent(out, labels); });

  outcome.passed = outcome.max_relative_error <= tolerance;
  return outcome;
}

std::size_t cmd_label(const fs::path& fsr_csv, double threshold, const fs::path& out_csv) {
  const auto fsr = csv::read_fsr_file(fsr_csv);
  const auto events = detect_events(contact_sections(fsr, threshold, kMinSectionSeconds));
  std::vector<double> t;
  t.reserve(fsr.size());
  for (const auto& s : fsr) t.push_back(s.t);
  const auto percent = assign_percent(t, events);
  std::ostringstream os;
  csv::write_labels(os, t, percent);
  csv::write_text_file(out_csv, os.str());
  return static_cast<std::size_t>(std::count_if(percent.begin(), percent.end(),
                                                 [](const auto& p) { return p.has_value(); }));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const RunConfig defaults;
  CLI::App app{"Multitask gait phase and terrain networks on IMU windows", "gaitmtl"};
  app.require_subcommand(1);
  app.fallthrough();
  app.get_formatter()->column_width(36);

  std::string config_path;
  std::uint64_t seed = defaults.seed;
  std::string out_dir = "gaitmtl_out";
  app.add_option("--config", config_path, "JSON run config; unknown keys are rejected")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Run seed (training and splits; data seed for synth)")
                       ->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic trial grid as CSV files");
  double duration = defaults.dataset.trial_duration_s;
  std::vector<double> cadences = defaults.dataset.cadences_bpm;
  std::vector<std::string> terrains{"LW", "SA", "SD"};
  auto* dur_opt = synth->add_option("--duration", duration, "Trial length in seconds")
                      ->capture_default_str();
  auto* cad_opt = synth->add_option("--cadences", cadences, "Cadences in steps per minute")
                      ->delimiter(',')
                      ->capture_default_str();
  auto* ter_opt = synth->add_option("--terrains", terrains, "Terrain codes (LW, SA, SD)")
                      ->delimiter(',')
                      ->capture_default_str();

  // shared training flags
  std::string data_dir;
  const auto add_data = [&](CLI::App* sub) {
    return sub->add_option("--data", data_dir, "Directory written by `synth` (default: generate in memory)")
        ->check(CLI::ExistingDirectory);
  };

  auto* tgpr = app.add_subcommand("train-gpr", "Train the phase network");
  auto* tgpr_data = add_data(tgpr);
  std::size_t gpr_epochs = defaults.training.gpr.epochs;
  double gpr_lr = defaults.training.gpr.lr;
  std::size_t gpr_batch = defaults.training.gpr.batch_size;
  bool relu_output = defaults.training.gpr_head.relu_output;
  auto* gpr_epochs_opt = tgpr->add_option("--epochs", gpr_epochs, "Epochs (protocol default)")->capture_default_str();
  auto* gpr_lr_opt = tgpr->add_option("--lr", gpr_lr, "Adam learning rate (protocol default)")->capture_default_str();
  auto* gpr_batch_opt = tgpr->add_option("--batch-size", gpr_batch, "Mini-batch size (protocol default)")->capture_default_str();
  auto* relu_opt = tgpr->add_flag("--relu-output", relu_output, "ReLU on the two phase outputs");

  auto* ttc = app.add_subcommand("train-tc", "Train the terrain head on a frozen phase backbone");
  auto* ttc_data = add_data(ttc);
  std::string gpr_weights;
  ttc->add_option("--gpr-weights", gpr_weights, "Phase network weights from train-gpr")
      ->required()
      ->check(CLI::ExistingFile);
  std::size_t tc_epochs = defaults.training.tc.epochs;
  double tc_lr = defaults.training.tc.lr;
  std::size_t tc_batch = defaults.training.tc.batch_size;
  std::size_t cycles = defaults.training.cycles_per_terrain;
  auto* tc_epochs_opt = ttc->add_option("--epochs", tc_epochs, "Epochs (protocol default)")->capture_default_str();
  auto* tc_lr_opt = ttc->add_option("--lr", tc_lr, "Adam learning rate (protocol default)")->capture_default_str();
  auto* tc_batch_opt = ttc->add_option("--batch-size", tc_batch, "Mini-batch size (protocol default)")->capture_default_str();
  auto* cycles_opt = ttc->add_option("--cycles-per-terrain", cycles, "Training cycles drawn per terrain (protocol default)")
                         ->capture_default_str();

  auto* cmp = app.add_subcommand("compare", "Models 1-3 over several seeds");
  auto* cmp_data = add_data(cmp);
  std::vector<std::uint64_t> seeds = defaults.seeds;
  std::size_t cmp_gpr_epochs = defaults.training.gpr.epochs;
  std::size_t cmp_tc_epochs = defaults.training.tc.epochs;
  bool no_weights = false;
  auto* seeds_opt = cmp->add_option("--seeds", seeds, "Comma-separated seed list")
                        ->delimiter(',')
                        ->capture_default_str();
  auto* cmp_gpr_opt = cmp->add_option("--gpr-epochs", cmp_gpr_epochs, "Phase network epochs (protocol default)")
                          ->capture_default_str();
  auto* cmp_tc_opt = cmp->add_option("--tc-epochs", cmp_tc_epochs, "Terrain network epochs (protocol default)")
                         ->capture_default_str();
  cmp->add_flag("--no-weights", no_weights, "Skip writing per-seed weight files");

  auto* inf = app.add_subcommand("infer", "Per-window phase and terrain predictions for one IMU CSV");
  std::string weights_path, imu_path;
  WindowConfig window;
  inf->add_option("--weights", weights_path, "Multitask weights from train-tc")->required()->check(CLI::ExistingFile);
  inf->add_option("--imu", imu_path, "IMU CSV (t,lax,lay,laz,avx,avy,avz)")->required()->check(CLI::ExistingFile);
  inf->add_option("--duration", window.duration_s, "Window length in seconds")->capture_default_str();
  inf->add_option("--stride", window.stride, "Window stride in samples")->capture_default_str();

  auto* gc = app.add_subcommand("gradcheck", "Analytic vs central-difference gradients on a reduced network");
  double tolerance = 1e-6;
  bool flip = false;
  gc->add_option("--tolerance", tolerance, "Largest accepted relative error")->capture_default_str();
  gc->add_flag("--inject-sign-flip", flip, "Test hook: negate one analytic gradient");

  auto* lab = app.add_subcommand("label", "Phase labels from an FSR CSV");
  std::string fsr_path;
  double threshold = kDefaultContactThreshold;
  lab->add_option("--fsr", fsr_path, "FSR CSV (t,front,back)")->required()->check(CLI::ExistingFile);
  lab->add_option("--threshold", threshold, "Contact threshold on normalized force")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(csv::read_text_file(config_path));
      } catch (const nlohmann::json::parse_error& e) {
        fail(Errc::kInvalidConfig, config_path + ": " + e.what());
      }
      cfg = RunConfig::from_json(j);
    }
    if (seed_opt->count()) cfg.seed = seed;
    const fs::path out_path = out_dir;
    const auto data = [&](CLI::Option* opt) -> std::optional<fs::path> {
      if (opt->count()) return fs::path(data_dir);
      return std::nullopt;
    };

    if (synth->parsed()) {
      if (seed_opt->count()) cfg.dataset.seed = seed;
      if (dur_opt->count()) cfg.dataset.trial_duration_s = duration;
      if (cad_opt->count()) cfg.dataset.cadences_bpm = cadences;
      if (ter_opt->count()) {
        cfg.dataset.terrains.clear();
        for (const auto& t : terrains) cfg.dataset.terrains.push_back(parse_terrain(t));
      }
      cmd_synth(cfg, out_path);
      out << "wrote " << cfg.dataset.terrains.size() * cfg.dataset.cadences_bpm.size()
          << " trials to " << out_path.string() << '\n';
    } else if (tgpr->parsed()) {
      if (gpr_epochs_opt->count()) cfg.training.gpr.epochs = gpr_epochs;
      if (gpr_lr_opt->count()) cfg.training.gpr.lr = gpr_lr;
      if (gpr_batch_opt->count()) cfg.training.gpr.batch_size = gpr_batch;
      if (relu_opt->count()) cfg.training.gpr_head.relu_output = relu_output;
      const auto r = cmd_train_gpr(cfg, out_path, data(tgpr_data), &err);
      out << "phase RMSE " << r.rmse_pct << " % on " << r.test_windows << " test windows\n";
    } else if (ttc->parsed()) {
      if (tc_epochs_opt->count()) cfg.training.tc.epochs = tc_epochs;
      if (tc_lr_opt->count()) cfg.training.tc.lr = tc_lr;
      if (tc_batch_opt->count()) cfg.training.tc.batch_size = tc_batch;
      if (cycles_opt->count()) cfg.training.cycles_per_terrain = cycles;
      const auto m = cmd_train_tc(cfg, gpr_weights, out_path, data(ttc_data), &err);
      out << "terrain accuracy " << m.accuracy_pct << " %, cross-entropy " << m.cross_entropy << '\n';
    } else if (cmp->parsed()) {
      if (seeds_opt->count()) cfg.seeds = seeds;
      if (cmp_gpr_opt->count()) cfg.training.gpr.epochs = cmp_gpr_epochs;
      if (cmp_tc_opt->count()) cfg.training.tc.epochs = cmp_tc_epochs;
      const auto report = cmd_compare(cfg, out_path, data(cmp_data), !no_weights, &err);
      out << render_report(report, ReportFormat::kText);
    } else if (inf->parsed()) {
      window.smooth_len = cfg.dataset.smooth_len;
      const auto n = cmd_infer(weights_path, imu_path, window, out_path / "inference.csv");
      echo_config(cfg, out_path);
      out << "wrote " << n << " windows to " << (out_path / "inference.csv").string() << '\n';
    } else if (gc->parsed()) {
      const auto r = cmd_gradcheck(cfg.seed, tolerance, flip);
      out << (r.passed ? "PASS" : "FAIL") << " max relative error " << r.max_relative_error
          << " (tolerance " << r.tolerance << ", worst " << r.worst_param << ", " << r.checked
          << " entries)\n";
      return r.passed ? kExitOk : kExitNumerical;
    } else if (lab->parsed()) {
      const auto n = cmd_label(fsr_path, threshold, out_path / "labels.csv");
      echo_config(cfg, out_path);
      out << "labeled " << n << " samples\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace gaitmtl::cli
