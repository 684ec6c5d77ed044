#include "run_config.hpp"

#include <set>
#include <string>

#include "gaitmtl/errors.hpp"

namespace gaitmtl::cli {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where, const std::set<std::string>& keys) {
  if (!j.is_object()) fail(Errc::kInvalidConfig, where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) fail(Errc::kInvalidConfig, "unknown key '" + where + "." + k + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(Errc::kInvalidConfig, "bad value for '" + where + "." + key + "'");
  }
}

json train_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"curve_test_limit", c.curve_test_limit}};
}

void apply_train(const json& j, TrainConfig& c, const std::string& where) {
  require_object(j, where, {"lr", "batch_size", "epochs", "curve_test_limit"});
  take(j, "lr", c.lr, where);
  take(j, "batch_size", c.batch_size, where);
  take(j, "epochs", c.epochs, where);
  take(j, "curve_test_limit", c.curve_test_limit, where);
}

void apply_generator(const json& j, GaitModelParams& g) {
  const std::string w = "dataset.generator";
  require_object(j, w,
                 {"accel_noise_std", "gyro_noise_std", "fsr_noise_std", "gain_min", "gain_max",
                  "coefficient_jitter", "cycle_jitter", "stride_jitter", "start_phase", "segment_length_m"});
  take(j, "accel_noise_std", g.accel_noise_std, w);
  take(j, "gyro_noise_std", g.gyro_noise_std, w);
  take(j, "fsr_noise_std", g.fsr_noise_std, w);
  take(j, "gain_min", g.gain_min, w);
  take(j, "gain_max", g.gain_max, w);
  take(j, "coefficient_jitter", g.coefficient_jitter, w);
  take(j, "cycle_jitter", g.cycle_jitter, w);
  take(j, "stride_jitter", g.stride_jitter, w);
  take(j, "start_phase", g.start_phase, w);
  take(j, "segment_length_m", g.segment_length_m, w);
}

void apply_dataset(const json& j, DatasetConfig& d) {
  const std::string w = "dataset";
  require_object(j, w,
                 {"terrains", "cadences_bpm", "trial_duration_s", "window_durations_s",
                  "gpr_stride", "tc_stride", "smooth_len", "contact_threshold", "seed",
                  "generator"});
  if (j.contains("terrains")) {
    std::vector<std::string> codes;
    take(j, "terrains", codes, w);
    d.terrains.clear();
    for (const auto& c : codes) d.terrains.push_back(parse_terrain(c));
  }
  take(j, "cadences_bpm", d.cadences_bpm, w);
  take(j, "trial_duration_s", d.trial_duration_s, w);
  take(j, "window_durations_s", d.window_durations_s, w);
  take(j, "gpr_stride", d.gpr_stride, w);
  take(j, "tc_stride", d.tc_stride, w);
  take(j, "smooth_len", d.smooth_len, w);
  take(j, "contact_threshold", d.contact_threshold, w);
  take(j, "seed", d.seed, w);
  if (j.contains("generator")) apply_generator(j.at("generator"), d.generator);
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  const auto& t = training;
  return {{"seed", seed},
          {"seeds", seeds},
          {"dataset", dataset.to_json()},
          {"gpr_train", train_json(t.gpr)},
          {"tc_train", train_json(t.tc)},
          {"gpr_head", {{"hidden", t.gpr_head.hidden}, {"relu_output", t.gpr_head.relu_output}}},
          {"tc_head", {{"hidden", t.tc_head.hidden}}},
          {"cycles_per_terrain", t.cycles_per_terrain}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j, RunConfig base) {
  RunConfig c = std::move(base);
  require_object(j, "config",
                 {"seed", "seeds", "dataset", "gpr_train", "tc_train", "gpr_head",
                  "tc_head", "cycles_per_terrain"});
  take(j, "seed", c.seed, "config");
  take(j, "seeds", c.seeds, "config");
  take(j, "cycles_per_terrain", c.training.cycles_per_terrain, "config");
  if (j.contains("dataset")) apply_dataset(j.at("dataset"), c.dataset);
  if (j.contains("gpr_train")) apply_train(j.at("gpr_train"), c.training.gpr, "gpr_train");
  if (j.contains("tc_train")) apply_train(j.at("tc_train"), c.training.tc, "tc_train");
  if (j.contains("gpr_head")) {
    const auto& h = j.at("gpr_head");
    require_object(h, "gpr_head", {"hidden", "relu_output"});
    take(h, "hidden", c.training.gpr_head.hidden, "gpr_head");
    take(h, "relu_output", c.training.gpr_head.relu_output, "gpr_head");
  }
  if (j.contains("tc_head")) {
    const auto& h = j.at("tc_head");
    require_object(h, "tc_head", {"hidden"});
    take(h, "hidden", c.training.tc_head.hidden, "tc_head");
  }
  return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }

}  // namespace gaitmtl::cli
