#include <cmath>
#include <cstdio>
#include <sstream>

#include "gaitmtl/csv_io.hpp"
#include "gaitmtl/errors.hpp"
#include "gaitmtl/trainer.hpp"

namespace gaitmtl {

namespace {

nlohmann::json history_json(const TrainHistory& h) {
  return {{"train_loss", h.train_loss}, {"test_loss", h.test_loss}};
}

TrainHistory history_from(const nlohmann::json& j) {
  TrainHistory h;
  h.train_loss = j.at("train_loss").get<std::vector<double>>();
  h.test_loss = j.at("test_loss").get<std::vector<double>>();
  return h;
}

nlohmann::json ms_json(MeanStd m) { return {{"mean", m.mean}, {"std", m.std}}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string cell(MeanStd m, const char* f) { return fmt(f, m.mean) + " ± " + fmt(f, m.std); }

std::string pad(const std::string& s, std::size_t width) {
  // "±" is two bytes but one column wide.
  std::size_t cols = 0;
  for (unsigned char c : s) cols += (c & 0xC0) != 0x80;
  return cols >= width ? s + " " : s + std::string(width - cols, ' ');
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

MeanStd ComparisonReport::gpr_rmse() const {
  std::vector<double> v;
  for (const auto& r : gpr) v.push_back(r.rmse_pct);
  return mean_std(v);
}

MeanStd ComparisonReport::accuracy(const std::string& model) const {
  std::vector<double> v;
  for (const auto& r : tc)
    if (r.model == model) v.push_back(r.metrics.accuracy_pct);
  return mean_std(v);
}

MeanStd ComparisonReport::cross_entropy(const std::string& model) const {
  std::vector<double> v;
  for (const auto& r : tc)
    if (r.model == model) v.push_back(r.metrics.cross_entropy);
  return mean_std(v);
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& r : gpr) {
    g.push_back({{"seed", r.seed},
                 {"rmse_pct", r.rmse_pct},
                 {"train_windows", r.train_windows},
                 {"test_windows", r.test_windows},
                 {"history", history_json(r.history)}});
  }
  nlohmann::json t = nlohmann::json::array();
  for (const auto& r : tc) {
    t.push_back({{"model", r.model},
                 {"seed", r.seed},
                 {"accuracy_pct", r.metrics.accuracy_pct},
                 {"cross_entropy", r.metrics.cross_entropy},
                 {"train_windows", r.train_windows},
                 {"test_windows", r.test_windows},
                 {"train_cycles", r.train_cycles},
                 {"history", history_json(r.history)}});
  }
  nlohmann::json models = nlohmann::json::object();
  for (const char* name : kModelNames) {
    models[name] = {{"accuracy_pct", ms_json(accuracy(name))},
                    {"cross_entropy", ms_json(cross_entropy(name))}};
  }
  return {{"provenance", provenance},
          {"gpr", g},
          {"tc", t},
          {"summary", {{"gpr_rmse_pct", ms_json(gpr_rmse())}, {"tc", models}}}};
}

ComparisonReport ComparisonReport::from_json(const nlohmann::json& j) {
  try {
    ComparisonReport r;
    r.provenance = j.at("provenance");
    for (const auto& e : j.at("gpr")) {
      GprRun g;
      g.seed = e.at("seed").get<std::uint64_t>();
      g.rmse_pct = e.at("rmse_pct").get<double>();
      g.train_windows = e.at("train_windows").get<std::size_t>();
      g.test_windows = e.at("test_windows").get<std::size_t>();
      g.history = history_from(e.at("history"));
      r.gpr.push_back(std::move(g));
    }
    for (const auto& e : j.at("tc")) {
      TcRun t;
      t.model = e.at("model").get<std::string>();
      t.seed = e.at("seed").get<std::uint64_t>();
      t.metrics.accuracy_pct = e.at("accuracy_pct").get<double>();
      t.metrics.cross_entropy = e.at("cross_entropy").get<double>();
      t.train_windows = e.at("train_windows").get<std::size_t>();
      t.test_windows = e.at("test_windows").get<std::size_t>();
      t.train_cycles = e.at("train_cycles").get<std::vector<int>>();
      t.history = history_from(e.at("history"));
      r.tc.push_back(std::move(t));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kCorruptFile, std::string("malformed report: ") + e.what());
  }
}

std::string render_report(const ComparisonReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) return report.to_json().dump(2) + "\n";

  std::ostringstream os;
  const std::size_t w0 = 20, w = 22;
  os << pad("model", w0) << pad("phase RMSE (%)", w) << pad("terrain acc (%)", w)
     << "terrain cross-entropy\n";
  for (std::size_t i = 0; i < std::size(kModelNames); ++i) {
    const std::string name = kModelNames[i];
    os << pad(name, w0) << pad(i == 0 ? cell(report.gpr_rmse(), "%.3f") : "-", w)
       << pad(cell(report.accuracy(name), "%.2f"), w) << cell(report.cross_entropy(name), "%.4f")
       << "\n";
  }
  os << "(" << report.gpr.size() << " seeds; ± is the sample standard deviation over seeds)\n\n";
  os << "per seed\n";
  for (const auto& g : report.gpr) {
    os << "  seed " << g.seed << "  phase RMSE " << fmt("%.3f", g.rmse_pct) << " %\n";
  }
  for (const auto& t : report.tc) {
    os << "  seed " << t.seed << "  " << pad(t.model, w0) << "acc "
       << fmt("%.2f", t.metrics.accuracy_pct) << " %  xent " << fmt("%.4f", t.metrics.cross_entropy)
       << "\n";
  }
  return os.str();
}

void emit_report(const ComparisonReport& report, const std::filesystem::path& path,
                 ReportFormat format) {
  csv::write_text_file(path, render_report(report, format));
}

std::string loss_curve_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,test_loss\n";
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + csv::format_double(history.train_loss[e]) + ",";
    if (e < history.test_loss.size()) out += csv::format_double(history.test_loss[e]);
    out += "\n";
  }
  return out;
}

}  // namespace gaitmtl
