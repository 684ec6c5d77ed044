#include "gaitmtl/csv_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gaitmtl/errors.hpp"

namespace gaitmtl::csv {

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t expected, std::size_t line_no) {
  std::vector<double> values;
  values.reserve(expected);
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p <= end) {
    const char* comma = p;
    while (comma < end && *comma != ',') ++comma;
    double v = 0.0;
    const char* first = p;
    while (first < comma && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, comma, v);
    if (ec != std::errc() || ptr == first) {
      fail(Errc::kInvalidData, "malformed number on line " + std::to_string(line_no));
    }
    values.push_back(v);
    if (comma == end) break;
    p = comma + 1;
  }
  if (values.size() != expected) {
    fail(Errc::kInvalidData, "expected " + std::to_string(expected) + " columns on line " +
                                 std::to_string(line_no));
  }
  return values;
}

template <typename Row>
std::vector<Row> read_table(std::istream& is, const char* header, std::size_t columns,
                            Row (*make)(const std::vector<double>&)) {
  std::string line;
  if (!std::getline(is, line)) fail(Errc::kEmptyStream, "missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) fail(Errc::kInvalidData, "unexpected CSV header '" + line + "'");
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto v = parse_row(line, columns, line_no);
    for (double x : v) {
      if (!std::isfinite(x)) fail(Errc::kInvalidData, "non-finite value on line " + std::to_string(line_no));
    }
    if (!rows.empty() && !(v[0] > rows.back().t)) {
      fail(Errc::kInvalidData, "timestamps not strictly increasing on line " + std::to_string(line_no));
    }
    rows.push_back(make(v));
  }
  return rows;
}

ImuSample imu_from(const std::vector<double>& v) {
  return {v[0], {v[1], v[2], v[3]}, {v[4], v[5], v[6]}};
}

FsrSample fsr_from(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIo, "cannot open " + path.string());
  return is;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) fail(Errc::kInvalidData, "cannot format number");
  return std::string(buf.data(), ptr);
}

void write_imu(std::ostream& os, std::span<const ImuSample> samples) {
  os << kImuHeader << '\n';
  for (const auto& s : samples) {
    os << format_double(s.t);
    for (double v : s.lin_acc) os << ',' << format_double(v);
    for (double v : s.ang_vel) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_fsr(std::ostream& os, std::span<const FsrSample> samples) {
  os << kFsrHeader << '\n';
  for (const auto& s : samples) {
    os << format_double(s.t) << ',' << format_double(s.front) << ',' << format_double(s.back)
       << '\n';
  }
}

void write_labels(std::ostream& os, std::span<const double> timestamps,
                  std::span<const std::optional<double>> percents) {
  if (timestamps.size() != percents.size()) fail(Errc::kInvalidData, "label length mismatch");
  os << kLabelHeader << '\n';
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (!percents[i]) continue;
    const auto xy = to_phase_xy(*percents[i]);
    os << format_double(timestamps[i]) << ',' << format_double(*percents[i]) << ','
       << format_double(xy.x) << ',' << format_double(xy.y) << '\n';
  }
}

std::vector<ImuSample> read_imu(std::istream& is) {
  return read_table<ImuSample>(is, kImuHeader, 7, &imu_from);
}

std::vector<FsrSample> read_fsr(std::istream& is) {
  return read_table<FsrSample>(is, kFsrHeader, 3, &fsr_from);
}

std::vector<ImuSample> read_imu_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_imu(is);
}

std::vector<FsrSample> read_fsr_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_fsr(is);
}

void write_imu_file(const std::filesystem::path& path, std::span<const ImuSample> samples) {
  std::ostringstream os;
  write_imu(os, samples);
  write_text_file(path, os.str());
}

void write_fsr_file(const std::filesystem::path& path, std::span<const FsrSample> samples) {
  std::ostringstream os;
  write_fsr(os, samples);
  write_text_file(path, os.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::kIo, "cannot write " + path.string());
  os << contents;
  if (!os) fail(Errc::kIo, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace gaitmtl::csv
