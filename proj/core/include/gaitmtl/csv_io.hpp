#pragma once

// Plain-text trial formats. Numbers are written in shortest round-trip form so
// a write -> read -> write cycle is byte-stable.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaitmtl/labeler.hpp"
#include "gaitmtl/pipeline.hpp"

namespace gaitmtl::csv {

inline constexpr const char* kImuHeader = "t,lax,lay,laz,avx,avy,avz";
inline constexpr const char* kFsrHeader = "t,front,back";
inline constexpr const char* kLabelHeader = "t,percent,x,y";

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

void write_imu(std::ostream& os, std::span<const ImuSample> samples);
void write_fsr(std::ostream& os, std::span<const FsrSample> samples);
/// Writes one row per labeled timestamp; unlabeled samples are skipped.
void write_labels(std::ostream& os, std::span<const double> timestamps,
                  std::span<const std::optional<double>> percents);

std::vector<ImuSample> read_imu(std::istream& is);
std::vector<FsrSample> read_fsr(std::istream& is);

std::vector<ImuSample> read_imu_file(const std::filesystem::path& path);
std::vector<FsrSample> read_fsr_file(const std::filesystem::path& path);
void write_imu_file(const std::filesystem::path& path, std::span<const ImuSample> samples);
void write_fsr_file(const std::filesystem::path& path, std::span<const FsrSample> samples);

/// Writes `contents` verbatim, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace gaitmtl::csv
