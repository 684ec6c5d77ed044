#pragma once

// Binary weight container (little-endian):
//   "GMTW" | u32 version | u64 spec fingerprint | u32 len + spec JSON
//   | u32 entry count | entries...
// entry: u32 len + name | u8 trainable | u32 rank | u32 dims[rank] | f64 data[]

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gaitmtl/nn/tensor.hpp"

namespace gaitmtl {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct WeightEntry {
  std::string name;
  nn::Shape shape;
  std::vector<double> values;
  bool trainable = true;
};

struct WeightFile {
  std::uint64_t fingerprint = 0;
  std::string spec_json;
  std::vector<WeightEntry> entries;

  const WeightEntry* find(std::string_view name) const;
};

std::string encode_weights(const WeightFile& file);
/// Throws CorruptFile on truncation, bad magic, unknown version or trailing bytes.
WeightFile decode_weights(std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace gaitmtl
