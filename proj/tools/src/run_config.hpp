#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "gaitmtl/dataset.hpp"
#include "gaitmtl/trainer.hpp"

namespace gaitmtl::cli {

/// Everything a command needs, merged from defaults, an optional JSON file and
/// command-line flags (in that order of precedence, lowest first).
struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  DatasetConfig dataset;
  ComparisonConfig training;

  nlohmann::json to_json() const;
  /// Applies the keys present in `j` on top of `base`. Unknown keys raise
  /// InvalidConfig.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j);
};

}  // namespace gaitmtl::cli
