#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillopt/core.hpp"
#include "skillopt/dataset.hpp"
#include "skillopt/llm/provider.hpp"
#include "skillopt/serialization.hpp"

namespace skillopt::cli {

/// Resolved settings for every command. Relative paths in a config file are
/// resolved against the file's directory.
struct RunConfig {
  std::filesystem::path dataset_path;
  RaterColumn rater = RaterColumn::score1;
  std::optional<std::filesystem::path> item_catalog;
  std::vector<std::string> items;
  std::vector<ScaffoldVariant> variants{ScaffoldVariant::weak};
  std::optional<std::filesystem::path> scaffold_file;  // required for the custom variant
  std::vector<std::uint64_t> seeds{42};
  SplitSpec split;
  std::size_t batch_target = 100;
  int patience = 3;
  std::size_t diagnosis_token_budget = 0;
  std::optional<ProviderConfig> scorer;
  std::optional<ProviderConfig> diagnoser;
  std::filesystem::path output_root = "skillopt-out";

  /// Throws ConfigError on a broken invariant.
  void validate(bool providers_required) const;
};

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// JSON form of the config; holds env var names, never key values.
json to_json(const RunConfig& config);
json to_json(const ProviderConfig& config);

std::vector<std::string> split_csv(std::string_view text);

}  // namespace skillopt::cli
