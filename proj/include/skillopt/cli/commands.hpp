#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "skillopt/cli/config.hpp"
#include "skillopt/dataset.hpp"
#include "skillopt/llm/provider.hpp"

namespace skillopt::cli {

struct Providers {
  std::shared_ptr<ChatProvider> scorer;
  std::shared_ptr<ChatProvider> diagnoser;
  /// What each provider is, as recorded in run snapshots (model, script hash).
  json scorer_identity;
  json diagnoser_identity;
};

/// Mock provider in both roles when `mock_script` is set, HTTP providers otherwise.
Providers make_providers(const RunConfig& config, const std::optional<std::filesystem::path>& mock_script);

/// Contents of one split manifest: the item, its split and batch plan.
struct SplitManifest {
  Item item;
  SplitSpec spec;
  DatasetSplit split;
  BatchPlan batches;
};

json to_json(const SplitManifest& manifest);
SplitManifest split_manifest_from_json(const json& j);

std::filesystem::path split_manifest_path(const RunConfig& config, const std::string& item_id, std::uint64_t seed);
std::filesystem::path run_dir(const RunConfig& config, const std::string& item_id, ScaffoldVariant variant,
                              std::uint64_t seed);
std::filesystem::path eval_dir(const RunConfig& config);

/// Loads the split manifest written by cmd_ingest; names the path when missing.
SplitManifest read_split_manifest(const RunConfig& config, const std::string& item_id, std::uint64_t seed);

/// Config snapshot hashed into a run; covers everything that shapes its result.
json run_snapshot(const RunConfig& config, const SplitManifest& manifest, ScaffoldVariant variant,
                  std::uint64_t seed, const Providers& providers, const std::string& scaffold_text);

/// Writes splits/item_<id>/seed_<s>.json for every (item, seed).
void cmd_ingest(const RunConfig& config, std::ostream& out);

/// init_run + run_loop per (item, variant, seed). Without `resume` an
/// existing run directory is cleared first.
void cmd_optimize(const RunConfig& config, Providers& providers, bool resume, std::ostream& out);

/// Four-condition evaluation plus, with two or more items, the transfer grid.
void cmd_evaluate(const RunConfig& config, Providers& providers, std::ostream& out);

/// Per-iteration table and current augmentation of one run directory.
void cmd_inspect(const std::filesystem::path& run_dir, std::ostream& out);

/// Text of the README describing the on-disk formats.
std::string_view run_layout_readme();

/// Maps an exception to the process exit code: 2 usage or config, 3 data,
/// 4 provider, 1 anything else.
int exit_code_for(const std::exception& error);

/// Full command-line entry point; returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace skillopt::cli
