#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skillopt/core.hpp"

namespace skillopt {

enum class RaterColumn { score1, score2 };

RaterColumn parse_rater(std::string_view text);
std::string_view to_string(RaterColumn rater);

/// Orders numeric item ids numerically ("2" < "10"), everything else lexically.
struct ItemIdLess {
  bool operator()(const std::string& a, const std::string& b) const;
};

/// Metadata the raw TSV does not carry: item stems, expert rubrics, scales.
struct ItemInfo {
  std::optional<std::string> stem;
  std::optional<std::string> expert_rubric;
  std::optional<int> max_score;
};

using ItemCatalog = std::map<std::string, ItemInfo, ItemIdLess>;

/// Parses a catalog JSON object: {"<item_id>": {"stem": ..., "expert_rubric": ..., "max_score": ...}}.
ItemCatalog load_item_catalog(const std::filesystem::path& path);

/// Max score per ASAP-SAS essay set: sets 1, 2, 5, 6 score 0-3; the rest 0-2.
const std::map<std::string, int, ItemIdLess>& asap_sas_max_scores();

struct LoadOptions {
  RaterColumn rater = RaterColumn::score1;
  /// Per-item max-score overrides; take precedence over the catalog and defaults.
  std::map<std::string, int, ItemIdLess> max_score_override;
  ItemCatalog catalog;
};

struct ItemData {
  Item item;
  std::vector<LabeledResponse> responses;
};

using Dataset = std::map<std::string, ItemData, ItemIdLess>;

/// Reads an ASAP-SAS style TSV (Id, EssaySet, Score1, Score2, EssayText).
/// Throws DataError naming the offending line.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});
Dataset parse_dataset(std::istream& in, const LoadOptions& options = {},
                      std::string_view source_name = "<stream>");

[[nodiscard]] std::size_t total_responses(const Dataset& dataset);

struct SplitSpec {
  double train_fraction = 0.65;
  double val_fraction = 0.15;
  double test_fraction = 0.20;
  std::uint64_t seed = 42;

  void validate() const;
};

struct DatasetSplit {
  std::vector<LabeledResponse> train;
  std::vector<LabeledResponse> val;
  std::vector<LabeledResponse> test;
};

/// Per-level part sizes chosen by the stratified splitter.
struct Apportionment {
  /// One {train, val, test} triple per level, indexed like the input counts.
  std::vector<std::array<std::size_t, 3>> per_level;
  std::array<std::size_t, 3> totals{};
};

/// Rounds level_count x fraction to integers so that every cell is the floor
/// or ceiling of its exact share, every level keeps its count, and every part
/// total is the floor or ceiling of its exact share. Among such roundings the
/// part totals follow largest remainder (ties train, val, test) when feasible,
/// and the extra seats inside each level go to its largest remainders first.
Apportionment apportion(std::span<const std::size_t> level_counts, const SplitSpec& spec);

/// Stratified three-way split. Within each score level the responses are
/// shuffled with a SplitMix64 stream seeded from (spec.seed, item_id) and dealt
/// to the parts in apportioned sizes. Parts list responses by (level, shuffle order).
DatasetSplit stratified_split(std::span<const LabeledResponse> responses, const SplitSpec& spec);

struct BatchPlan {
  std::vector<std::vector<std::size_t>> batches;
  std::size_t target_batch_size = 100;

  [[nodiscard]] std::size_t size() const { return batches.size(); }
};

/// Seeded shuffle of 0..train_size-1 chunked into batches of `target`; a
/// trailing batch under ceil(target/2) is merged into its predecessor.
BatchPlan make_batches(std::size_t train_size, std::size_t target, std::uint64_t seed);

}  // namespace skillopt
