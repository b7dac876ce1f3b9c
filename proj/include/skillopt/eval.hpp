#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillopt/core.hpp"
#include "skillopt/dataset.hpp"
#include "skillopt/llm/provider.hpp"
#include "skillopt/llm/scoring.hpp"
#include "skillopt/metrics.hpp"
#include "skillopt/serialization.hpp"

namespace skillopt {

enum class Condition { no_rubric, s0, s_best, expert };

std::string_view to_string(Condition condition);
Condition parse_condition(std::string_view text);

/// Inputs a scoring condition may need. s0 and s_best read `skill`,
/// expert reads the item's expert rubric.
struct ConditionArtifacts {
  std::optional<Skill> skill;
};

struct ConditionResult {
  std::string item_id;
  Condition condition = Condition::no_rubric;
  std::optional<ScaffoldVariant> s0_variant;
  std::optional<double> test_qwk;  // nullopt: degenerate
  ConfusionMatrix confusion;
  double fallback_rate = 0.0;
  std::uint64_t seed = 0;
  std::optional<Rubric> rubric;
  std::vector<int> human;
  std::vector<ScoreRecord> records;
};

void to_json(json& j, const ConditionResult& value);

/// Memoizes one generated rubric per (composed skill, item).
class RubricCache {
 public:
  Rubric get_or_generate(ChatProvider& provider, const Skill& skill, const Item& item);
  [[nodiscard]] std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Rubric> rubrics_;
};

ConditionResult evaluate_condition(const Item& item, std::span<const LabeledResponse> test,
                                   Condition condition, const ConditionArtifacts& artifacts,
                                   ChatProvider& provider, RubricCache& cache,
                                   const ScoringPolicy& policy, std::uint64_t seed = 0);

/// (current - baseline) / |baseline|; nullopt if either side is missing or
/// |baseline| < 1e-9.
std::optional<double> relative_gain(std::optional<double> current, std::optional<double> baseline);

/// Per-target inputs for the transfer grid.
struct TransferTarget {
  Item item;
  std::vector<LabeledResponse> test;
  ScoringPolicy policy;
  ConditionResult s0;
  ConditionResult s_best;
  std::optional<ConditionResult> expert;
};

struct TransferCell {
  std::string source_item_id;
  std::string target_item_id;
  bool in_distribution = false;
  std::optional<double> test_qwk;
  std::optional<double> gain_vs_s0;
  std::optional<double> gain_vs_expert;
  std::optional<double> gain_vs_best;
};

struct TransferGrid {
  std::vector<std::string> item_ids;
  /// cells[source][target], both in item_ids order.
  std::vector<std::vector<TransferCell>> cells;
};

void to_json(json& j, const TransferCell& value);

/// Applies each source item's optimized skill to every target's test set.
/// Diagonal cells reuse the target's own s_best result.
TransferGrid transfer_matrix(const std::map<std::string, Skill, ItemIdLess>& optimized,
                             std::span<const TransferTarget> targets, ChatProvider& provider,
                             RubricCache& cache);

struct TransferSummary {
  std::size_t off_diagonal_cells = 0;
  std::optional<double> fraction_improving_vs_s0;
  std::optional<double> median_gain_vs_s0;
  std::optional<double> fraction_matching_best;
  std::optional<double> median_gain_vs_expert;
};

void to_json(json& j, const TransferSummary& value);

/// Lower median: element (n-1)/2 of the sorted values.
std::optional<double> lower_median(std::vector<double> values);

/// Aggregates over off-diagonal cells; unavailable gains drop out of the
/// aggregate they belong to. Throws InvalidArgument with no off-diagonal cells.
TransferSummary aggregate_transfer(const TransferGrid& grid);

struct TransferGroup {
  ScaffoldVariant variant = ScaffoldVariant::weak;
  std::uint64_t seed = 0;
  TransferGrid grid;
  TransferSummary summary;
};

struct EvaluationResults {
  std::vector<ConditionResult> conditions;
  std::vector<TransferGroup> transfers;
};

/// Writes conditions.csv, records/*.jsonl, summary.json and, per transfer
/// group, transfer/<variant>_seed<seed>/transfer_gain_vs_{s0,expert,best}.csv.
void emit_report(const EvaluationResults& results, const std::filesystem::path& out_dir);

/// CSV text of one transfer gain grid; diagonal cells carry a trailing '*'.
enum class GainBaseline { s0, expert, best };
std::string transfer_csv(const TransferGrid& grid, GainBaseline baseline);
std::string conditions_csv(std::span<const ConditionResult> results);

}  // namespace skillopt
