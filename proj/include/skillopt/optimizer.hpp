#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillopt/core.hpp"
#include "skillopt/dataset.hpp"
#include "skillopt/llm/provider.hpp"
#include "skillopt/metrics.hpp"
#include "skillopt/serialization.hpp"

namespace skillopt {

class RunStore;

/// Why an iteration ended the way it did.
enum class IterationOutcome {
  accepted,
  rejected_no_improvement,  // candidate validation QWK <= best
  rejected_no_errors,       // batch scored perfectly; nothing to diagnose
  rejected_content_leak,    // item terms survived the re-prompt
  rejected_invalid_delta,   // empty, or contains the reserved header
  rejected_degenerate,      // candidate validation QWK undefined
};

std::string_view to_string(IterationOutcome outcome);
IterationOutcome parse_iteration_outcome(std::string_view text);

struct IterationRecord {
  int iteration = 0;
  std::size_t batch_index = 0;
  Rubric rubric;
  std::optional<double> batch_qwk;  // nullopt: degenerate on this batch
  ErrorStats stats;
  double fallback_rate = 0.0;
  std::string candidate_delta;
  std::optional<Rubric> candidate_rubric;
  std::optional<double> candidate_val_qwk;  // nullopt: no candidate, or degenerate
  double candidate_fallback_rate = 0.0;
  bool accepted = false;
  IterationOutcome outcome = IterationOutcome::rejected_no_improvement;
  std::vector<std::string> leak_violations;
  bool augmentation_header_missing = false;
  std::size_t error_cases_sent = 0;
  std::size_t error_cases_truncated = 0;
  /// Best validation QWK once this iteration's gate has run.
  double qwk_best_val_after = 0.0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunState {
  std::string item_id;
  Skill skill_best;
  double qwk_best_val = 0.0;
  int failure_counter = 0;
  std::size_t batch_cursor = 0;
  int iteration = 0;
  std::vector<IterationRecord> history;
  std::uint64_t rng_seed = 0;
  json config_snapshot;
  std::string config_hash;
  /// Rubric from the scaffold that set the initial reference QWK.
  Rubric initial_rubric;
  double initial_qwk_val = 0.0;

  friend bool operator==(const RunState&, const RunState&) = default;
};

void to_json(json& j, const IterationRecord& value);
void from_json(const json& j, IterationRecord& value);
void to_json(json& j, const RunState& value);
void from_json(const json& j, RunState& value);

struct OptimizerConfig {
  int patience = 3;
  /// Token budget for a diagnosis prompt; 0 disables truncation.
  std::size_t diagnosis_token_budget = 0;
  /// Extra diagnosis calls allowed when a candidate leaks item terms.
  int leak_reprompts = 1;
  int scoring_attempts = 3;
};

/// Everything an optimization run reads but never changes.
struct OptimizerContext {
  const Item& item;
  const DatasetSplit& split;
  const BatchPlan& batches;
  ChatProvider& scorer;     // also generates rubrics
  ChatProvider& diagnoser;
  OptimizerConfig config;
  RunStore* store = nullptr;  // null: nothing persisted
};

/// Content words of the item stem that also occur as whole words in `delta`,
/// in order of first appearance in delta. Content words are lowercase
/// alphabetic tokens of five or more letters that are neither stopwords nor
/// assessment vocabulary.
std::vector<std::string> content_leak_check(std::string_view delta, const Item& item);

/// Hash of the canonical config snapshot; resumes compare against it.
std::string config_hash(const json& config_snapshot);

/// Scores the scaffold on validation to fix the reference QWK, then
/// checkpoints iteration 0. Throws DegenerateError if validation QWK is undefined.
RunState init_run(const OptimizerContext& ctx, Skill initial_skill, std::uint64_t seed,
                  json config_snapshot);

/// One generate / score / evaluate / diagnose / gate step on the next batch.
/// State on disk is untouched if this throws.
RunState run_iteration(const RunState& state, const OptimizerContext& ctx);

enum class TerminationReason { early_stop, batches_exhausted };
std::string_view to_string(TerminationReason reason);

[[nodiscard]] bool is_finished(const RunState& state, const OptimizerContext& ctx);

struct RunSummary {
  std::string item_id;
  std::string variant;
  std::uint64_t seed = 0;
  TerminationReason termination_reason = TerminationReason::batches_exhausted;
  int iterations = 0;
  int accepted_versions = 0;
  double initial_qwk_val = 0.0;
  double final_qwk_best_val = 0.0;
  std::string final_delta_sha256;
  std::string config_hash;
};

void to_json(json& j, const RunSummary& value);
void from_json(const json& j, RunSummary& value);

RunSummary summarize(const RunState& state, const OptimizerContext& ctx);

/// Iterates until the batches run out or failures reach patience, then
/// writes summary.json when a store is attached.
RunState run_loop(RunState state, const OptimizerContext& ctx);

/// Latest checkpoint of a run directory. With `expected_config_hash`, a
/// different recorded hash throws CheckpointError("config drift ...").
RunState resume_run(const std::filesystem::path& run_dir,
                    const std::optional<std::string>& expected_config_hash = std::nullopt);

}  // namespace skillopt
