#include "skillopt/cli/commands.hpp"

namespace skillopt::cli {

std::string_view run_layout_readme() {
  return R"(# Run directory

Written by `skillopt optimize`. All JSON is UTF-8 with snake_case keys.

| Path | Contents |
|------|----------|
| manifest.json | item_id, variant, seed, config snapshot and its sha256 (config_hash), prng name, sha256 of the scaffold and of each prompt template |
| checkpoints/iter_NNN.json | full run state after iteration NNN (iter_000 is the scored scaffold) |
| skills/vK.txt | composed skill text of version K: the scaffold, then, for K > 0, a blank line, the line `LEARNED RUBRIC CONSTRUCTION RULES:`, a blank line and the learned rules |
| rubrics/iter_NNN.txt | rubric generated from the incumbent skill at iteration NNN |
| reports/iter_NNN.json | the iteration record of iteration NNN |
| summary.json | final outcome, written once the run terminates |

A checkpoint is written last in every iteration, so the highest-numbered
checkpoint always describes a fully persisted state. `optimize --resume`
continues from it and refuses to do so when the config hash differs.

## Checkpoint (run state)

- item_id: string
- skill_best: {scaffold, delta, variant, version}
- qwk_best_val: number, validation QWK of skill_best
- failure_counter: consecutive rejections since the last acceptance
- batch_cursor: index of the next training batch
- iteration: number of completed iterations
- history: array of iteration records
- rng_seed: integer
- config_snapshot: object; config_hash: hex sha256 of its compact dump
- initial_rubric: rubric; initial_qwk_val: number

## Iteration record

- iteration, batch_index
- rubric: {item_id, text, produced_by_skill_version, iteration}
- batch_qwk: number or null when undefined on the batch
- stats: {accuracy, over_count, under_count, exact_count, per_pair: [{human, predicted, count}], error_indices: [response_id]}
- fallback_rate: share of batch responses scored by the fallback policy
- candidate_delta: proposed learned rules ("" when none)
- candidate_rubric: rubric or null; candidate_val_qwk: number or null; candidate_fallback_rate
- accepted: bool
- outcome: accepted | rejected_no_improvement | rejected_no_errors | rejected_content_leak | rejected_invalid_delta | rejected_degenerate
- leak_violations: item terms found in a candidate
- augmentation_header_missing: the diagnoser omitted its output header
- error_cases_sent, error_cases_truncated: error cases in the diagnosis prompt and those dropped for the token budget
- qwk_best_val_after: best validation QWK after the gate

## Summary

- item_id, variant, seed
- termination_reason: early_stop | batches_exhausted
- iterations, accepted_versions
- initial_qwk_val, final_qwk_best_val
- final_delta_sha256, config_hash
)";
}

}  // namespace skillopt::cli
