#include "skillopt/optimizer.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "skillopt/errors.hpp"
#include "skillopt/hash.hpp"
#include "skillopt/llm/assets.hpp"
#include "skillopt/llm/extract.hpp"
#include "skillopt/llm/prompts.hpp"
#include "skillopt/llm/scoring.hpp"
#include "skillopt/prng.hpp"
#include "skillopt/run_store.hpp"

namespace skillopt {

std::string_view to_string(IterationOutcome outcome) {
  switch (outcome) {
    case IterationOutcome::accepted: return "accepted";
    case IterationOutcome::rejected_no_improvement: return "rejected_no_improvement";
    case IterationOutcome::rejected_no_errors: return "rejected_no_errors";
    case IterationOutcome::rejected_content_leak: return "rejected_content_leak";
    case IterationOutcome::rejected_invalid_delta: return "rejected_invalid_delta";
    case IterationOutcome::rejected_degenerate: return "rejected_degenerate";
  }
  return "rejected_no_improvement";
}

IterationOutcome parse_iteration_outcome(std::string_view text) {
  for (const auto o : {IterationOutcome::accepted, IterationOutcome::rejected_no_improvement,
                       IterationOutcome::rejected_no_errors, IterationOutcome::rejected_content_leak,
                       IterationOutcome::rejected_invalid_delta, IterationOutcome::rejected_degenerate}) {
    if (to_string(o) == text) return o;
  }
  throw InvalidArgument(fmt::format("unknown iteration outcome '{}'", text));
}

std::string_view to_string(TerminationReason reason) {
  return reason == TerminationReason::early_stop ? "early_stop" : "batches_exhausted";
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(json& j, const IterationRecord& v) {
  j = json{{"iteration", v.iteration},
           {"batch_index", v.batch_index},
           {"rubric", v.rubric},
           {"batch_qwk", optional_number(v.batch_qwk)},
           {"stats", v.stats},
           {"fallback_rate", v.fallback_rate},
           {"candidate_delta", v.candidate_delta},
           {"candidate_rubric", v.candidate_rubric ? json(*v.candidate_rubric) : json(nullptr)},
           {"candidate_val_qwk", optional_number(v.candidate_val_qwk)},
           {"candidate_fallback_rate", v.candidate_fallback_rate},
           {"accepted", v.accepted},
           {"outcome", std::string(to_string(v.outcome))},
           {"leak_violations", v.leak_violations},
           {"augmentation_header_missing", v.augmentation_header_missing},
           {"error_cases_sent", v.error_cases_sent},
           {"error_cases_truncated", v.error_cases_truncated},
           {"qwk_best_val_after", v.qwk_best_val_after}};
}

void from_json(const json& j, IterationRecord& v) {
  v.iteration = j.at("iteration").get<int>();
  v.batch_index = j.at("batch_index").get<std::size_t>();
  v.rubric = j.at("rubric").get<Rubric>();
  v.batch_qwk = read_optional_number(j, "batch_qwk");
  v.stats = j.at("stats").get<ErrorStats>();
  v.fallback_rate = j.at("fallback_rate").get<double>();
  v.candidate_delta = j.at("candidate_delta").get<std::string>();
  v.candidate_rubric.reset();
  if (!j.at("candidate_rubric").is_null()) v.candidate_rubric = j.at("candidate_rubric").get<Rubric>();
  v.candidate_val_qwk = read_optional_number(j, "candidate_val_qwk");
  v.candidate_fallback_rate = j.at("candidate_fallback_rate").get<double>();
  v.accepted = j.at("accepted").get<bool>();
  v.outcome = parse_iteration_outcome(j.at("outcome").get<std::string>());
  v.leak_violations = j.at("leak_violations").get<std::vector<std::string>>();
  v.augmentation_header_missing = j.at("augmentation_header_missing").get<bool>();
  v.error_cases_sent = j.at("error_cases_sent").get<std::size_t>();
  v.error_cases_truncated = j.at("error_cases_truncated").get<std::size_t>();
  v.qwk_best_val_after = j.at("qwk_best_val_after").get<double>();
}

void to_json(json& j, const RunState& v) {
  j = json{{"item_id", v.item_id},
           {"skill_best", v.skill_best},
           {"qwk_best_val", v.qwk_best_val},
           {"failure_counter", v.failure_counter},
           {"batch_cursor", v.batch_cursor},
           {"iteration", v.iteration},
           {"history", v.history},
           {"rng_seed", v.rng_seed},
           {"config_snapshot", v.config_snapshot},
           {"config_hash", v.config_hash},
           {"initial_rubric", v.initial_rubric},
           {"initial_qwk_val", v.initial_qwk_val}};
}

void from_json(const json& j, RunState& v) {
  v.item_id = j.at("item_id").get<std::string>();
  v.skill_best = j.at("skill_best").get<Skill>();
  v.qwk_best_val = j.at("qwk_best_val").get<double>();
  v.failure_counter = j.at("failure_counter").get<int>();
  v.batch_cursor = j.at("batch_cursor").get<std::size_t>();
  v.iteration = j.at("iteration").get<int>();
  v.history = j.at("history").get<std::vector<IterationRecord>>();
  v.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  v.config_snapshot = j.at("config_snapshot");
  v.config_hash = j.at("config_hash").get<std::string>();
  v.initial_rubric = j.at("initial_rubric").get<Rubric>();
  v.initial_qwk_val = j.at("initial_qwk_val").get<double>();
}

void to_json(json& j, const RunSummary& v) {
  j = json{{"item_id", v.item_id},
           {"variant", v.variant},
           {"seed", v.seed},
           {"termination_reason", std::string(to_string(v.termination_reason))},
           {"iterations", v.iterations},
           {"accepted_versions", v.accepted_versions},
           {"initial_qwk_val", v.initial_qwk_val},
           {"final_qwk_best_val", v.final_qwk_best_val},
           {"final_delta_sha256", v.final_delta_sha256},
           {"config_hash", v.config_hash}};
}

void from_json(const json& j, RunSummary& v) {
  v.item_id = j.at("item_id").get<std::string>();
  v.variant = j.at("variant").get<std::string>();
  v.seed = j.at("seed").get<std::uint64_t>();
  const auto reason = j.at("termination_reason").get<std::string>();
  if (reason == "early_stop") {
    v.termination_reason = TerminationReason::early_stop;
  } else if (reason == "batches_exhausted") {
    v.termination_reason = TerminationReason::batches_exhausted;
  } else {
    throw InvalidArgument(fmt::format("unknown termination reason '{}'", reason));
  }
  v.iterations = j.at("iterations").get<int>();
  v.accepted_versions = j.at("accepted_versions").get<int>();
  v.initial_qwk_val = j.at("initial_qwk_val").get<double>();
  v.final_qwk_best_val = j.at("final_qwk_best_val").get<double>();
  v.final_delta_sha256 = j.at("final_delta_sha256").get<std::string>();
  v.config_hash = j.at("config_hash").get<std::string>();
}

std::string config_hash(const json& config_snapshot) { return sha256_hex(config_snapshot.dump()); }

namespace {

ScoringPolicy scoring_policy(const OptimizerContext& ctx) {
  return ScoringPolicy{ctx.config.scoring_attempts, modal_score(ctx.split.train, ctx.item.scale)};
}

std::optional<double> try_qwk(std::span<const LabeledResponse> responses, std::span<const ScoreRecord> records,
                              const ScoreScale& scale) {
  try {
    return qwk(human_scores(responses), predicted_scores(records), scale);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

json run_manifest(const RunState& state) {
  return json{{"item_id", state.item_id},
              {"variant", std::string(to_string(state.skill_best.variant))},
              {"seed", state.rng_seed},
              {"config", state.config_snapshot},
              {"config_hash", state.config_hash},
              {"prng", std::string(SplitMix64::kName)},
              {"scaffold_sha256", sha256_hex(state.skill_best.scaffold)},
              {"template_sha256",
               {{"rubric_generation", sha256_hex(assets::rubric_generation_template())},
                {"scoring", sha256_hex(assets::scoring_template())},
                {"diagnosis", sha256_hex(assets::diagnosis_template())}}}};
}

/// Re-prompt text listing the terms a candidate must drop. Goes right
/// before the closing output header so that header stays last.
ChatRequest with_leak_reminder(ChatRequest request, const std::vector<std::string>& terms) {
  auto& content = request.messages.back().content;
  const auto reminder = fmt::format(
      "CONSTRAINT REMINDER: your previous revision mentioned item-specific terms ({}). The revised skill must not "
      "mention these terms or any other topic or content from this specific item.\n\n",
      fmt::join(terms, ", "));
  const auto pos = content.rfind(kAugmentationOutputHeader);
  content.insert(pos == std::string::npos ? content.size() : pos, reminder);
  return request;
}

struct DiagnosisInput {
  std::vector<ErrorCase> cases;
  std::size_t truncated = 0;
};

DiagnosisInput collect_error_cases(std::span<const LabeledResponse> batch, std::span<const ScoreRecord> records,
                                   const Skill& skill, const Rubric& rubric, const ErrorStats& stats,
                                   std::size_t token_budget) {
  DiagnosisInput input;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (records[i].predicted_score == batch[i].human_score) continue;
    input.cases.push_back(
        ErrorCase{batch[i].text, records[i].predicted_score, batch[i].human_score, records[i].justification});
  }
  if (token_budget == 0) return input;
  const auto skill_text = compose_skill(skill);
  const auto fits = [&](std::span<const ErrorCase> cases) {
    return estimate_tokens(render_diagnosis_prompt(skill_text, rubric.text, stats, cases)) <= token_budget;
  };
  if (fits(input.cases)) return input;

  auto ranked = input.cases;
  std::stable_sort(ranked.begin(), ranked.end(), [](const ErrorCase& a, const ErrorCase& b) {
    return std::abs(a.human - a.predicted) > std::abs(b.human - b.predicted);
  });
  std::size_t keep = ranked.size();
  while (keep > 1 && !fits(std::span(ranked).first(keep))) --keep;
  input.truncated = ranked.size() - keep;
  ranked.resize(keep);
  input.cases = std::move(ranked);
  spdlog::warn("diagnosis prompt over budget of {} tokens: kept {} of {} error cases", token_budget, keep,
               keep + input.truncated);
  return input;
}

struct Candidate {
  std::string delta;
  bool header_missing = false;
};

Candidate request_candidate(ChatProvider& diagnoser, const ChatRequest& request) {
  const auto extracted = extract_augmentation(diagnoser.complete(request));
  if (!extracted.header_found) {
    spdlog::warn("diagnoser output lacks '{}'; treating the whole completion as the augmentation",
                 kAugmentationOutputHeader);
  }
  return Candidate{extracted.delta, !extracted.header_found};
}

bool invalid_delta(const std::string& delta) { return delta.empty() || contains_reserved_header(delta); }

}  // namespace

RunState init_run(const OptimizerContext& ctx, Skill initial_skill, std::uint64_t seed, json config_snapshot) {
  ctx.item.validate();
  initial_skill.validate();
  if (initial_skill.version != 0) throw InvalidArgument("optimization must start from a version-0 skill");
  if (ctx.batches.size() == 0) throw InvalidArgument("optimization needs at least one training batch");
  for (const auto& batch : ctx.batches.batches) {
    for (const auto idx : batch) {
      if (idx >= ctx.split.train.size()) throw InvalidArgument("batch index outside the training split");
    }
  }
  if (ctx.split.val.empty()) throw InvalidArgument("validation split is empty");

  const auto policy = scoring_policy(ctx);
  auto rubric = generate_rubric(ctx.scorer, initial_skill, ctx.item, 0);
  const auto records = score_responses(ctx.scorer, ctx.item, rubric, ctx.split.val, policy);
  const auto q = try_qwk(ctx.split.val, records, ctx.item.scale);
  if (!q) {
    throw DegenerateError(fmt::format(
        "item {}: initial validation QWK is undefined (human and predicted scores both constant over {} "
        "responses); the validation split is unusable",
        ctx.item.item_id, ctx.split.val.size()));
  }

  RunState state;
  state.item_id = ctx.item.item_id;
  state.skill_best = std::move(initial_skill);
  state.qwk_best_val = *q;
  state.rng_seed = seed;
  state.config_hash = config_hash(config_snapshot);
  state.config_snapshot = std::move(config_snapshot);
  state.initial_rubric = std::move(rubric);
  state.initial_qwk_val = *q;

  spdlog::info("item {}: initial validation QWK {:.4f} (fallback rate {:.3f})", state.item_id, *q,
               fallback_rate(records));
  if (ctx.store) {
    ctx.store->write_manifest(run_manifest(state));
    ctx.store->write_skill(state.skill_best);
    ctx.store->write_rubric(state.initial_rubric);
    ctx.store->write_checkpoint(state);
  }
  return state;
}

bool is_finished(const RunState& state, const OptimizerContext& ctx) {
  return state.batch_cursor >= ctx.batches.size() || state.failure_counter >= ctx.config.patience;
}

RunState run_iteration(const RunState& state, const OptimizerContext& ctx) {
  if (is_finished(state, ctx)) throw InvalidArgument("run_iteration called on a finished run");

  const auto& item = ctx.item;
  const auto policy = scoring_policy(ctx);
  const int t = state.iteration + 1;

  IterationRecord rec;
  rec.iteration = t;
  rec.batch_index = state.batch_cursor;

  std::vector<LabeledResponse> batch;
  for (const auto idx : ctx.batches.batches[state.batch_cursor]) batch.push_back(ctx.split.train[idx]);

  // Step 1-3: rubric from the incumbent skill, batch scoring, error statistics.
  rec.rubric = generate_rubric(ctx.scorer, state.skill_best, item, t);
  const auto records = score_responses(ctx.scorer, item, rec.rubric, batch, policy);
  rec.fallback_rate = fallback_rate(records);
  rec.stats = error_stats(batch, records, item.scale);
  rec.batch_qwk = try_qwk(batch, records, item.scale);

  std::optional<Skill> accepted_skill;
  if (rec.stats.error_ids.empty()) {
    rec.outcome = IterationOutcome::rejected_no_errors;
  } else {
    // Step 4: diagnosis over every mis-scored case.
    const auto input =
        collect_error_cases(batch, records, state.skill_best, rec.rubric, rec.stats, ctx.config.diagnosis_token_budget);
    rec.error_cases_sent = input.cases.size();
    rec.error_cases_truncated = input.truncated;
    auto request = render_diagnosis_prompt(compose_skill(state.skill_best), rec.rubric.text, rec.stats, input.cases);

    auto candidate = request_candidate(ctx.diagnoser, request);
    rec.augmentation_header_missing = candidate.header_missing;
    auto leaks = invalid_delta(candidate.delta) ? std::vector<std::string>{}
                                                : content_leak_check(candidate.delta, item);
    rec.leak_violations = leaks;
    for (int retry = 0; retry < ctx.config.leak_reprompts && !leaks.empty(); ++retry) {
      spdlog::info("item {} iteration {}: candidate leaks item terms ({}), re-prompting", item.item_id, t,
                   fmt::join(leaks, ", "));
      candidate = request_candidate(ctx.diagnoser, with_leak_reminder(request, leaks));
      rec.augmentation_header_missing = rec.augmentation_header_missing || candidate.header_missing;
      leaks = invalid_delta(candidate.delta) ? std::vector<std::string>{}
                                             : content_leak_check(candidate.delta, item);
      for (const auto& term : leaks) {
        if (std::find(rec.leak_violations.begin(), rec.leak_violations.end(), term) == rec.leak_violations.end()) {
          rec.leak_violations.push_back(term);
        }
      }
    }
    rec.candidate_delta = candidate.delta;

    if (invalid_delta(candidate.delta)) {
      rec.outcome = IterationOutcome::rejected_invalid_delta;
    } else if (!leaks.empty()) {
      rec.outcome = IterationOutcome::rejected_content_leak;
    } else {
      // Step 5: validation gate, strict improvement only.
      auto cand_skill = state.skill_best.with_delta(candidate.delta);
      rec.candidate_rubric = generate_rubric(ctx.scorer, cand_skill, item, t);
      const auto val_records = score_responses(ctx.scorer, item, rec.candidate_rubric, ctx.split.val, policy);
      rec.candidate_fallback_rate = fallback_rate(val_records);
      rec.candidate_val_qwk = try_qwk(ctx.split.val, val_records, item.scale);
      if (!rec.candidate_val_qwk) {
        rec.outcome = IterationOutcome::rejected_degenerate;
      } else if (*rec.candidate_val_qwk > state.qwk_best_val) {
        rec.outcome = IterationOutcome::accepted;
        accepted_skill = std::move(cand_skill);
      } else {
        rec.outcome = IterationOutcome::rejected_no_improvement;
      }
    }
  }

  RunState next = state;
  rec.accepted = accepted_skill.has_value();
  if (accepted_skill) {
    next.skill_best = std::move(*accepted_skill);
    next.qwk_best_val = *rec.candidate_val_qwk;
    next.failure_counter = 0;
  } else {
    ++next.failure_counter;
  }
  rec.qwk_best_val_after = next.qwk_best_val;
  next.iteration = t;
  next.batch_cursor = state.batch_cursor + 1;

  spdlog::info("item {} iteration {}: batch QWK {}, candidate val QWK {}, {} (best {:.4f}, failures {})",
               item.item_id, t, rec.batch_qwk ? fmt::format("{:.4f}", *rec.batch_qwk) : "n/a",
               rec.candidate_val_qwk ? fmt::format("{:.4f}", *rec.candidate_val_qwk) : "n/a", to_string(rec.outcome),
               next.qwk_best_val, next.failure_counter);

  next.history.push_back(std::move(rec));
  if (ctx.store) {
    const auto& last = next.history.back();
    ctx.store->write_rubric(last.rubric);
    ctx.store->write_report(last);
    if (last.accepted) ctx.store->write_skill(next.skill_best);
    ctx.store->write_checkpoint(next);  // commit point
  }
  return next;
}

RunSummary summarize(const RunState& state, const OptimizerContext& ctx) {
  RunSummary s;
  s.item_id = state.item_id;
  s.variant = std::string(to_string(state.skill_best.variant));
  s.seed = state.rng_seed;
  s.termination_reason = state.failure_counter >= ctx.config.patience ? TerminationReason::early_stop
                                                                      : TerminationReason::batches_exhausted;
  s.iterations = state.iteration;
  s.accepted_versions = state.skill_best.version;
  s.initial_qwk_val = state.initial_qwk_val;
  s.final_qwk_best_val = state.qwk_best_val;
  s.final_delta_sha256 = sha256_hex(state.skill_best.delta);
  s.config_hash = state.config_hash;
  return s;
}

RunState run_loop(RunState state, const OptimizerContext& ctx) {
  while (!is_finished(state, ctx)) state = run_iteration(state, ctx);
  const auto summary = summarize(state, ctx);
  spdlog::info("item {}: finished after {} iteration(s) ({}), {} accepted version(s), best validation QWK {:.4f}",
               summary.item_id, summary.iterations, to_string(summary.termination_reason),
               summary.accepted_versions, summary.final_qwk_best_val);
  if (ctx.store) ctx.store->write_summary(summary);
  return state;
}

RunState resume_run(const std::filesystem::path& run_dir, const std::optional<std::string>& expected_config_hash) {
  if (!std::filesystem::is_directory(run_dir)) {
    throw CheckpointError(fmt::format("run directory {} does not exist", run_dir.string()));
  }
  RunStore store(run_dir);
  auto state = store.latest_checkpoint();
  if (!state) {
    std::vector<std::string> found;
    for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
      found.push_back(entry.path().filename().string());
    }
    std::sort(found.begin(), found.end());
    throw CheckpointError(fmt::format("no checkpoint in {}; found: [{}]", run_dir.string(), fmt::join(found, ", ")));
  }
  if (state->config_hash != config_hash(state->config_snapshot)) {
    throw CheckpointError(fmt::format("checkpoint in {} is corrupt: config hash does not match its snapshot",
                                      run_dir.string()));
  }
  if (expected_config_hash && *expected_config_hash != state->config_hash) {
    throw CheckpointError(fmt::format("config drift: run {} was started with config {} but the current config is {}",
                                      run_dir.string(), state->config_hash, *expected_config_hash));
  }
  return std::move(*state);
}

}  // namespace skillopt
