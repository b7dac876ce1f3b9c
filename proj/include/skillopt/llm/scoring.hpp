#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skillopt/core.hpp"
#include "skillopt/llm/provider.hpp"

namespace skillopt {

/// Parse-failure handling for scorer completions: up to `max_attempts`
/// identical requests, then `fallback_score` with status fallback.
struct ScoringPolicy {
  int max_attempts = 3;
  int fallback_score = 0;
};

ScoreRecord score_with_policy(ChatProvider& provider, const ChatRequest& request,
                              std::string response_id, const ScoreScale& scale,
                              const ScoringPolicy& policy);

/// Scores every response concurrently (bounded by provider parallelism).
/// Records come back in input order. No rubric means the no-rubric prompt.
std::vector<ScoreRecord> score_responses(ChatProvider& provider, const Item& item,
                                         const std::optional<Rubric>& rubric,
                                         std::span<const LabeledResponse> responses,
                                         const ScoringPolicy& policy);

/// One rubric-generation call at temperature 0 for the composed skill.
Rubric generate_rubric(ChatProvider& provider, const Skill& skill, const Item& item, int iteration);

double fallback_rate(std::span<const ScoreRecord> records);

/// Most frequent human score; ties go to the lowest score.
int modal_score(std::span<const LabeledResponse> responses, const ScoreScale& scale);

}  // namespace skillopt
