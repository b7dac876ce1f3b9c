#include "skillopt/llm/scoring.hpp"

#include <map>

#include <spdlog/spdlog.h>

#include "skillopt/errors.hpp"
#include "skillopt/llm/extract.hpp"
#include "skillopt/llm/prompts.hpp"
#include "skillopt/parallel.hpp"

namespace skillopt {

ScoreRecord score_with_policy(ChatProvider& provider, const ChatRequest& request, std::string response_id,
                              const ScoreScale& scale, const ScoringPolicy& policy) {
  const int attempts = std::max(1, policy.max_attempts);
  std::string last;
  for (int i = 0; i < attempts; ++i) {
    last = provider.complete(request);
    const auto parsed = extract_score(last, scale);
    if (parsed.status == ExtractStatus::failed) continue;
    return ScoreRecord{std::move(response_id), *parsed.score, parsed.justification,
                       parsed.status == ExtractStatus::ok ? ParseStatus::ok : ParseStatus::clamped, std::move(last)};
  }
  spdlog::debug("response {}: no score marker after {} attempts, using fallback {}", response_id, attempts,
                policy.fallback_score);
  return ScoreRecord{std::move(response_id), scale.clamp(policy.fallback_score), trim(last), ParseStatus::fallback,
                     std::move(last)};
}

std::vector<ScoreRecord> score_responses(ChatProvider& provider, const Item& item, const std::optional<Rubric>& rubric,
                                         std::span<const LabeledResponse> responses, const ScoringPolicy& policy) {
  std::vector<ScoreRecord> records(responses.size());
  parallel_for(responses.size(), provider.parallelism(), [&](std::size_t i) {
    const auto& r = responses[i];
    const auto request = rubric ? render_scoring_prompt(*rubric, item, r.text) : render_no_rubric_prompt(item, r.text);
    records[i] = score_with_policy(provider, request, r.response_id, item.scale, policy);
  });
  return records;
}

Rubric generate_rubric(ChatProvider& provider, const Skill& skill, const Item& item, int iteration) {
  const auto text = trim(provider.complete(render_rubric_prompt(compose_skill(skill), item)));
  return Rubric{item.item_id, text, skill.version, iteration};
}

double fallback_rate(std::span<const ScoreRecord> records) {
  if (records.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& r : records) n += r.parse_status == ParseStatus::fallback ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(records.size());
}

int modal_score(std::span<const LabeledResponse> responses, const ScoreScale& scale) {
  if (responses.empty()) throw InvalidArgument("modal score of an empty set");
  std::map<int, std::size_t> counts;
  for (const auto& r : responses) ++counts[r.human_score];
  int best = scale.min_score;
  std::size_t best_count = 0;
  for (const auto& [score, count] : counts) {
    if (count > best_count) {
      best = score;
      best_count = count;
    }
  }
  return best;
}

}  // namespace skillopt
