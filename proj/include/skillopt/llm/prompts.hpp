#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "skillopt/core.hpp"
#include "skillopt/llm/provider.hpp"
#include "skillopt/metrics.hpp"

namespace skillopt {

/// Replaces each `{name}` placeholder in one left-to-right pass; substituted
/// text is never rescanned, so values may themselves contain braces.
std::string fill_template(std::string_view tmpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> values);

ChatRequest render_rubric_prompt(std::string_view skill_text, const Item& item);
ChatRequest render_scoring_prompt(const Rubric& rubric, const Item& item, std::string_view response_text);
/// Scoring prompt with the rubric section removed.
ChatRequest render_no_rubric_prompt(const Item& item, std::string_view response_text);

struct ErrorCase {
  std::string response_text;
  int predicted = 0;
  int human = 0;
  std::string justification;
};

/// Accuracy, direction counts, then "human H -> predicted P: N" lines by N descending.
std::string render_error_stats(const ErrorStats& stats);
std::string render_error_cases(std::span<const ErrorCase> cases);

/// Diagnosis request; temperature is left unset. Throws InvalidArgument when
/// `cases` is empty.
ChatRequest render_diagnosis_prompt(std::string_view skill_text, std::string_view rubric_text,
                                    const ErrorStats& stats, std::span<const ErrorCase> cases);

/// Rough token estimate (4 bytes per token) used for prompt budgets.
std::size_t estimate_tokens(const ChatRequest& request);

}  // namespace skillopt
