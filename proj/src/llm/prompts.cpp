#include "skillopt/llm/prompts.hpp"

#include <algorithm>
#include <vector>

#include <fmt/format.h>

#include "skillopt/errors.hpp"
#include "skillopt/llm/assets.hpp"

namespace skillopt {

std::string fill_template(std::string_view tmpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) break;
    const auto name = tmpl.substr(open + 1, close - open - 1);
    const auto hit = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
    out.append(tmpl.substr(pos, open - pos));
    if (hit != values.end()) {
      out.append(hit->second);
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  out.append(tmpl.substr(pos));
  return out;
}

namespace {

ChatRequest single_user_message(std::string content, std::optional<double> temperature) {
  ChatRequest request;
  request.messages.push_back(ChatMessage{ChatRole::user, std::move(content)});
  request.temperature = temperature;
  return request;
}

constexpr std::string_view kRubricBlock = "SCORING RUBRIC:\n{rubric}\n\n";

}  // namespace

ChatRequest render_rubric_prompt(std::string_view skill_text, const Item& item) {
  if (skill_text.empty()) throw InvalidArgument("rubric prompt needs a non-empty skill");
  return single_user_message(
      fill_template(assets::rubric_generation_template(), {{"skill", skill_text}, {"question", item.stem_text}}),
      0.0);
}

ChatRequest render_scoring_prompt(const Rubric& rubric, const Item& item, std::string_view response_text) {
  if (rubric.text.empty()) throw InvalidArgument("scoring prompt needs a non-empty rubric");
  return single_user_message(fill_template(assets::scoring_template(), {{"question", item.stem_text},
                                                                       {"rubric", rubric.text},
                                                                       {"response", response_text}}),
                             0.0);
}

ChatRequest render_no_rubric_prompt(const Item& item, std::string_view response_text) {
  std::string tmpl(assets::scoring_template());
  const auto block = tmpl.find(kRubricBlock);
  if (block == std::string::npos) throw Error("scoring template lacks the rubric section");
  tmpl.erase(block, kRubricBlock.size());
  return single_user_message(fill_template(tmpl, {{"question", item.stem_text}, {"response", response_text}}), 0.0);
}

std::string render_error_stats(const ErrorStats& stats) {
  std::vector<std::pair<std::pair<int, int>, std::int64_t>> pairs(stats.per_pair.begin(), stats.per_pair.end());
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::string out = fmt::format("Accuracy: {:.4f} ({} of {} exact)\n", stats.accuracy, stats.exact_count,
                                stats.total());
  out += fmt::format("Over-scored (predicted > human): {}\n", stats.over_count);
  out += fmt::format("Under-scored (predicted < human): {}\n", stats.under_count);
  out += fmt::format("Exact: {}\n", stats.exact_count);
  out += "Confusion patterns (human -> predicted):";
  for (const auto& [key, count] : pairs) {
    out += fmt::format("\nhuman {} -> predicted {}: {}", key.first, key.second, count);
  }
  return out;
}

std::string render_error_cases(std::span<const ErrorCase> cases) {
  std::string out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    if (i > 0) out += "\n\n";
    out += fmt::format("Case {}\nResponse: {}\nHuman score: {}\nPredicted score: {}\nJustification: {}", i + 1,
                       c.response_text, c.human, c.predicted, c.justification);
  }
  return out;
}

ChatRequest render_diagnosis_prompt(std::string_view skill_text, std::string_view rubric_text,
                                    const ErrorStats& stats, std::span<const ErrorCase> cases) {
  if (cases.empty()) throw InvalidArgument("diagnosis prompt needs at least one error case");
  const auto stats_text = render_error_stats(stats);
  const auto cases_text = render_error_cases(cases);
  return single_user_message(fill_template(assets::diagnosis_template(), {{"skill", skill_text},
                                                                         {"rubric", rubric_text},
                                                                         {"error_stats", stats_text},
                                                                         {"all_errors", cases_text}}),
                             std::nullopt);
}

std::size_t estimate_tokens(const ChatRequest& request) {
  std::size_t bytes = 0;
  for (const auto& m : request.messages) bytes += m.content.size();
  return (bytes + 3) / 4;
}

}  // namespace skillopt
