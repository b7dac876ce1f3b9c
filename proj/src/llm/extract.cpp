#include "skillopt/llm/extract.hpp"

#include <limits>

namespace skillopt {

std::string_view to_string(ExtractStatus status) {
  switch (status) {
    case ExtractStatus::ok: return "ok";
    case ExtractStatus::clamped: return "clamped";
    case ExtractStatus::failed: return "failed";
  }
  return "failed";
}

std::string trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return std::string(text.substr(first, last - first + 1));
}

ExtractedScore extract_score(std::string_view completion, const ScoreScale& scale) {
  // Scan backwards for "[[" digits "]]".
  std::size_t search_end = completion.size();
  while (search_end >= 2) {
    const auto open = completion.rfind("[[", search_end - 2);
    if (open == std::string_view::npos) break;
    std::size_t i = open + 2;
    long long value = 0;
    bool saturated = false;
    while (i < completion.size() && completion[i] >= '0' && completion[i] <= '9') {
      if (value > std::numeric_limits<int>::max() / 10) saturated = true;
      if (!saturated) value = value * 10 + (completion[i] - '0');
      ++i;
    }
    const bool has_digits = i > open + 2;
    if (has_digits && completion.substr(i, 2) == "]]") {
      ExtractedScore out;
      out.justification = trim(completion.substr(0, open));
      const int raw = saturated || value > std::numeric_limits<int>::max() ? std::numeric_limits<int>::max()
                                                                          : static_cast<int>(value);
      out.score = scale.clamp(raw);
      out.status = scale.contains(raw) ? ExtractStatus::ok : ExtractStatus::clamped;
      return out;
    }
    if (open == 0) break;
    search_end = open + 1;
  }
  return ExtractedScore{std::nullopt, trim(completion), ExtractStatus::failed};
}

ExtractedAugmentation extract_augmentation(std::string_view completion) {
  const auto pos = completion.rfind(kAugmentationOutputHeader);
  if (pos == std::string_view::npos) return {trim(completion), false};
  return {trim(completion.substr(pos + kAugmentationOutputHeader.size())), true};
}

}  // namespace skillopt
