#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "skillopt/core.hpp"

namespace skillopt {

enum class ExtractStatus { ok, clamped, failed };

std::string_view to_string(ExtractStatus status);

struct ExtractedScore {
  std::optional<int> score;
  std::string justification;
  ExtractStatus status = ExtractStatus::failed;
};

/// Takes the last [[digits]] marker. Everything before it, trimmed, is the
/// justification. Out-of-scale values clamp to the nearest bound.
ExtractedScore extract_score(std::string_view completion, const ScoreScale& scale);

inline constexpr std::string_view kAugmentationOutputHeader = "UPDATED AUGMENTATION:";

struct ExtractedAugmentation {
  std::string delta;
  bool header_found = false;
};

/// Text after the last "UPDATED AUGMENTATION:" header, trimmed; the whole
/// completion when the header is absent.
ExtractedAugmentation extract_augmentation(std::string_view completion);

std::string trim(std::string_view text);

}  // namespace skillopt
