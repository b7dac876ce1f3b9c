#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace skillopt {

/// Discrete ordinal score range {min_score, ..., max_score}.
struct ScoreScale {
  int min_score = 0;
  int max_score = 1;

  /// Throws InvalidArgument unless min_score < max_score.
  static ScoreScale make(int min_score, int max_score);

  [[nodiscard]] int levels() const { return max_score - min_score + 1; }
  [[nodiscard]] bool contains(int score) const { return score >= min_score && score <= max_score; }
  [[nodiscard]] int clamp(int score) const;
  /// Zero-based level index of a score inside the scale.
  [[nodiscard]] int index_of(int score) const { return score - min_score; }

  friend bool operator==(const ScoreScale&, const ScoreScale&) = default;
};

struct Item {
  std::string item_id;
  std::string stem_text;
  ScoreScale scale;
  std::optional<std::string> expert_rubric;

  void validate() const;
  friend bool operator==(const Item&, const Item&) = default;
};

struct LabeledResponse {
  std::string response_id;
  std::string item_id;
  std::string text;
  int human_score = 0;

  friend bool operator==(const LabeledResponse&, const LabeledResponse&) = default;
};

enum class ScaffoldVariant { weak, medium, strong, custom };

std::string_view to_string(ScaffoldVariant variant);
/// Accepts "weak", "medium", "strong", "custom"; throws ConfigError otherwise.
ScaffoldVariant parse_variant(std::string_view text);

/// A rubric-construction skill: fixed scaffold plus learned augmentation.
/// Version 0 is the bare scaffold; every accepted augmentation bumps it.
struct Skill {
  std::string scaffold;
  std::string delta;
  ScaffoldVariant variant = ScaffoldVariant::custom;
  int version = 0;

  static Skill initial(std::string scaffold, ScaffoldVariant variant);
  /// The next version carrying `delta` in place of the current augmentation.
  [[nodiscard]] Skill with_delta(std::string delta) const;

  void validate() const;
  friend bool operator==(const Skill&, const Skill&) = default;
};

struct Rubric {
  std::string item_id;
  std::string text;
  int produced_by_skill_version = 0;
  int iteration = 0;

  friend bool operator==(const Rubric&, const Rubric&) = default;
};

enum class ParseStatus { ok, clamped, fallback };

std::string_view to_string(ParseStatus status);
ParseStatus parse_parse_status(std::string_view text);

struct ScoreRecord {
  std::string response_id;
  int predicted_score = 0;
  std::string justification;
  ParseStatus parse_status = ParseStatus::ok;
  std::string raw_completion;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

/// Line separating the scaffold from the learned rules in a composed skill.
/// Reserved: input data and diagnoser output must never contain it.
inline constexpr std::string_view kAugmentationHeader = "LEARNED RUBRIC CONSTRUCTION RULES:";

[[nodiscard]] bool contains_reserved_header(std::string_view text);

/// scaffold, or scaffold + "\n\n" + header + "\n\n" + delta when delta is set.
[[nodiscard]] std::string compose_skill(const Skill& skill);
[[nodiscard]] std::string compose_skill(std::string_view scaffold, std::string_view delta);

/// Inverse of compose_skill for texts whose parts do not contain the header.
[[nodiscard]] std::pair<std::string, std::string> split_composed_skill(std::string_view composed);

}  // namespace skillopt
