#include "skillopt/core.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "skillopt/errors.hpp"

namespace skillopt {

ScoreScale ScoreScale::make(int min_score, int max_score) {
  if (min_score >= max_score) {
    throw InvalidArgument(fmt::format("score scale needs min < max, got {}..{}", min_score, max_score));
  }
  return ScoreScale{min_score, max_score};
}

int ScoreScale::clamp(int score) const { return std::clamp(score, min_score, max_score); }

void Item::validate() const {
  if (item_id.empty()) throw InvalidArgument("item_id must not be empty");
  if (stem_text.empty()) throw InvalidArgument(fmt::format("item {}: stem text must not be empty", item_id));
  ScoreScale::make(scale.min_score, scale.max_score);
}

std::string_view to_string(ScaffoldVariant variant) {
  switch (variant) {
    case ScaffoldVariant::weak: return "weak";
    case ScaffoldVariant::medium: return "medium";
    case ScaffoldVariant::strong: return "strong";
    case ScaffoldVariant::custom: return "custom";
  }
  return "custom";
}

ScaffoldVariant parse_variant(std::string_view text) {
  if (text == "weak") return ScaffoldVariant::weak;
  if (text == "medium") return ScaffoldVariant::medium;
  if (text == "strong") return ScaffoldVariant::strong;
  if (text == "custom") return ScaffoldVariant::custom;
  throw ConfigError(fmt::format("unknown scaffold variant '{}' (expected weak|medium|strong)", text));
}

Skill Skill::initial(std::string scaffold, ScaffoldVariant variant) {
  Skill skill{std::move(scaffold), {}, variant, 0};
  skill.validate();
  return skill;
}

Skill Skill::with_delta(std::string new_delta) const {
  Skill next{scaffold, std::move(new_delta), variant, version + 1};
  next.validate();
  return next;
}

void Skill::validate() const {
  if (scaffold.empty()) throw InvalidArgument("skill scaffold must not be empty");
  if (version < 0) throw InvalidArgument("skill version must be non-negative");
  if ((version == 0) != delta.empty()) {
    throw InvalidArgument(fmt::format("skill version {} inconsistent with {} delta", version,
                                      delta.empty() ? "an empty" : "a non-empty"));
  }
  if (contains_reserved_header(scaffold) || contains_reserved_header(delta)) {
    throw InvalidArgument("skill text contains the reserved augmentation header");
  }
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::clamped: return "clamped";
    case ParseStatus::fallback: return "fallback";
  }
  return "ok";
}

ParseStatus parse_parse_status(std::string_view text) {
  if (text == "ok") return ParseStatus::ok;
  if (text == "clamped") return ParseStatus::clamped;
  if (text == "fallback") return ParseStatus::fallback;
  throw InvalidArgument(fmt::format("unknown parse status '{}'", text));
}

bool contains_reserved_header(std::string_view text) {
  return text.find(kAugmentationHeader) != std::string_view::npos;
}

namespace {
std::string separator() { return fmt::format("\n\n{}\n\n", kAugmentationHeader); }
}  // namespace

std::string compose_skill(std::string_view scaffold, std::string_view delta) {
  if (delta.empty()) return std::string(scaffold);
  std::string out;
  out.reserve(scaffold.size() + delta.size() + kAugmentationHeader.size() + 4);
  out.append(scaffold);
  out.append(separator());
  out.append(delta);
  return out;
}

std::string compose_skill(const Skill& skill) { return compose_skill(skill.scaffold, skill.delta); }

std::pair<std::string, std::string> split_composed_skill(std::string_view composed) {
  // The scaffold never contains the header, so its first occurrence is ours.
  const auto sep = separator();
  const auto pos = composed.find(sep);
  if (pos == std::string_view::npos) return {std::string(composed), std::string()};
  return {std::string(composed.substr(0, pos)), std::string(composed.substr(pos + sep.size()))};
}

}  // namespace skillopt
