#include "skillopt/llm/assets.hpp"

#include <fmt/format.h>

#include "skillopt/errors.hpp"

namespace skillopt::assets {

namespace {
std::string_view require(std::string_view name) {
  const auto text = embedded(name);
  if (!text) throw Error(fmt::format("built-in asset '{}' is missing", name));
  return *text;
}
}  // namespace

std::string_view scaffold(ScaffoldVariant variant) {
  switch (variant) {
    case ScaffoldVariant::weak: return require("scaffold_weak");
    case ScaffoldVariant::medium: return require("scaffold_medium");
    case ScaffoldVariant::strong: return require("scaffold_strong");
    case ScaffoldVariant::custom: break;
  }
  throw ConfigError("custom scaffolds are not built in; pass --scaffold-file");
}

std::string_view rubric_generation_template() { return require("template_rubric_generation"); }
std::string_view scoring_template() { return require("template_scoring"); }
std::string_view diagnosis_template() { return require("template_diagnosis"); }

}  // namespace skillopt::assets
