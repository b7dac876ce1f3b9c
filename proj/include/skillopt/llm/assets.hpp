#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "skillopt/core.hpp"

namespace skillopt::assets {

/// Raw text of a built-in asset compiled from assets/, or nullopt.
std::optional<std::string_view> embedded(std::string_view name);
std::vector<std::string_view> embedded_names();

std::string_view scaffold(ScaffoldVariant variant);
std::string_view rubric_generation_template();
std::string_view scoring_template();
std::string_view diagnosis_template();

}  // namespace skillopt::assets
