#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "skillopt/core.hpp"
#include "skillopt/metrics.hpp"

namespace skillopt {

using json = nlohmann::json;

void to_json(json& j, const ScoreScale& value);
void from_json(const json& j, ScoreScale& value);
void to_json(json& j, const Item& value);
void from_json(const json& j, Item& value);
void to_json(json& j, const LabeledResponse& value);
void from_json(const json& j, LabeledResponse& value);
void to_json(json& j, const Skill& value);
void from_json(const json& j, Skill& value);
void to_json(json& j, const Rubric& value);
void from_json(const json& j, Rubric& value);
void to_json(json& j, const ScoreRecord& value);
void from_json(const json& j, ScoreRecord& value);
void to_json(json& j, const ConfusionMatrix& value);
void from_json(const json& j, ConfusionMatrix& value);
void to_json(json& j, const ErrorStats& value);
void from_json(const json& j, ErrorStats& value);

/// One compact JSON object per line.
template <typename T>
std::string to_jsonl(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) {
    out += json(v).dump();
    out += '\n';
  }
  return out;
}

template <typename T>
std::vector<T> from_jsonl(std::string_view text) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (!line.empty()) out.push_back(json::parse(line).get<T>());
    pos = end + 1;
  }
  return out;
}

/// Pretty JSON with a trailing newline; key order is sorted, so equal values
/// give identical bytes.
std::string dump_stable(const json& value);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace skillopt
