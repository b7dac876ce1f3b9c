#include "skillopt/serialization.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "skillopt/errors.hpp"

namespace skillopt {

void to_json(json& j, const ScoreScale& v) { j = json{{"min_score", v.min_score}, {"max_score", v.max_score}}; }

void from_json(const json& j, ScoreScale& v) {
  v = ScoreScale::make(j.at("min_score").get<int>(), j.at("max_score").get<int>());
}

void to_json(json& j, const Item& v) {
  j = json{{"item_id", v.item_id}, {"stem_text", v.stem_text}, {"scale", v.scale}};
  j["expert_rubric"] = v.expert_rubric ? json(*v.expert_rubric) : json(nullptr);
}

void from_json(const json& j, Item& v) {
  v.item_id = j.at("item_id").get<std::string>();
  v.stem_text = j.at("stem_text").get<std::string>();
  v.scale = j.at("scale").get<ScoreScale>();
  v.expert_rubric.reset();
  if (j.contains("expert_rubric") && !j.at("expert_rubric").is_null()) {
    v.expert_rubric = j.at("expert_rubric").get<std::string>();
  }
}

void to_json(json& j, const LabeledResponse& v) {
  j = json{{"response_id", v.response_id}, {"item_id", v.item_id}, {"text", v.text}, {"human_score", v.human_score}};
}

void from_json(const json& j, LabeledResponse& v) {
  v.response_id = j.at("response_id").get<std::string>();
  v.item_id = j.at("item_id").get<std::string>();
  v.text = j.at("text").get<std::string>();
  v.human_score = j.at("human_score").get<int>();
}

void to_json(json& j, const Skill& v) {
  j = json{{"scaffold", v.scaffold},
           {"delta", v.delta},
           {"variant_label", std::string(to_string(v.variant))},
           {"version", v.version}};
}

void from_json(const json& j, Skill& v) {
  v.scaffold = j.at("scaffold").get<std::string>();
  v.delta = j.at("delta").get<std::string>();
  v.variant = parse_variant(j.at("variant_label").get<std::string>());
  v.version = j.at("version").get<int>();
  v.validate();
}

void to_json(json& j, const Rubric& v) {
  j = json{{"item_id", v.item_id},
           {"text", v.text},
           {"produced_by_skill_version", v.produced_by_skill_version},
           {"iteration", v.iteration}};
}

void from_json(const json& j, Rubric& v) {
  v.item_id = j.at("item_id").get<std::string>();
  v.text = j.at("text").get<std::string>();
  v.produced_by_skill_version = j.at("produced_by_skill_version").get<int>();
  v.iteration = j.at("iteration").get<int>();
}

void to_json(json& j, const ScoreRecord& v) {
  j = json{{"response_id", v.response_id},
           {"predicted_score", v.predicted_score},
           {"justification", v.justification},
           {"parse_status", std::string(to_string(v.parse_status))},
           {"raw_completion", v.raw_completion}};
}

void from_json(const json& j, ScoreRecord& v) {
  v.response_id = j.at("response_id").get<std::string>();
  v.predicted_score = j.at("predicted_score").get<int>();
  v.justification = j.at("justification").get<std::string>();
  v.parse_status = parse_parse_status(j.at("parse_status").get<std::string>());
  v.raw_completion = j.at("raw_completion").get<std::string>();
}

void to_json(json& j, const ConfusionMatrix& v) { j = json{{"scale", v.scale}, {"counts", v.counts}}; }

void from_json(const json& j, ConfusionMatrix& v) {
  v.scale = j.at("scale").get<ScoreScale>();
  v.counts = j.at("counts").get<std::vector<std::vector<std::int64_t>>>();
}

void to_json(json& j, const ErrorStats& v) {
  json pairs = json::array();
  for (const auto& [key, count] : v.per_pair) {
    pairs.push_back(json{{"human", key.first}, {"predicted", key.second}, {"count", count}});
  }
  j = json{{"accuracy", v.accuracy},         {"over_count", v.over_count},
           {"under_count", v.under_count},   {"exact_count", v.exact_count},
           {"per_pair", std::move(pairs)},   {"error_indices", v.error_ids}};
}

void from_json(const json& j, ErrorStats& v) {
  v.accuracy = j.at("accuracy").get<double>();
  v.over_count = j.at("over_count").get<std::int64_t>();
  v.under_count = j.at("under_count").get<std::int64_t>();
  v.exact_count = j.at("exact_count").get<std::int64_t>();
  v.per_pair.clear();
  for (const auto& p : j.at("per_pair")) {
    v.per_pair[{p.at("human").get<int>(), p.at("predicted").get<int>()}] = p.at("count").get<std::int64_t>();
  }
  v.error_ids = j.at("error_indices").get<std::vector<std::string>>();
}

std::string dump_stable(const json& value) { return value.dump(2) + "\n"; }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(fmt::format("short write to {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
}

}  // namespace skillopt
