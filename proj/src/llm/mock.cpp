#include "skillopt/llm/mock.hpp"

#include <fmt/format.h>

#include "json.hpp"
#include "skillopt/errors.hpp"
#include "skillopt/hash.hpp"
#include "skillopt/llm/extract.hpp"
#include "skillopt/prng.hpp"
#include "skillopt/serialization.hpp"

namespace skillopt {

namespace {

constexpr std::string_view kRubricPhrase = "Based on the following test item, generate a scoring rubric.";
constexpr std::string_view kResponseHeader = "STUDENT RESPONSE:\n";
constexpr std::string_view kResponseFooter = "\n\nScore this response";

MockCondition parse_condition(const json& j) {
  MockCondition c;
  if (j.contains("contains_all")) c.contains_all = j.at("contains_all").get<std::vector<std::string>>();
  if (j.contains("contains_none")) c.contains_none = j.at("contains_none").get<std::vector<std::string>>();
  return c;
}

MockScoreAction parse_action(std::string_view name) {
  if (name == "label") return MockScoreAction::label;
  if (name == "constant") return MockScoreAction::constant;
  if (name == "label_fraction") return MockScoreAction::label_fraction;
  if (name == "raw") return MockScoreAction::raw;
  throw ConfigError(fmt::format("mock script: unknown scoring action '{}'", name));
}

/// The student response section of a scoring prompt.
std::string_view response_section(std::string_view text) {
  const auto start = text.rfind(kResponseHeader);
  if (start == std::string_view::npos) return text;
  const auto body = text.substr(start + kResponseHeader.size());
  const auto end = body.rfind(kResponseFooter);
  return end == std::string_view::npos ? body : body.substr(0, end);
}

}  // namespace

RequestKind classify_request(std::string_view text) {
  if (text.find(kAugmentationOutputHeader) != std::string_view::npos &&
      text.find("ALL ERROR CASES:") != std::string_view::npos) {
    return RequestKind::diagnosis;
  }
  if (text.find(kResponseHeader) != std::string_view::npos &&
      text.find("double square brackets") != std::string_view::npos) {
    return RequestKind::scoring;
  }
  if (text.find(kRubricPhrase) != std::string_view::npos) return RequestKind::rubric_generation;
  return RequestKind::unknown;
}

bool MockCondition::matches(std::string_view text) const {
  for (const auto& s : contains_all) {
    if (text.find(s) == std::string_view::npos) return false;
  }
  for (const auto& s : contains_none) {
    if (text.find(s) != std::string_view::npos) return false;
  }
  return true;
}

MockScript MockScript::parse(std::string_view json_text) {
  MockScript script;
  try {
    const auto doc = json::parse(json_text);
    if (doc.contains("label_pattern")) script.label_pattern = doc.at("label_pattern").get<std::string>();
    if (doc.contains("markers")) script.markers = doc.at("markers").get<std::vector<std::string>>();
    if (doc.contains("by_hash")) script.by_hash = doc.at("by_hash").get<std::map<std::string, std::string>>();
    for (const auto& r : doc.value("rubric", json::array())) {
      script.rubric.push_back(MockRubricRule{parse_condition(r), r.at("text").get<std::string>()});
    }
    for (const auto& r : doc.value("scoring", json::array())) {
      MockScoringRule rule;
      rule.when = parse_condition(r);
      rule.action = parse_action(r.value("action", std::string("label")));
      rule.value = r.value("value", 0);
      rule.fraction = r.value("fraction", 1.0);
      rule.text = r.value("text", std::string());
      if (rule.fraction < 0.0 || rule.fraction > 1.0) throw ConfigError("mock script: fraction outside [0, 1]");
      script.scoring.push_back(std::move(rule));
    }
    for (const auto& r : doc.value("diagnosis", json::array())) {
      script.diagnosis.push_back(
          MockDiagnosisRule{parse_condition(r), r.at("delta").get<std::string>(), r.value("with_header", true)});
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("mock script: {}", e.what()));
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError(fmt::format("mock script {} not found", path.string()));
  return parse(read_text_file(path));
}

MockProvider::MockProvider(MockScript script, int parallelism)
    : script_(std::move(script)), parallelism_(std::max(1, parallelism)) {
  try {
    label_regex_ = std::regex(script_.label_pattern);
  } catch (const std::regex_error& e) {
    throw ConfigError(fmt::format("mock script: bad label_pattern: {}", e.what()));
  }
}

std::string MockProvider::do_complete(const ChatRequest& request) {
  ++calls_;
  const auto text = request.text();
  if (!script_.by_hash.empty()) {
    if (auto it = script_.by_hash.find(sha256_hex(text)); it != script_.by_hash.end()) return it->second;
  }
  switch (classify_request(text)) {
    case RequestKind::rubric_generation: return answer_rubric(text);
    case RequestKind::scoring: return answer_scoring(text);
    case RequestKind::diagnosis: return answer_diagnosis(text);
    case RequestKind::unknown: break;
  }
  throw ProviderError("mock: request matches no known prompt shape");
}

std::string MockProvider::answer_rubric(const std::string& text) const {
  for (const auto& rule : script_.rubric) {
    if (!rule.when.matches(text)) continue;
    std::string out = rule.text;
    for (const auto& marker : script_.markers) {
      if (text.find(marker) != std::string::npos) out += "\n" + marker;
    }
    return out;
  }
  throw ProviderError("mock: no rubric rule matches the request");
}

std::string MockProvider::answer_scoring(const std::string& text) const {
  const auto section = response_section(text);
  const auto hidden_label = [&]() -> int {
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(section.begin(), section.end(), m, label_regex_) || m.size() < 2) {
      throw ProviderError("mock: scoring rule needs a label but the response carries none");
    }
    return std::stoi(m[1].str());
  };
  for (const auto& rule : script_.scoring) {
    if (!rule.when.matches(text)) continue;
    int score = 0;
    switch (rule.action) {
      case MockScoreAction::raw: return rule.text;
      case MockScoreAction::label: score = hidden_label(); break;
      case MockScoreAction::constant: score = rule.value; break;
      case MockScoreAction::label_fraction: {
        const auto bucket = fnv1a64(section) % 10000;
        score = static_cast<double>(bucket) < rule.fraction * 10000.0 ? hidden_label() : rule.value;
        break;
      }
    }
    return fmt::format("Scripted assessment of the response. [[{}]]", score);
  }
  throw ProviderError("mock: no scoring rule matches the request");
}

std::string MockProvider::answer_diagnosis(const std::string& text) const {
  for (const auto& rule : script_.diagnosis) {
    if (!rule.when.matches(text)) continue;
    if (!rule.with_header) return rule.delta;
    return fmt::format("Scripted analysis of the error clusters.\n\n{}\n{}", kAugmentationOutputHeader, rule.delta);
  }
  throw ProviderError("mock: no diagnosis rule matches the request");
}

}  // namespace skillopt
