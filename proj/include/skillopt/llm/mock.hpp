#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "skillopt/llm/provider.hpp"

namespace skillopt {

enum class RequestKind { rubric_generation, scoring, diagnosis, unknown };

/// Recognizes the three built-in prompt shapes by their fixed template text.
RequestKind classify_request(std::string_view text);

struct MockCondition {
  std::vector<std::string> contains_all;
  std::vector<std::string> contains_none;

  [[nodiscard]] bool matches(std::string_view text) const;
};

struct MockRubricRule {
  MockCondition when;
  std::string text;
};

enum class MockScoreAction {
  label,           // the hidden label embedded in the response text
  constant,        // `value`
  label_fraction,  // the label for a stable hash-selected `fraction` of responses, else `value`
  raw,             // emit `text` verbatim as the completion
};

struct MockScoringRule {
  MockCondition when;
  MockScoreAction action = MockScoreAction::label;
  int value = 0;
  double fraction = 1.0;
  std::string text;
};

struct MockDiagnosisRule {
  MockCondition when;
  std::string delta;
  /// Frame the delta under "UPDATED AUGMENTATION:"; false emits it bare.
  bool with_header = true;
};

/// Declarative behavior for MockProvider. Every request kind is answered by
/// the first rule whose condition matches the full request text.
///
/// JSON form:
///   {"label_pattern": "\\[label=(\\d+)\\]",
///    "markers": ["RULE-α"],
///    "by_hash": {"<sha256 of request text>": "completion"},
///    "rubric":    [{"contains_all": [...], "contains_none": [...], "text": "..."}],
///    "scoring":   [{..., "action": "label|constant|label_fraction|raw",
///                   "value": 0, "fraction": 0.5, "text": "..."}],
///    "diagnosis": [{..., "delta": "...", "with_header": true}]}
///
/// Generated rubrics append every marker that occurs in the request, so a
/// marker planted in a skill flows into its rubric and from there into
/// scoring requests.
struct MockScript {
  std::string label_pattern = R"(\[label=(\d+)\])";
  std::vector<std::string> markers;
  std::map<std::string, std::string> by_hash;
  std::vector<MockRubricRule> rubric;
  std::vector<MockScoringRule> scoring;
  std::vector<MockDiagnosisRule> diagnosis;

  static MockScript parse(std::string_view json_text);
  static MockScript load(const std::filesystem::path& path);
};

/// Deterministic provider: the completion is a pure function of the request
/// text. Unmatched requests throw ProviderError. Safe for concurrent use.
class MockProvider final : public ChatProvider {
 public:
  explicit MockProvider(MockScript script, int parallelism = 4);

  [[nodiscard]] int parallelism() const override { return parallelism_; }
  [[nodiscard]] std::string name() const override { return "mock"; }
  [[nodiscard]] std::size_t call_count() const { return calls_.load(); }

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  std::string answer_rubric(const std::string& text) const;
  std::string answer_scoring(const std::string& text) const;
  std::string answer_diagnosis(const std::string& text) const;

  MockScript script_;
  std::regex label_regex_;
  int parallelism_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace skillopt
