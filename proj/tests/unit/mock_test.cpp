#include <gtest/gtest.h>

#include <fmt/format.h>

#include "skillopt/errors.hpp"
#include "skillopt/hash.hpp"
#include "skillopt/llm/assets.hpp"
#include "skillopt/llm/mock.hpp"
#include "skillopt/llm/prompts.hpp"
#include "skillopt/parallel.hpp"
#include "skillopt/serialization.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace skillopt;

namespace {

const Item kItem{"1", std::string(fixture::kStem), ScoreScale::make(0, 3), std::nullopt};

ChatRequest scoring_request(std::string_view rubric, std::string_view response) {
  return render_scoring_prompt(Rubric{"1", std::string(rubric), 0, 0}, kItem, response);
}

ChatRequest diagnosis_request(std::string_view skill) {
  ErrorStats stats;
  stats.over_count = 1;
  stats.per_pair = {{{0, 1}, 1}};
  const std::vector<ErrorCase> cases{{"answer [batch=3]", 1, 0, "j"}};
  return render_diagnosis_prompt(skill, "rubric", stats, cases);
}

}  // namespace

TEST(ClassifyRequest, RecognizesTheThreeShapes) {
  EXPECT_EQ(classify_request(render_rubric_prompt("skill", kItem).text()), RequestKind::rubric_generation);
  EXPECT_EQ(classify_request(scoring_request("r", "a").text()), RequestKind::scoring);
  EXPECT_EQ(classify_request(render_no_rubric_prompt(kItem, "a").text()), RequestKind::scoring);
  EXPECT_EQ(classify_request(diagnosis_request("s").text()), RequestKind::diagnosis);
  EXPECT_EQ(classify_request("hello"), RequestKind::unknown);
}

TEST(MockProvider, RuleAlphaScorerAgreesOnlyWithMarker) {
  MockProvider mock(fixture::script(fixture::rule_alpha_script_json()));
  EXPECT_EQ(mock.complete(scoring_request("Scripted rubric.\nRULE-α", "x [label=2]")),
            "Scripted assessment of the response. [[2]]");
  EXPECT_EQ(mock.complete(scoring_request("Scripted rubric.", "x [label=2]")),
            "Scripted assessment of the response. [[0]]");
}

TEST(MockProvider, RubricEchoesMarkersFoundInTheSkill) {
  MockProvider mock(fixture::script(fixture::rule_alpha_script_json()));
  EXPECT_EQ(mock.complete(render_rubric_prompt("Base.", kItem)), "Scripted rubric.");
  EXPECT_EQ(mock.complete(render_rubric_prompt(compose_skill("Base.", "RULE-α: rule"), kItem)),
            "Scripted rubric.\nRULE-α");
}

TEST(MockProvider, DiagnosisEmitsHeaderAndDelta) {
  MockProvider mock(fixture::script(fixture::rule_alpha_script_json()));
  const auto out = mock.complete(diagnosis_request("Base."));
  EXPECT_EQ(out, "Scripted analysis of the error clusters.\n\nUPDATED AUGMENTATION:\n"
                 "RULE-α: Anchor every level to observable evidence and merge overlapping elements.");
}

TEST(MockProvider, DiagnosisWithoutHeader) {
  MockProvider mock(fixture::script(R"({"diagnosis": [{"delta": "bare rules", "with_header": false}]})"));
  EXPECT_EQ(mock.complete(diagnosis_request("Base.")), "bare rules");
}

TEST(MockProvider, ByHashTakesPrecedence) {
  const auto req = scoring_request("r", "x [label=1]");
  json doc = json::parse(fixture::rule_alpha_script_json());
  doc["by_hash"] = {{sha256_hex(req.text()), "Hashed reply [[3]]"}};
  MockProvider mock(MockScript::parse(doc.dump()));
  EXPECT_EQ(mock.complete(req), "Hashed reply [[3]]");
}

TEST(MockProvider, IdenticalRequestsIdenticalReplies) {
  MockProvider mock(fixture::script(fixture::ladder_script_json({"x"})));
  const auto req = scoring_request("Scripted rubric.\nLEVEL-3", "y [label=2]");
  EXPECT_EQ(mock.complete(req), mock.complete(req));
}

TEST(MockProvider, LabelFractionUsesStableHashOfResponse) {
  MockProvider mock(fixture::script(fixture::ladder_script_json({})));
  for (int k = 0; k < 50; ++k) {
    const auto response = fmt::format("answer {} [label=3]", k);
    const bool labelled = oracle::fnv1a(response) % 10000 < 7000;  // LEVEL-3 → 0.7
    const auto out = mock.complete(scoring_request("Scripted rubric.\nLEVEL-3", response));
    EXPECT_EQ(out, fmt::format("Scripted assessment of the response. [[{}]]", labelled ? 3 : 0)) << response;
  }
}

TEST(MockProvider, UnmatchedRequestIsError) {
  MockProvider empty(fixture::script("{}"));
  EXPECT_THROW(empty.complete(scoring_request("r", "x [label=1]")), ProviderError);
  EXPECT_THROW(empty.complete(render_rubric_prompt("s", kItem)), ProviderError);
  EXPECT_THROW(empty.complete(diagnosis_request("s")), ProviderError);
  ChatRequest other;
  other.messages.push_back({ChatRole::user, "hello"});
  EXPECT_THROW(empty.complete(other), ProviderError);
}

TEST(MockProvider, LabelRuleWithoutLabelIsError) {
  MockProvider mock(fixture::script(R"({"scoring": [{"action": "label"}]})"));
  EXPECT_THROW(mock.complete(scoring_request("r", "no label here")), ProviderError);
}

TEST(MockProvider, RawAction) {
  MockProvider mock(fixture::script(R"({"scoring": [{"action": "raw", "text": "no marker"}]})"));
  EXPECT_EQ(mock.complete(scoring_request("r", "x")), "no marker");
}

TEST(MockProvider, ConcurrentCallsAreDeterministic) {
  MockProvider mock(fixture::script(fixture::ladder_script_json({})), 8);
  std::vector<std::string> a(200), b(200);
  const auto run = [&](std::vector<std::string>& out) {
    parallel_for(out.size(), 8, [&](std::size_t i) {
      out[i] = mock.complete(scoring_request("Scripted rubric.\nLEVEL-2", fmt::format("r{} [label=2]", i)));
    });
  };
  run(a);
  run(b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(mock.call_count(), 400u);
}

TEST(MockScript, MalformedScriptsRejected) {
  EXPECT_THROW(MockScript::parse("not json"), ConfigError);
  EXPECT_THROW(MockScript::parse(R"({"scoring": [{"action": "dance"}]})"), ConfigError);
  EXPECT_THROW(MockScript::parse(R"({"scoring": [{"action": "label_fraction", "fraction": 2}]})"), ConfigError);
  EXPECT_THROW(MockScript::load("/nonexistent/mock.json"), ConfigError);
  EXPECT_THROW(MockProvider(MockScript::parse(R"({"label_pattern": "("})")), ConfigError);
}

TEST(ChatProvider, EmptyCompletionIsError) {
  MockProvider mock(fixture::script(R"({"scoring": [{"action": "raw", "text": "  "}]})"));
  EXPECT_THROW(mock.complete(scoring_request("r", "x")), ProviderError);
}

TEST(ChatRequest, NeedsUserMessage) {
  ChatRequest r;
  r.messages.push_back({ChatRole::system, "sys"});
  EXPECT_THROW(r.validate(), InvalidArgument);
  r.messages.push_back({ChatRole::user, "u"});
  EXPECT_NO_THROW(r.validate());
  EXPECT_EQ(r.text(), "sys\n\nu");
  r.temperature = -1;
  EXPECT_THROW(r.validate(), InvalidArgument);
}
