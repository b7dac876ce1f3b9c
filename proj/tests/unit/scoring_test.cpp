#include <gtest/gtest.h>

#include "skillopt/errors.hpp"
#include "skillopt/llm/mock.hpp"
#include "skillopt/llm/prompts.hpp"
#include "skillopt/llm/scoring.hpp"
#include "support/fixtures.hpp"

using namespace skillopt;

namespace {

const Item kItem{"1", "stem", ScoreScale::make(0, 2), std::nullopt};

/// Replies from a fixed list in call order.
class SequenceProvider final : public ChatProvider {
 public:
  explicit SequenceProvider(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  [[nodiscard]] std::string name() const override { return "sequence"; }
  std::size_t calls = 0;

 protected:
  std::string do_complete(const ChatRequest&) override { return replies_.at(calls++); }

 private:
  std::vector<std::string> replies_;
};

ChatRequest any_request() { return render_no_rubric_prompt(kItem, "resp"); }

}  // namespace

TEST(ScoreWithPolicy, FirstParseableReplyWins) {
  SequenceProvider p({"no marker", "ok [[1]]"});
  const auto r = score_with_policy(p, any_request(), "r1", kItem.scale, ScoringPolicy{3, 0});
  EXPECT_EQ(p.calls, 2u);
  EXPECT_EQ(r.predicted_score, 1);
  EXPECT_EQ(r.parse_status, ParseStatus::ok);
  EXPECT_EQ(r.justification, "ok");
  EXPECT_EQ(r.raw_completion, "ok [[1]]");
}

TEST(ScoreWithPolicy, FallbackAfterExactlyThreeFailures) {
  SequenceProvider p({"a", "b", "c", "d [[1]]"});
  const auto r = score_with_policy(p, any_request(), "r1", kItem.scale, ScoringPolicy{3, 2});
  EXPECT_EQ(p.calls, 3u);
  EXPECT_EQ(r.predicted_score, 2);
  EXPECT_EQ(r.parse_status, ParseStatus::fallback);
}

TEST(ScoreWithPolicy, ClampedStatusKept) {
  SequenceProvider p({"big [[7]]"});
  const auto r = score_with_policy(p, any_request(), "r1", kItem.scale, ScoringPolicy{3, 0});
  EXPECT_EQ(r.predicted_score, 2);
  EXPECT_EQ(r.parse_status, ParseStatus::clamped);
}

TEST(ScoreResponses, OrderedAndParallel) {
  MockProvider mock(fixture::script(R"({"scoring": [{"action": "label"}]})"), 6);
  const auto item = fixture::make_item("1", "stem", 2);
  const auto responses = fixture::make_responses(item, {30, 30, 30});
  const auto records = score_responses(mock, item, Rubric{"1", "R", 0, 0}, responses, ScoringPolicy{});
  ASSERT_EQ(records.size(), responses.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].response_id, responses[i].response_id);
    EXPECT_EQ(records[i].predicted_score, responses[i].human_score);
  }
  EXPECT_EQ(fallback_rate(records), 0.0);
}

TEST(ScoreResponses, FallbackRateCountsFallbacks) {
  MockProvider mock(fixture::script(
      R"({"scoring": [{"contains_all": ["Answer 1 "], "action": "raw", "text": "none"}, {"action": "label"}]})"));
  const auto item = fixture::make_item("1", "stem", 2);
  const auto responses = fixture::make_responses(item, {2, 1, 1});
  const auto records = score_responses(mock, item, std::nullopt, responses, ScoringPolicy{3, 0});
  EXPECT_DOUBLE_EQ(fallback_rate(records), 0.25);
  EXPECT_EQ(mock.call_count(), 3u + 3u);
}

TEST(ModalScore, TiesGoLow) {
  const auto item = fixture::make_item("1", "stem", 2);
  EXPECT_EQ(modal_score(fixture::make_responses(item, {2, 5, 5}), item.scale), 1);
  EXPECT_EQ(modal_score(fixture::make_responses(item, {1, 0, 4}), item.scale), 2);
  EXPECT_THROW(modal_score({}, item.scale), InvalidArgument);
}

TEST(GenerateRubric, TrimsAndStampsVersion) {
  MockProvider mock(fixture::script(R"({"rubric": [{"text": "  R body  "}]})"));
  const auto skill = Skill::initial("Base.", ScaffoldVariant::weak).with_delta("d");
  const auto rubric = generate_rubric(mock, skill, kItem, 4);
  EXPECT_EQ(rubric.text, "R body");
  EXPECT_EQ(rubric.produced_by_skill_version, 1);
  EXPECT_EQ(rubric.iteration, 4);
  EXPECT_EQ(rubric.item_id, "1");
}
