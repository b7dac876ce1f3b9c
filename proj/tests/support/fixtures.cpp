#include "support/fixtures.hpp"

#include <unistd.h>

#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "skillopt/errors.hpp"
#include "skillopt/serialization.hpp"

namespace fixture {

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() / fmt::format("{}-{}-{}-{}", tag, ::getpid(), counter++, rd());
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Item make_item(std::string id, std::string stem, int max_score, std::optional<std::string> expert) {
  return Item{std::move(id), std::move(stem), ScoreScale::make(0, max_score), std::move(expert)};
}

std::vector<LabeledResponse> make_responses(const Item& item, const std::vector<std::size_t>& level_counts) {
  std::vector<LabeledResponse> out;
  std::vector<std::size_t> left = level_counts;
  std::size_t n = 1;
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t k = 0; k < left.size(); ++k) {
      if (left[k] == 0) continue;
      --left[k];
      any = true;
      const int h = item.scale.min_score + static_cast<int>(k);
      out.push_back(LabeledResponse{fmt::format("{}-{}", item.item_id, n),
                                    item.item_id,
                                    fmt::format("Answer {} for item {} [label={}]", n, item.item_id, h),
                                    h});
      ++n;
    }
  }
  return out;
}

void tag_batches(DatasetSplit& split, const BatchPlan& plan) {
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    for (const auto idx : plan.batches[b]) split.train[idx].text += fmt::format(" [batch={}]", b);
  }
}

Setup make_setup(Item item, const std::vector<std::size_t>& level_counts, std::size_t batch_target,
                 std::uint64_t seed, bool tag) {
  Setup s{std::move(item), {}, {}};
  const auto responses = make_responses(s.item, level_counts);
  SplitSpec spec;
  spec.seed = seed;
  s.split = stratified_split(responses, spec);
  s.batches = make_batches(s.split.train.size(), batch_target, seed);
  if (tag) tag_batches(s.split, s.batches);
  return s;
}

std::string to_tsv(const std::vector<std::pair<Item, std::vector<LabeledResponse>>>& items) {
  std::string out = "Id\tEssaySet\tScore1\tScore2\tEssayText\n";
  for (const auto& [item, responses] : items) {
    for (const auto& r : responses) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\n", r.response_id, item.item_id, r.human_score, r.human_score, r.text);
    }
  }
  return out;
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MockScript script(std::string_view json_text) { return MockScript::parse(json_text); }

std::string KillAfterProvider::do_complete(const ChatRequest& request) {
  if (++calls_ > limit_) throw ProviderError("injected failure: provider killed");
  return inner_->complete(request);
}

std::string rule_alpha_script_json() {
  return R"({
  "markers": ["RULE-α"],
  "rubric": [{"text": "Scripted rubric."}],
  "scoring": [
    {"contains_all": ["RULE-α"], "action": "label"},
    {"action": "constant", "value": 0}
  ],
  "diagnosis": [
    {"delta": "RULE-α: Anchor every level to observable evidence and merge overlapping elements."}
  ]
})";
}

std::string ladder_delta(std::string_view marker) {
  if (marker.empty()) return "Restate each level with clearer evidence requirements.";
  return fmt::format("{}: Tie each level to observable evidence in the answer.", marker);
}

std::string ladder_script_json(const std::vector<std::string>& delta_by_batch) {
  json doc;
  doc["markers"] = {"RULE-α", "LEVEL-1", "LEVEL-2", "LEVEL-3", "LEVEL-4", "LEVEL-5"};
  doc["rubric"] = json::array({json{{"text", "Scripted rubric."}}});
  json scoring = json::array();
  scoring.push_back(json{{"contains_all", {"RULE-α"}}, {"action", "label"}});
  for (int level = 5; level >= 1; --level) {
    scoring.push_back(json{{"contains_all", {fmt::format("LEVEL-{}", level)}},
                           {"action", "label_fraction"},
                           {"fraction", 0.4 + 0.1 * level},
                           {"value", 0}});
  }
  scoring.push_back(json{{"action", "label_fraction"}, {"fraction", 0.1}, {"value", 0}});
  doc["scoring"] = scoring;
  json diagnosis = json::array();
  for (std::size_t b = 0; b < delta_by_batch.size(); ++b) {
    diagnosis.push_back(json{{"contains_all", {fmt::format("[batch={}]", b)}}, {"delta", delta_by_batch[b]}});
  }
  doc["diagnosis"] = diagnosis;
  return doc.dump(2);
}

}  // namespace fixture
