#include "skillopt/eval.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "skillopt/errors.hpp"
#include "skillopt/hash.hpp"

namespace fs = std::filesystem;

namespace skillopt {

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::no_rubric: return "no_rubric";
    case Condition::s0: return "s0";
    case Condition::s_best: return "s_best";
    case Condition::expert: return "expert";
  }
  return "no_rubric";
}

Condition parse_condition(std::string_view text) {
  for (const auto c : {Condition::no_rubric, Condition::s0, Condition::s_best, Condition::expert}) {
    if (to_string(c) == text) return c;
  }
  throw ConfigError(fmt::format("unknown condition '{}'", text));
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string format_number(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }

}  // namespace

void to_json(json& j, const ConditionResult& v) {
  j = json{{"item_id", v.item_id},
           {"condition", std::string(to_string(v.condition))},
           {"s0_variant", v.s0_variant ? json(std::string(to_string(*v.s0_variant))) : json(nullptr)},
           {"seed", v.seed},
           {"test_qwk", optional_number(v.test_qwk)},
           {"confusion", v.confusion},
           {"fallback_rate", v.fallback_rate},
           {"rubric", v.rubric ? json(*v.rubric) : json(nullptr)},
           {"n", v.records.size()}};
}

Rubric RubricCache::get_or_generate(ChatProvider& provider, const Skill& skill, const Item& item) {
  const auto composed = compose_skill(skill);
  const auto key = sha256_hex(fmt::format("{}\n{}\n{}", composed.size(), composed, item.item_id));
  {
    std::lock_guard lock(mutex_);
    if (const auto it = rubrics_.find(key); it != rubrics_.end()) return it->second;
  }
  auto rubric = generate_rubric(provider, skill, item, 0);
  std::lock_guard lock(mutex_);
  // A concurrent caller may have won the race; keep the first rubric stored.
  return rubrics_.emplace(key, std::move(rubric)).first->second;
}

std::size_t RubricCache::size() const {
  std::lock_guard lock(mutex_);
  return rubrics_.size();
}

ConditionResult evaluate_condition(const Item& item, std::span<const LabeledResponse> test, Condition condition,
                                   const ConditionArtifacts& artifacts, ChatProvider& provider, RubricCache& cache,
                                   const ScoringPolicy& policy, std::uint64_t seed) {
  if (test.empty()) throw InvalidArgument(fmt::format("item {}: empty test set", item.item_id));
  ConditionResult result;
  result.item_id = item.item_id;
  result.condition = condition;
  result.seed = seed;

  switch (condition) {
    case Condition::no_rubric:
      break;
    case Condition::s0:
    case Condition::s_best:
      if (!artifacts.skill) {
        throw InvalidArgument(
            fmt::format("item {}: condition {} needs a skill", item.item_id, to_string(condition)));
      }
      if (condition == Condition::s0 && artifacts.skill->version != 0) {
        throw InvalidArgument(fmt::format("item {}: condition s0 needs a version-0 skill", item.item_id));
      }
      result.s0_variant = artifacts.skill->variant;
      result.rubric = cache.get_or_generate(provider, *artifacts.skill, item);
      break;
    case Condition::expert:
      if (!item.expert_rubric) {
        throw InvalidArgument(fmt::format("item {} has no expert rubric", item.item_id));
      }
      result.rubric = Rubric{item.item_id, *item.expert_rubric, 0, 0};
      break;
  }

  result.records = score_responses(provider, item, result.rubric, test, policy);
  result.human = human_scores(test);
  const auto predicted = predicted_scores(result.records);
  result.confusion = confusion(result.human, predicted, item.scale);
  result.fallback_rate = fallback_rate(result.records);
  try {
    result.test_qwk = qwk(result.confusion);
  } catch (const DegenerateError&) {
    result.test_qwk = std::nullopt;
  }
  return result;
}

std::optional<double> relative_gain(std::optional<double> current, std::optional<double> baseline) {
  if (!current || !baseline || std::abs(*baseline) < 1e-9) return std::nullopt;
  return (*current - *baseline) / std::abs(*baseline);
}

void to_json(json& j, const TransferCell& v) {
  j = json{{"source_item_id", v.source_item_id},
           {"target_item_id", v.target_item_id},
           {"in_distribution", v.in_distribution},
           {"test_qwk", optional_number(v.test_qwk)},
           {"gain_vs_s0", optional_number(v.gain_vs_s0)},
           {"gain_vs_expert", optional_number(v.gain_vs_expert)},
           {"gain_vs_best", optional_number(v.gain_vs_best)}};
}

TransferGrid transfer_matrix(const std::map<std::string, Skill, ItemIdLess>& optimized,
                             std::span<const TransferTarget> targets, ChatProvider& provider, RubricCache& cache) {
  TransferGrid grid;
  std::map<std::string, const TransferTarget*, ItemIdLess> by_id;
  for (const auto& t : targets) {
    if (!by_id.emplace(t.item.item_id, &t).second) {
      throw InvalidArgument(fmt::format("duplicate transfer target {}", t.item.item_id));
    }
  }
  for (const auto& [id, skill] : optimized) {
    if (!by_id.contains(id)) throw InvalidArgument(fmt::format("no transfer target for source item {}", id));
  }
  for (const auto& [id, target] : by_id) {
    if (!optimized.contains(id)) throw InvalidArgument(fmt::format("no optimized skill for item {}", id));
    grid.item_ids.push_back(id);
  }

  for (const auto& source : grid.item_ids) {
    auto& row = grid.cells.emplace_back();
    for (const auto& target_id : grid.item_ids) {
      const auto& target = *by_id.at(target_id);
      TransferCell cell;
      cell.source_item_id = source;
      cell.target_item_id = target_id;
      cell.in_distribution = source == target_id;
      if (cell.in_distribution) {
        cell.test_qwk = target.s_best.test_qwk;
      } else {
        const auto result = evaluate_condition(target.item, target.test, Condition::s_best,
                                               ConditionArtifacts{optimized.at(source)}, provider, cache,
                                               target.policy, target.s_best.seed);
        cell.test_qwk = result.test_qwk;
      }
      cell.gain_vs_s0 = relative_gain(cell.test_qwk, target.s0.test_qwk);
      cell.gain_vs_expert =
          relative_gain(cell.test_qwk, target.expert ? target.expert->test_qwk : std::optional<double>{});
      cell.gain_vs_best = relative_gain(cell.test_qwk, target.s_best.test_qwk);
      row.push_back(std::move(cell));
    }
  }
  return grid;
}

void to_json(json& j, const TransferSummary& v) {
  j = json{{"off_diagonal_cells", v.off_diagonal_cells},
           {"fraction_improving_vs_s0", optional_number(v.fraction_improving_vs_s0)},
           {"median_gain_vs_s0", optional_number(v.median_gain_vs_s0)},
           {"fraction_matching_best", optional_number(v.fraction_matching_best)},
           {"median_gain_vs_expert", optional_number(v.median_gain_vs_expert)}};
}

std::optional<double> lower_median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

TransferSummary aggregate_transfer(const TransferGrid& grid) {
  std::vector<double> vs_s0;
  std::vector<double> vs_expert;
  std::vector<double> vs_best;
  TransferSummary s;
  for (const auto& row : grid.cells) {
    for (const auto& cell : row) {
      if (cell.in_distribution) continue;
      ++s.off_diagonal_cells;
      if (cell.gain_vs_s0) vs_s0.push_back(*cell.gain_vs_s0);
      if (cell.gain_vs_expert) vs_expert.push_back(*cell.gain_vs_expert);
      if (cell.gain_vs_best) vs_best.push_back(*cell.gain_vs_best);
    }
  }
  if (s.off_diagonal_cells == 0) throw InvalidArgument("nothing to aggregate: the grid has no off-diagonal cells");

  const auto fraction = [](const std::vector<double>& values, auto pred) -> std::optional<double> {
    if (values.empty()) return std::nullopt;
    const auto hits = std::count_if(values.begin(), values.end(), pred);
    return static_cast<double>(hits) / static_cast<double>(values.size());
  };
  s.fraction_improving_vs_s0 = fraction(vs_s0, [](double g) { return g > 0.0; });
  s.median_gain_vs_s0 = lower_median(vs_s0);
  s.fraction_matching_best = fraction(vs_best, [](double g) { return g >= 0.0; });
  s.median_gain_vs_expert = lower_median(vs_expert);
  return s;
}

std::string transfer_csv(const TransferGrid& grid, GainBaseline baseline) {
  std::string out = "source";
  for (const auto& id : grid.item_ids) out += fmt::format(",{}", id);
  out += '\n';
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    out += grid.item_ids[i];
    for (const auto& cell : grid.cells[i]) {
      const auto& gain = baseline == GainBaseline::s0       ? cell.gain_vs_s0
                         : baseline == GainBaseline::expert ? cell.gain_vs_expert
                                                            : cell.gain_vs_best;
      out += ',';
      out += format_number(gain);
      if (cell.in_distribution) out += '*';
    }
    out += '\n';
  }
  return out;
}

std::string conditions_csv(std::span<const ConditionResult> results) {
  std::string out = "item_id,condition,s0_variant,seed,test_qwk,fallback_rate,n\n";
  for (const auto& r : results) {
    out += fmt::format("{},{},{},{},{},{:.6f},{}\n", r.item_id, to_string(r.condition),
                       r.s0_variant ? to_string(*r.s0_variant) : std::string_view(""), r.seed,
                       format_number(r.test_qwk), r.fallback_rate, r.records.size());
  }
  return out;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  if (values.empty()) return m;
  for (const auto v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return m;
  double ss = 0.0;
  for (const auto v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return m;
}

std::string record_file_name(const ConditionResult& r) {
  return fmt::format("item_{}_{}{}_seed{}.jsonl", r.item_id, to_string(r.condition),
                     r.s0_variant ? fmt::format("_{}", to_string(*r.s0_variant)) : std::string(), r.seed);
}

json summary_json(const EvaluationResults& results) {
  // (item, condition, variant) -> QWKs over seeds, in first-seen order
  std::vector<std::pair<std::tuple<std::string, Condition, std::optional<ScaffoldVariant>>, std::vector<double>>>
      groups;
  std::vector<std::size_t> degenerate;
  for (const auto& r : results.conditions) {
    const auto key = std::make_tuple(r.item_id, r.condition, r.s0_variant);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.emplace_back(key, std::vector<double>{});
      degenerate.push_back(0);
      it = std::prev(groups.end());
    }
    const auto idx = static_cast<std::size_t>(it - groups.begin());
    if (r.test_qwk) {
      it->second.push_back(*r.test_qwk);
    } else {
      ++degenerate[idx];
    }
  }

  json conditions = json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& [key, qwks] = groups[i];
    const auto& [item_id, condition, variant] = key;
    const auto ms = mean_std(qwks);
    conditions.push_back(json{{"item_id", item_id},
                              {"condition", std::string(to_string(condition))},
                              {"s0_variant", variant ? json(std::string(to_string(*variant))) : json(nullptr)},
                              {"seeds", qwks.size() + degenerate[i]},
                              {"degenerate_seeds", degenerate[i]},
                              {"mean_test_qwk", qwks.empty() ? json(nullptr) : json(ms.mean)},
                              {"std_test_qwk", qwks.empty() ? json(nullptr) : json(ms.std)}});
  }

  json transfers = json::array();
  for (const auto& t : results.transfers) {
    json cells = json::array();
    for (const auto& row : t.grid.cells) {
      for (const auto& cell : row) cells.push_back(cell);
    }
    transfers.push_back(json{{"variant", std::string(to_string(t.variant))},
                             {"seed", t.seed},
                             {"item_ids", t.grid.item_ids},
                             {"summary", t.summary},
                             {"cells", cells}});
  }
  return json{{"conditions", conditions}, {"transfers", transfers}};
}

}  // namespace

void emit_report(const EvaluationResults& results, const fs::path& out_dir) {
  if (results.conditions.empty() && results.transfers.empty()) {
    throw InvalidArgument("no evaluation results to report");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(fmt::format("cannot create report directory {}: {}", out_dir.string(), ec.message()));

  write_file_atomic(out_dir / "conditions.csv", conditions_csv(results.conditions));
  for (const auto& r : results.conditions) {
    write_file_atomic(out_dir / "records" / record_file_name(r), to_jsonl(r.records));
  }
  for (const auto& t : results.transfers) {
    const auto dir = out_dir / "transfer" / fmt::format("{}_seed{}", to_string(t.variant), t.seed);
    write_file_atomic(dir / "transfer_gain_vs_s0.csv", transfer_csv(t.grid, GainBaseline::s0));
    write_file_atomic(dir / "transfer_gain_vs_expert.csv", transfer_csv(t.grid, GainBaseline::expert));
    write_file_atomic(dir / "transfer_gain_vs_best.csv", transfer_csv(t.grid, GainBaseline::best));
  }
  write_file_atomic(out_dir / "summary.json", dump_stable(summary_json(results)));
}

}  // namespace skillopt
