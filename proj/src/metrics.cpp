#include "skillopt/metrics.hpp"

#include <fmt/format.h>

#include "skillopt/errors.hpp"

namespace skillopt {

namespace {

void check_pairs(std::span<const int> human, std::span<const int> predicted, const ScoreScale& scale) {
  if (human.size() != predicted.size()) {
    throw InvalidArgument(fmt::format("length mismatch: {} human vs {} predicted scores", human.size(),
                                      predicted.size()));
  }
  if (human.empty()) throw InvalidArgument("no score pairs");
  for (std::size_t i = 0; i < human.size(); ++i) {
    if (!scale.contains(human[i]) || !scale.contains(predicted[i])) {
      throw InvalidArgument(fmt::format("score pair {} ({}, {}) outside scale {}..{}", i, human[i],
                                        predicted[i], scale.min_score, scale.max_score));
    }
  }
}

}  // namespace

std::int64_t ConfusionMatrix::at(int human, int predicted) const {
  return counts.at(static_cast<std::size_t>(scale.index_of(human)))
      .at(static_cast<std::size_t>(scale.index_of(predicted)));
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    for (const auto c : row) n += c;
  }
  return n;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

ConfusionMatrix confusion(std::span<const int> human, std::span<const int> predicted, const ScoreScale& scale) {
  check_pairs(human, predicted, scale);
  const auto levels = static_cast<std::size_t>(scale.levels());
  ConfusionMatrix m{scale, std::vector<std::vector<std::int64_t>>(levels, std::vector<std::int64_t>(levels, 0))};
  for (std::size_t i = 0; i < human.size(); ++i) {
    ++m.counts[static_cast<std::size_t>(scale.index_of(human[i]))]
              [static_cast<std::size_t>(scale.index_of(predicted[i]))];
  }
  return m;
}

double qwk(const ConfusionMatrix& m) {
  const std::size_t levels = m.counts.size();
  const auto n = static_cast<double>(m.total());
  if (n == 0) throw InvalidArgument("no score pairs");
  std::vector<double> rows(levels, 0.0);
  std::vector<double> cols(levels, 0.0);
  for (std::size_t i = 0; i < levels; ++i) {
    for (std::size_t j = 0; j < levels; ++j) {
      rows[i] += static_cast<double>(m.counts[i][j]);
      cols[j] += static_cast<double>(m.counts[i][j]);
    }
  }
  const double span = static_cast<double>(levels - 1);
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < levels; ++i) {
    for (std::size_t j = 0; j < levels; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = d * d / (span * span);
      observed += w * static_cast<double>(m.counts[i][j]);
      expected += w * rows[i] * cols[j] / n;
    }
  }
  if (expected == 0.0) throw DegenerateError("degenerate distribution: expected disagreement is zero");
  return 1.0 - observed / expected;
}

double qwk(std::span<const int> human, std::span<const int> predicted, const ScoreScale& scale) {
  return qwk(confusion(human, predicted, scale));
}

ErrorStats error_stats(std::span<const LabeledResponse> responses, std::span<const ScoreRecord> records,
                       const ScoreScale& scale) {
  if (responses.size() != records.size()) {
    throw DataError(fmt::format("pairing mismatch: {} responses vs {} score records", responses.size(),
                                records.size()));
  }
  if (responses.empty()) throw InvalidArgument("error_stats needs at least one scored response");
  ErrorStats stats;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& r = responses[i];
    const auto& s = records[i];
    if (r.response_id != s.response_id) {
      throw DataError(fmt::format("pairing mismatch at {}: response '{}' vs record '{}'", i, r.response_id,
                                  s.response_id));
    }
    if (!scale.contains(r.human_score) || !scale.contains(s.predicted_score)) {
      throw InvalidArgument(fmt::format("response '{}' has a score outside the scale", r.response_id));
    }
    if (s.predicted_score == r.human_score) {
      ++stats.exact_count;
      continue;
    }
    (s.predicted_score > r.human_score ? stats.over_count : stats.under_count)++;
    ++stats.per_pair[{r.human_score, s.predicted_score}];
    stats.error_ids.push_back(r.response_id);
  }
  stats.accuracy = static_cast<double>(stats.exact_count) / static_cast<double>(stats.total());
  return stats;
}

std::vector<int> human_scores(std::span<const LabeledResponse> responses) {
  std::vector<int> out;
  out.reserve(responses.size());
  for (const auto& r : responses) out.push_back(r.human_score);
  return out;
}

std::vector<int> predicted_scores(std::span<const ScoreRecord> records) {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.predicted_score);
  return out;
}

}  // namespace skillopt
