#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skillopt/core.hpp"

namespace skillopt {

/// Rows are human scores, columns predicted scores, both over the full scale.
struct ConfusionMatrix {
  ScoreScale scale;
  std::vector<std::vector<std::int64_t>> counts;

  [[nodiscard]] std::int64_t at(int human, int predicted) const;
  [[nodiscard]] std::int64_t total() const;
  [[nodiscard]] std::int64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> human, std::span<const int> predicted,
                          const ScoreScale& scale);

/// Cohen's kappa with quadratic weights (i-j)^2/(L-1)^2 over all L levels of
/// the scale, observed against the outer product of the marginals.
/// Throws DegenerateError when the expected disagreement is zero.
double qwk(std::span<const int> human, std::span<const int> predicted, const ScoreScale& scale);
double qwk(const ConfusionMatrix& matrix);

struct ErrorStats {
  double accuracy = 0.0;
  std::int64_t over_count = 0;
  std::int64_t under_count = 0;
  std::int64_t exact_count = 0;
  /// (human, predicted) -> count, mismatches only.
  std::map<std::pair<int, int>, std::int64_t> per_pair;
  /// response_ids of mis-scored responses, in input order.
  std::vector<std::string> error_ids;

  [[nodiscard]] std::int64_t total() const { return over_count + under_count + exact_count; }

  friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

/// Records must pair with responses position by position (same response_id).
ErrorStats error_stats(std::span<const LabeledResponse> responses,
                       std::span<const ScoreRecord> records, const ScoreScale& scale);

std::vector<int> human_scores(std::span<const LabeledResponse> responses);
std::vector<int> predicted_scores(std::span<const ScoreRecord> records);

}  // namespace skillopt
