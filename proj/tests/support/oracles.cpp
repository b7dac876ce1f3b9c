#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

double qwk(const std::vector<int>& human, const std::vector<int>& predicted, int lo, int hi) {
  if (human.size() != predicted.size() || human.empty()) throw std::invalid_argument("oracle::qwk sizes");
  const int L = hi - lo + 1;
  std::vector<std::vector<double>> O(L, std::vector<double>(L, 0.0));
  for (std::size_t k = 0; k < human.size(); ++k) O[human[k] - lo][predicted[k] - lo] += 1.0;

  std::vector<double> row(L, 0.0), col(L, 0.0);
  double n = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      row[i] += O[i][j];
      col[j] += O[i][j];
      n += O[i][j];
    }
  }
  double num = 0.0, den = 0.0;
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const double w = static_cast<double>((i - j) * (i - j)) / static_cast<double>((L - 1) * (L - 1));
      const double E = row[i] * col[j] / n;
      num += w * O[i][j];
      den += w * E;
    }
  }
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - num / den;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("oracle::lower_median empty");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

std::array<double, 3> exact_shares(double count, const std::array<double, 3>& fractions) {
  return {count * fractions[0], count * fractions[1], count * fractions[2]};
}

}  // namespace oracle
