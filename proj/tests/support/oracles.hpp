#pragma once

// Reference implementations written independently of the library, used as
// test oracles. Keep them naive.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace oracle {

/// Quadratic weighted kappa from explicit observed, expected and weight
/// matrices over the full scale [lo, hi]. Returns NaN when undefined.
double qwk(const std::vector<int>& human, const std::vector<int>& predicted, int lo, int hi);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

/// Plain sort-based lower median (element (n-1)/2).
double lower_median(std::vector<double> values);

/// Exact shares level_count * fraction in each part.
std::array<double, 3> exact_shares(double count, const std::array<double, 3>& fractions);

}  // namespace oracle
