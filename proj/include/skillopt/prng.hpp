#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace skillopt {

/// SplitMix64 (Steele, Lea & Flood). Portable and fully specified, so
/// shuffles reproduce bit-for-bit on every platform and standard library.
class SplitMix64 {
 public:
  static constexpr std::string_view kName = "splitmix64";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates, walking from the back. Do not swap for std::shuffle: its
/// draw pattern is implementation-defined.
template <typename T>
void shuffle_in_place(std::vector<T>& values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a named sub-stream (e.g. one item) of a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) {
  SplitMix64 mix(seed ^ fnv1a64(salt));
  return mix.next();
}

}  // namespace skillopt
