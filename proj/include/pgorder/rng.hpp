#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace pgo {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Seedable, splittable random stream.
///
/// Every stochastic operation takes an explicit Rng. Child streams are derived
/// from the parent's seed and a key, never from the parent's state, so
/// `rng.split("init")` yields the same stream no matter how much the parent
/// has been consumed. Conversions to uniform/normal variates are done here
/// rather than through <random> distributions so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(detail::splitmix64(seed)) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  [[nodiscard]] Rng split(std::uint64_t key) const {
    return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(key + 0x632BE59BD9B4E019ULL)));
  }
  [[nodiscard]] Rng split(std::string_view name) const { return split(detail::fnv1a(name)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Box-Muller, one variate per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace pgo
