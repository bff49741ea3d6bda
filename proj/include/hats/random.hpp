#pragma once

// Counter-based SplitMix64 stream.
//
// Output k (k = 0, 1, 2, ...) of a stream with seed s is
//   z = s + (k + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   out = z ^ (z >> 31)
// which is exactly the sequence produced by the reference SplitMix64 state
// update. Doubles take the top 53 bits: out >> 11 scaled by 2^-53.
// Bounded integers use rejection on the 64-bit output (no modulo bias).
// Sub-streams are derived with `derive_seed(seed, tag)`, which is the
// SplitMix64 finalizer applied to seed ^ (tag * 0xD1B54A32D192ED03).

#include <cmath>
#include <cstdint>
#include <limits>

namespace hats {

class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kMul1 = 0xBF58476D1CE4E5B9ULL;
  static constexpr std::uint64_t kMul2 = 0x94D049BB133111EBULL;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * kMul1;
    z = (z ^ (z >> 27)) * kMul2;
    return z ^ (z >> 31);
  }

  /// Value at an arbitrary counter position; does not advance the stream.
  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return mix(seed_ + (counter + 1) * kGamma);
  }

  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

  /// Exponential with the given mean.
  double exponential(double mean) noexcept {
    return -mean * std::log1p(-uniform());
  }

  std::uint64_t counter() const noexcept { return counter_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t tag) noexcept {
  return SplitMix64::mix(seed ^ (tag * 0xD1B54A32D192ED03ULL));
}

/// Fisher-Yates shuffle driven by SplitMix64, identical on every platform.
template <typename Container>
void shuffle(Container& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace hats
