#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace histoconv {

// Deterministic 64-bit generator (SplitMix64). The algorithm is pinned so that
// identical seeds reproduce identical streams on every platform: the state
// advances by 0x9E3779B97F4A7C15 per draw and each output is the shift-xor
// finalizer below. Doubles take the top 53 bits, so uniform() is exact and
// platform-independent as well.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased index in [0, n) via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Derives an independent stream seed from (seed, a, b). Used for per-epoch
  // shuffles and per-sample augmentation/dropout streams so that training is
  // reproducible regardless of evaluation order.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix(mix(mix(seed) ^ a) ^ b);
  }

private:
  std::uint64_t state_;
};

// Fisher-Yates, back to front. Pinned here so shuffled orders are part of the
// reproducibility contract.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace histoconv
