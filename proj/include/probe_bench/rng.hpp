#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace probe_bench {

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Sub-seed for stream `index` of a master seed. Streams for distinct indices
/// are independent, so work items can be scheduled in any order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) + mix64(index + 0x9E3779B97F4A7C15ULL));
}

/// Counter-based generator: draw i is mix64(key + (i + 1) * golden_gamma).
/// Any draw can be recomputed from (key, i) alone.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  std::uint64_t at(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t next() { return at(counter_++); }

  /// Uniform double in (0, 1].
  double uniform_open0() { return to_unit_open0(next()); }

  /// Uniform integer in [0, n), n > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);

  static double to_unit_open0(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal draw number `index` of stream `key`: Box-Muller (cosine
/// branch) over the uniform pair at counters 2*index and 2*index+1.
double standard_normal_at(std::uint64_t key, std::uint64_t index);

/// In-place Fisher-Yates shuffle driven by `stream`.
template <typename T>
void fisher_yates(std::span<T> values, CounterStream& stream) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace probe_bench
