#include "probe_bench/rng.hpp"

#include <cmath>
#include <numbers>

namespace probe_bench {

std::uint64_t CounterStream::below(std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double standard_normal_at(std::uint64_t key, std::uint64_t index) {
  const CounterStream stream(key);
  const double u1 = CounterStream::to_unit_open0(stream.at(2 * index));
  const double u2 = CounterStream::to_unit_open0(stream.at(2 * index + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace probe_bench
