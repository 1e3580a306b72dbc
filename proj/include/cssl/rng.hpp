#pragma once

// Deterministic random streams derived from (global_seed, epoch, sample_index).
// Every consumer documents how many draws it makes, so replaying a stream
// reproduces outputs exactly and parallel sample preparation stays independent
// of worker scheduling. Keep the draw counts stable: persisted runs depend on
// them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace cssl {

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix(seed + kGolden)) {}

  RngStream(std::uint64_t global_seed, std::uint64_t epoch,
            std::uint64_t sample_index)
      : state_(mix(mix(mix(global_seed + kGolden) ^ (epoch + kGolden)) ^
                   (sample_index + kGolden))) {}

  // splitmix64 step
  std::uint64_t next_u64() {
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1), 53-bit resolution; one draw
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, bound); one draw (multiply-shift; bias < bound/2^64)
  std::uint64_t index(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // [lo, hi] inclusive; one draw
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(index(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // one draw
  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; always exactly two draws (no cached spare)
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Fisher-Yates; exactly n-1 draws
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  // splitmix64 finalizer, used to hash the seed material
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

} // namespace cssl
