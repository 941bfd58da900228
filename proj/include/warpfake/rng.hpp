#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace warpfake {

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seeded pseudo-random source with platform-independent sampling helpers.
///
/// Sampling is implemented on top of the raw 64-bit engine output rather than
/// the <random> distributions, whose algorithms are implementation-defined,
/// so the same seed yields the same stream with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream for a (seed, path...) tuple, e.g. (seed, sample_index).
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace warpfake
