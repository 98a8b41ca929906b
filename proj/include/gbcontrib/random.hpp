#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace gbcontrib {

// Mixes a master seed with a stream counter (splitmix64 finalizer). Stream l
// of seed s is independent of how many other streams are drawn.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded pseudo-random source.
///
/// Distributions are implemented on top of the raw 64-bit engine output rather
/// than with <random> distribution objects, so a given seed yields the same
/// sequence with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Standard normal (Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace gbcontrib
