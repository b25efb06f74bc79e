#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vecont {

/// Seed for a named sub-stream of a master seed. Every stage (baseline,
/// sampling, synthesis, ...) draws from its own stream so each is
/// reproducible on its own.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

/// Portable random source. std::mt19937_64 output is fixed by the standard,
/// but std:: distributions are not, so the draws below are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0)
      : engine_(derive_seed(master, stream, index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

  /// First `k` elements of a uniform random permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vecont
