#pragma once

#include <cstdint>

namespace mdx {

/// Deterministic 64-bit generator (splitmix64, Steele et al. 2014).
///
/// All randomized routines in this library take one of these by value, so a
/// (configuration, seed) pair reproduces bit-identical sequences on any platform or
/// language that implements the same three-line mixer. See README for the
/// exact definition and the substream derivation rule.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in the open interval (0, 1): 53-bit mantissa, half-step
  /// offset so 0 and 1 are never produced (safe under log/log-log maps).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be > 0. Uses 64-bit modulo; the bias
  /// is < n / 2^64, negligible for the small n used here.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

/// Derives an independent substream seed: mixes the stream index into the
/// parent seed through the splitmix64 output function. Used to hand each
/// station / replicate / restart its own generator.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace mdx
