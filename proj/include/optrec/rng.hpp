#pragma once

#include <cmath>
#include <cstdint>

namespace optrec {

/// SplitMix64: a counter-based 64-bit generator (Steele, Lea & Flood
/// constants). Every randomized experiment in the library draws from this
/// generator so that output streams are reproducible from the seed alone,
/// independent of the standard library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Draws exactly two 64-bit words per
  /// call (no caching) so the stream position is a pure function of the
  /// number of calls made.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Integer in [0, n). Plain modulo; the (negligible) bias is irrelevant
  /// here, determinism is what matters.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Derives an independent stream for substream `index` (e.g. one per
  /// Monte Carlo repetition) without disturbing this stream's state.
  static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mixer(seed ^ (0xA3EC4E9FD0F57B41ull * (index + 1)));
    return SplitMix64(mixer.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace optrec
