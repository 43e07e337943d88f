#pragma once

#include <cmath>
#include <cstdint>

namespace spingraph {

/// splitmix64 generator.  Chosen over the std:: engines because the stream is
/// reproducible across platforms, the state is a single word, and independent
/// child streams for worker threads can be derived deterministically, so
/// results do not depend on the thread count.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe under log().
  double uniform_pos() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal deviate via Box-Muller.  Implemented by hand (rather
  /// than std::normal_distribution) so that byte-identical reruns hold on any
  /// standard library.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Deterministic child stream for block `index`.  Children of distinct
  /// indices (and the parent itself) behave as independent streams.
  SplitMix64 split(std::uint64_t index) const {
    SplitMix64 child(state_ ^ (0x9e3779b97f4a7c15ULL * (index + 0x632be59bd9b4e019ULL)));
    child.next();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace spingraph
