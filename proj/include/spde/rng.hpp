#pragma once

// Deterministic per-trajectory random streams.
//
// Stream k of a study seeded with `master` uses a std::mt19937_64 engine
// seeded with stream_seed(master, k). Standard normals come from the
// Marsaglia polar method on 53-bit uniforms; the second variate of each
// accepted pair is cached and returned by the next call. Engine and method
// are both fully specified, so draws are reproducible across platforms up
// to the last-ulp behaviour of std::log.

#include <cmath>
#include <cstdint>
#include <random>

namespace spde {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0xD1B54A32D192ED03ULL));
}

class NormalStream {
 public:
  NormalStream(std::uint64_t master, std::uint64_t index)
      : seed_(stream_seed(master, index)), engine_(seed_) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spde
