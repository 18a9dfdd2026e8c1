#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace wnet {

/// Deterministic, platform-independent RNG (SplitMix64 core).
///
/// std::normal_distribution and friends are not bit-specified across
/// standard library implementations, so every stochastic component in the
/// project draws from this generator instead. Same seed, same stream,
/// everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive. Modulo reduction; the bias is
  /// immaterial for the span sizes used here.
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  /// Standard normal via Box-Muller. One value per call; no cached spare,
  /// which keeps the stream position a pure function of the call count.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

 private:
  uint64_t state_;
};

namespace detail {
inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}
inline uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Splittable seed derivation: child streams are named, so the order in
/// which components consume randomness can change without perturbing the
/// others. Documented in the README as the project-wide seeding scheme.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
  return detail::mix(base ^ detail::fnv1a(tag));
}

inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
  return detail::mix(derive_seed(base, tag) + 0x9E3779B97F4A7C15ull * (index + 1));
}

}  // namespace wnet
