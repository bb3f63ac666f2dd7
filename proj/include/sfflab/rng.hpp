#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sfflab {

// SplitMix64 output function (Steele/Lea/Vigna).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ull;

/** Seed for realization `index`: the (index+1)-th output of SplitMix64 seeded with `master`. */
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64_mix(master + (index + 1) * kSplitmixGamma);
}

/** Independent sub-stream seed (e.g. H0 vs X draws within one realization). */
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return derive_seed(seed ^ 0x5851F42D4C957F2Dull, tag);
}

// Deterministic Gaussian/uniform source. mt19937_64 is bit-stable across
// platforms per the standard; std::normal_distribution is not, so normals
// come from an explicit Box-Muller transform (trig form, second value cached).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /** Uniform double in [0, 1), 53 random bits. */
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sfflab
