#pragma once

#include <cstdint>
#include <initializer_list>

namespace ldvae {

// Counter-based generator: every draw is a pure function of (seed, key path,
// counter), so independent draws can be evaluated in any order, on any number
// of threads, with identical results.
class KeyedRng {
public:
  // Distinct top-level streams; keeps draw keys from colliding across uses.
  enum Stream : std::uint64_t {
    kInit = 1,
    kShuffle = 2,
    kUniform = 3,
    kAbundance = 4,
    kNoise = 5,
    kSplit = 6,
  };

  KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    state_ = mix(seed + kGolden);
    for (std::uint64_t k : keys) state_ = mix(state_ ^ (k + kGolden));
  }

  std::uint64_t next_u64() { return mix(state_ ^ (++counter_) * kGolden); }

  // Uniform on the open interval (0, 1).
  double next_u01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (two uniforms per draw).
  double next_normal();

  // Gamma(shape, 1) by Marsaglia-Tsang squeeze; valid for any shape > 0.
  double next_gamma(double shape);

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_ = 0;
  std::uint64_t counter_ = 0;
};

} // namespace ldvae
