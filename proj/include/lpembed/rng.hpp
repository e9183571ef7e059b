#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// Counter-based pseudo-random generator.  Every draw is a pure function of
// (seed, stream, counter), so batches can be generated in any order, on any
// number of threads, with identical results.  No state is advanced; callers
// own the counter layout of whatever they sample.
namespace lpembed::rng {

inline constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t mult_a = 0xbf58476d1ce4e5b9ULL;
inline constexpr std::uint64_t mult_b = 0x94d049bb133111ebULL;

// 64-bit avalanche finalizer (murmur3 variant).  Bijective on uint64.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

// Derives an independent sub-seed; used to separate e.g. operator column
// streams from normalization-estimate streams under one user seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(mix64(seed ^ golden) + tag * mult_b);
}

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(mix64(seed ^ golden) ^ stream * mult_a)) {}

  std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ counter * mult_b);
  }

  // Uniform on the open interval (0,1); never returns an exact endpoint.
  double uniform01(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exp(1); strictly positive and bounded by -log(2^-53).
  double exponential(std::uint64_t counter) const noexcept {
    return -std::log(uniform01(counter));
  }

  // Standard normal via Box-Muller; consumes counters 2c and 2c+1.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = uniform01(2 * counter);
    const double u2 = uniform01(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform integer in [0, bound) via 128-bit multiply (bias < bound/2^64).
  std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits(counter)) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
};

static_assert(std::endian::native == std::endian::little,
              "serialization code assumes a little-endian host");

}  // namespace lpembed::rng
