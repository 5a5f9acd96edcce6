#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace nsreg::rng {

// SplitMix64 finalizer. Used both as a stream generator and as a
// counter-based hash so that per-voxel draws are independent of
// evaluation order.
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable seed derivation from a master seed and an address path.
constexpr std::uint64_t derive(std::uint64_t master,
                               std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix(master);
  for (std::uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

// Uniform double in [0, 1) with 53 bits of the hashed counter.
inline double uniform_at(std::uint64_t seed, std::uint64_t counter) noexcept {
  return static_cast<double>(mix(seed ^ mix(counter)) >> 11) * 0x1.0p-53;
}

// Standard normal draw for a counter via Box-Muller on two hashed uniforms.
inline double normal_at(std::uint64_t seed, std::uint64_t counter) noexcept {
  double u1 = uniform_at(seed, 2 * counter);
  const double u2 = uniform_at(seed, 2 * counter + 1);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential stream for a handful of draws (slopes, geometry jitter).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace nsreg::rng
