#pragma once

#include <cmath>
#include <cstdint>

namespace itemgauge {

// splitmix64; used to expand seeds and to derive independent substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic substream seed from a master seed and up to two stream tags.
// Per-concept / per-fold / per-grid-cell randomness all comes through here so
// results do not depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ull + 0x165667b19e3779f9ull;
  h ^= splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4full + 0x27d4eb2f165667c5ull;
  h ^= splitmix64(s);
  return h;
}

// xoshiro256++ with fixed transforms for uniform/normal draws. The standard
// <random> distributions are implementation-defined, so sequences would not be
// stable across compilers; this keeps simulator output byte-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, cosine branch only: two uniforms per draw, no cached state.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double lognormal(double log_mean, double log_sd) { return std::exp(normal(log_mean, log_sd)); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n) via 128-bit multiply (no modulo bias worth
  // caring about at these ranges, and fully deterministic).
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace itemgauge
