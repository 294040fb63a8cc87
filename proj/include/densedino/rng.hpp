#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace densedino {

/// Finalizer from splitmix64; used to whiten seeds and combine stream tags.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a root seed with stream tags (purpose id, step, slot, ...) into
/// one mixed seed. Distinct tag tuples give independent streams.
inline std::uint64_t mix_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
  return h;
}

/// Deterministic RNG. Wraps mt19937_64 (standardized output sequence) and
/// derives all variates from raw 64-bit draws so results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng derive(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
    return Rng(mix_seed(root, tags));
  }

  std::uint64_t u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Multiply-shift; bias is O(n / 2^64).
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (second value cached).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Normal truncated to mu +- 2 sigma by resampling.
  double trunc_normal(double mu, double sigma) {
    double x;
    do {
      x = normal();
    } while (x < -2.0 || x > 2.0);
    return mu + sigma * x;
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Stream purpose tags. Keep values stable: they feed seed derivation and
/// therefore the bit-exact reproducibility of runs.
enum StreamTag : std::uint64_t {
  kStreamInit = 1,
  kStreamTrainScene = 2,
  kStreamShuffle = 3,
  kStreamViews = 4,
  kStreamPoints = 5,
  kStreamPhoto = 6,
  kStreamEvalTrainScene = 7,
  kStreamEvalTestScene = 8,
  kStreamProbe = 9,
};

}  // namespace densedino
