#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rishp {

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the substream addressed by `path` under `master`. Distinct paths give
/// statistically independent streams, so work can be split across threads without
/// changing results.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(master);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Stream tags, so different consumers of one sample seed never collide.
enum class StreamTag : std::uint64_t {
  kChannel = 1,
  kFeeder = 2,
  kCeo = 3,
  kSplit = 4,
  kInit = 5,
  kShuffle = 6,
  kDropout = 7,
  kSample = 8,
  kRandomPhi = 9,
};

constexpr std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

/// Portable random source: mt19937_64 is fully specified by the standard, and the
/// transforms below avoid the implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cosine branch).
  double normal();

  /// Circularly symmetric complex Gaussian CN(0, variance).
  std::complex<double> complex_normal(double variance);

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace rishp
