#pragma once

#include <cstdint>
#include <initializer_list>

namespace retsim {

// splitmix64 finalizer; whitens keys and stream labels.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive accumulator for deriving stream labels from tuples.
constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (mix64(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

constexpr std::uint64_t combine_all(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x5851f42d4c957f2dULL;
  for (std::uint64_t v : parts) h = combine(h, v);
  return h;
}

constexpr std::uint64_t label(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
  return h;
}

// Philox2x64-10 counter-based generator.
//
// A stream is identified by (seed, stream label); draw k of a stream is a pure
// function of (seed, stream, k), so independent consumers never contend and
// results do not depend on scheduling. Streams derived from distinct labels
// are statistically independent.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ 0xa02bdbf7bb3c0a7ULL)), stream_(mix64(stream)) {}

  std::uint64_t next_u64() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    std::uint64_t x0 = counter_++, x1 = stream_, k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t hi = mulhi(kMul, x0), lo = kMul * x0;
      const std::uint64_t y0 = hi ^ k ^ x1;
      x1 = lo;
      x0 = y0;
      k += kWeyl;
    }
    spare_ = x1;
    have_ = true;
    return x0;
  }

  // Uniform in [0, 1); 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe to feed through logs and quantiles.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n); n >= 1.
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t draws_started() const { return counter_; }

 private:
  static constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
  static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mulhi(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(a) * b) >> 64);
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool have_ = false;
};

namespace streams {
inline constexpr std::uint64_t kCorpus = label("corpus");
inline constexpr std::uint64_t kQuery = label("query");
inline constexpr std::uint64_t kErasure = label("erasure");
inline constexpr std::uint64_t kBoundsQuery = label("bounds-query");
inline constexpr std::uint64_t kQmcShift = label("qmc-shift");
inline constexpr std::uint64_t kTokens = label("tokens");
inline constexpr std::uint64_t kScores = label("scores");
inline constexpr std::uint64_t kEmbed = label("embed");
}  // namespace streams

}  // namespace retsim
