#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bernfit {

// Stream roles. Each role gets an independent stream so that adding draws
// for one purpose never shifts the draws of another.
enum class StreamRole : std::uint64_t {
  kCovariate = 1,
  kNoise = 2,
  kSparsePattern = 3,
  kBootstrap = 4,
  kProjectionDraw = 5,
  kFolds = 6,
  kGeneric = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hashes an ordered key (seed, replication, subject, role, ...) into a
// 64-bit stream seed. Streams are a pure function of the key, so the order
// in which parallel workers request them does not matter.
inline std::uint64_t stream_seed(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::initializer_list<std::uint64_t> key) : engine_(stream_seed(key)) {}

  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  // Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bernfit
