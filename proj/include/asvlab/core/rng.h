// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORE_RNG_H_
#define ASVLAB_CORE_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace asvlab {

// splitmix64 step; the basis for all seed derivation in the project.
inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (seed, tag). Tags are small
// integers or hashed strings; chaining DeriveSeed calls fans one global
// seed out to per-stage and per-item streams.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t tag) {
  return SplitMix64(seed ^ SplitMix64(tag));
}

uint64_t HashTag(const std::string& tag);

inline uint64_t DeriveSeed(uint64_t seed, const std::string& tag) {
  return DeriveSeed(seed, HashTag(tag));
}

// Thin deterministic wrapper around mt19937_64.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double Uniform() { return uniform_(engine_); }                 // [0,1)
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Gaussian() { return normal_(engine_); }
  // Uniform integer in [0, n). n must be > 0.
  uint64_t Index(uint64_t n) {
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace asvlab

#endif  // ASVLAB_CORE_RNG_H_
