#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace csa {

// Counter-based generator: the n-th output is a pure function of (key, n),
// so a stream can be reproduced or split without touching shared state.
//
// Stream splitting: Rng(seed).split(i) derives the key of child stream i by
// hashing (parent key, i). Ensembles give replicate i the stream split(i),
// which makes results independent of scheduling and thread count.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = kDefaultSeed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr std::uint64_t kDefaultSeed = 20241015ULL;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  Rng split(std::uint64_t stream) const;

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1]; safe to take the logarithm of.
  double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Unbiased integer on [0, n). Requires n > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  double exponential() { return -std::log1p(-uniform()); }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t poisson(double mean);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, int) : key_(key) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace csa
