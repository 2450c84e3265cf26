#include "csa/rng.hpp"

#include <cmath>

namespace csa {

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix(key_ ^ mix(stream + 0x3c6ef372fe94f82bULL)), 0);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  // Rejection on the top of the range keeps the result exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return r % n;
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  // Inversion by sequential search; large means are split into chunks so that
  // exp(-chunk) stays well inside the normal range.
  constexpr double kChunk = 400.0;
  std::uint64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double lam = remaining > kChunk ? kChunk : remaining;
    remaining -= lam;
    double p = std::exp(-lam);
    double cdf = p;
    const double u = uniform();
    std::uint64_t k = 0;
    while (u > cdf && p > 0.0) {
      ++k;
      p *= lam / static_cast<double>(k);
      cdf += p;
    }
    total += k;
  }
  return total;
}

}  // namespace csa
