#pragma once

// Deterministic low-discrepancy point sets: Halton with a seeded
// Cranley-Patterson rotation.

#include <array>
#include <cstdint>
#include <string>
#include <random>
#include <vector>

#include "hcalc/error.hpp"

namespace hcalc {

class Halton {
 public:
  Halton(std::size_t dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
    if (dim > kPrimes.size())
      throw DimensionError("Halton: dimension " + std::to_string(dim) + " exceeds " +
                           std::to_string(kPrimes.size()));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : shift_) s = u(rng);
  }

  std::size_t dim() const noexcept { return dim_; }

  /// i-th point of the rotated sequence in [0,1)^dim. Index 0 is skipped so
  /// the unrotated origin never appears.
  std::vector<double> point(std::uint64_t i) const {
    std::vector<double> p(dim_);
    fill(i, p.data());
    return p;
  }

  void fill(std::uint64_t i, double* out) const {
    for (std::size_t d = 0; d < dim_; ++d) {
      double x = radical_inverse(i + 1, kPrimes[d]) + shift_[d];
      if (x >= 1.0) x -= 1.0;
      out[d] = x;
    }
  }

  static double radical_inverse(std::uint64_t i, unsigned base) {
    const double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i) {
      r += f * static_cast<double>(i % base);
      i /= base;
      f *= inv;
    }
    return r;
  }

 private:
  static constexpr std::array<unsigned, 40> kPrimes = {
      2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
      47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
      109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

  std::size_t dim_;
  std::vector<double> shift_;
};

}  // namespace hcalc
