// Deterministic randomness with an explicit algorithm tag.
//
// std::normal_distribution is implementation defined, so Gaussian samples are
// produced by an explicit Box-Muller transform on top of mt19937_64. Streams
// are therefore reproducible across compilers and platforms for a fixed seed,
// which the result records rely on.
#pragma once

#include "hoqt/types.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace hoqt {

class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  static constexpr const char* kAlgorithm = "mt19937_64/box-muller-v1";

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal N(0, 1).
  double normal() {
    if (cached_) {
      double z = *cached_;
      cached_.reset();
      return z;
    }
    // u1 in (0, 1] so that log(u1) is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    return r * std::cos(a);
  }

  // Complex Gaussian with i.i.d. N(0,1) real and imaginary parts.
  cplx cnormal() {
    double re = normal();
    double im = normal();
    return {re, im};
  }

  std::uint64_t raw() { return gen_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64 in all
    // uses, so the bias is far below statistical test resolution.
    return gen_() % n;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  std::optional<double> cached_;
};

// D x d complex Gaussian matrix, entries drawn row major.
Mat gaussian_matrix(std::int64_t rows, std::int64_t cols, RandomSource& rng);

// Haar-distributed isometry from C^d into C^D via QR of a Gaussian matrix
// with the R-diagonal phase correction. Satisfies V^dag V = 1 to 1e-12.
Mat haar_isometry(std::int64_t d, std::int64_t D, RandomSource& rng);

inline Mat haar_unitary(std::int64_t n, RandomSource& rng) {
  return haar_isometry(n, n, rng);
}

}  // namespace hoqt
