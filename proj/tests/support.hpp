#pragma once

// Seeded generators and small numeric helpers shared by the test binaries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "slepwave/slepian_basis.hpp"
#include "slepwave/sphere_core.hpp"

namespace testing_support {

using slepwave::complex;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return normal_(rng_); }
  complex cnormal() {
    const double re = normal();
    return {re, normal()};
  }

  // Uniform point on the sphere.
  void point(double& theta, double& phi) {
    theta = std::acos(uniform(-1.0, 1.0));
    phi = uniform(0.0, 2.0 * slepwave::pi);
  }

  std::vector<complex> cvector(std::size_t n) {
    std::vector<complex> v(n);
    for (auto& x : v) x = cnormal();
    return v;
  }

  slepwave::HarmonicCoeffs coeffs(int L) {
    slepwave::HarmonicCoeffs a(L);
    for (auto& v : a.values) v = cnormal();
    return a;
  }

  slepwave::SlepianCoeffs slepian(int L, std::size_t P) { return {L, cvector(P)}; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double norm2(const std::vector<complex>& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

inline double rel_error(const std::vector<complex>& a, const std::vector<complex>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

inline double max_abs_diff(const std::vector<complex>& a, const std::vector<complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Y_lm from the standard library's spherical Legendre function, which
// carries the Condon-Shortley phase.
inline complex ylm_reference(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  const complex pos =
      std::sph_legendre(static_cast<unsigned>(l), static_cast<unsigned>(am), theta) *
      std::polar(1.0, am * phi);
  if (m >= 0) return pos;
  return (am % 2 ? -1.0 : 1.0) * std::conj(pos);
}

}  // namespace testing_support
