#pragma once

// Translation as a product of basis functions, and the sifting convolution
// that follows from it. Both reduce to entrywise products in coefficient
// space, for the harmonic basis and for any orthonormal basis built from it.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slepwave/slepian_basis.hpp"
#include "slepwave/sphere_core.hpp"

namespace slepwave {

class BasisHandle {
 public:
  enum class Kind { harmonic, slepian };

  static BasisHandle harmonic(int L) {
    if (L < 1) throw std::invalid_argument("BasisHandle: bandlimit must be >= 1");
    BasisHandle b;
    b.kind_ = Kind::harmonic;
    b.L_ = L;
    b.size_ = harmonic_count(L);
    return b;
  }

  // The first P Slepian functions of a basis.
  static BasisHandle slepian(std::shared_ptr<const SlepianBasis> basis, std::size_t P) {
    if (!basis) throw std::invalid_argument("BasisHandle: null Slepian basis");
    if (P == 0 || P > basis->count()) {
      throw std::invalid_argument("BasisHandle: truncation " + std::to_string(P) +
                                  " outside [1, " + std::to_string(basis->count()) + "]");
    }
    BasisHandle b;
    b.kind_ = Kind::slepian;
    b.L_ = basis->L;
    b.size_ = P;
    b.basis_ = std::move(basis);
    return b;
  }

  Kind kind() const { return kind_; }
  int bandlimit() const { return L_; }
  std::size_t size() const { return size_; }
  const SlepianBasis* slepian_basis() const { return basis_.get(); }

  // Every basis function evaluated at one point.
  std::vector<complex> evaluate(double theta, double phi) const {
    auto y = ylm_all(L_, theta, phi);
    if (kind_ == Kind::harmonic) return y;
    const Eigen::Map<const Eigen::VectorXcd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    std::vector<complex> out(size_);
    Eigen::Map<Eigen::VectorXcd> ov(out.data(), static_cast<Eigen::Index>(size_));
    ov.noalias() = basis_->eigenvectors.leftCols(static_cast<Eigen::Index>(size_)).transpose() * yv;
    return out;
  }

  complex evaluate(std::size_t k, double theta, double phi) const {
    if (k >= size_) throw std::out_of_range("BasisHandle: basis index out of range");
    if (kind_ == Kind::harmonic) {
      int l, m;
      flat_to_lm(k, l, m);
      return ylm_eval(l, m, theta, phi);
    }
    return evaluate(theta, phi)[k];
  }

  // Field sum_k c_k B_k sampled on a grid.
  SampledField synthesize(std::span<const complex> c, const GridSpec& grid) const {
    check_length(c.size(), "synthesize");
    if (kind_ == Kind::harmonic) {
      HarmonicCoeffs a(L_);
      std::copy(c.begin(), c.end(), a.values.begin());
      return inverse_sht(a, grid);
    }
    SlepianCoeffs s{L_, std::vector<complex>(c.begin(), c.end())};
    return slepian_synthesis(s, *basis_, grid);
  }

  // Coefficients <f, B_k> under the grid quadrature.
  std::vector<complex> analyze(const SampledField& f) const {
    HarmonicCoeffs a = forward_sht(f);
    if (a.L != L_) throw std::invalid_argument("BasisHandle::analyze: bandlimit mismatch");
    if (kind_ == Kind::harmonic) return a.values;
    return harmonic_to_slepian(a, *basis_, size_).values;
  }

  void check_length(std::size_t n, const char* what) const {
    if (n != size_) {
      throw std::invalid_argument(std::string(what) + ": coefficient length " + std::to_string(n) +
                                  " does not match basis size " + std::to_string(size_));
    }
  }

 private:
  BasisHandle() = default;
  Kind kind_ = Kind::harmonic;
  int L_ = 0;
  std::size_t size_ = 0;
  std::shared_ptr<const SlepianBasis> basis_;
};

// (T_w' f)_k = f_k B_k(w').
inline std::vector<complex> translate_coeffs(std::span<const complex> c, double theta,
                                             double phi, const BasisHandle& b) {
  b.check_length(c.size(), "translate_coeffs");
  const auto values = b.evaluate(theta, phi);
  std::vector<complex> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k] * values[k];
  return out;
}

// (f (*) g)_k = f_k conj(g_k).
inline std::vector<complex> sift_convolve(std::span<const complex> f, std::span<const complex> g,
                                          const BasisHandle& b) {
  if (f.size() != g.size()) {
    throw std::invalid_argument("sift_convolve: operand lengths differ (" +
                                std::to_string(f.size()) + " vs " + std::to_string(g.size()) + ")");
  }
  b.check_length(f.size(), "sift_convolve");
  std::vector<complex> out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k] * std::conj(g[k]);
  return out;
}

}  // namespace slepwave
