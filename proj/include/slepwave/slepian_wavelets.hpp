#pragma once

// Scale-discretised wavelets on the Slepian line.
//
// The index p of the Slepian basis is tiled by smooth generating functions:
// wavelet j is kappa_lambda(p / lambda^j), supported on [lambda^{j-1},
// lambda^{j+1}], and the scaling filter eta_lambda(p / lambda^J0) covers the
// remaining low indices. Their squares telescope to one for every p, which is
// what makes analysis followed by synthesis the identity.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slepwave/errors.hpp"
#include "slepwave/slepian_basis.hpp"

namespace slepwave {

// C-infinity bump supported on [-1, 1].
inline double schwartz_s(double t) {
  if (t <= -1.0 || t >= 1.0) return 0.0;
  return std::exp(1.0 / (t * t - 1.0));
}

inline void check_lambda(double lambda) {
  if (!(lambda > 1.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be a finite real > 1");
  }
}

// The bump mapped onto [1/lambda, 1].
inline double s_lambda(double t, double lambda) {
  check_lambda(lambda);
  return schwartz_s(2.0 * lambda / (lambda - 1.0) * (t - 1.0 / lambda) - 1.0);
}

// k_lambda(t) = int_t^1 s_lambda^2(u)/u du / int_{1/lambda}^1 s_lambda^2(u)/u du.
// Memoises values since a filter bank only ever asks for t = p / lambda^j.
class KLambda {
 public:
  explicit KLambda(double lambda) : lambda_(lambda) {
    check_lambda(lambda);
    norm_ = integral(1.0 / lambda_);
    if (!(norm_ > 0.0) || !std::isfinite(norm_)) {
      throw NumericalError("k_lambda: normalising integral is not positive and finite");
    }
  }

  double lambda() const { return lambda_; }

  double operator()(double t) const {
    if (t <= 1.0 / lambda_) return 1.0;
    if (t >= 1.0) return 0.0;
    if (auto it = cache_.find(t); it != cache_.end()) return it->second;
    const double v = std::clamp(integral(t) / norm_, 0.0, 1.0);
    cache_.emplace(t, v);
    return v;
  }

 private:
  double integral(double from) const {
    auto integrand = [this](double u) {
      const double s = s_lambda(u, lambda_);
      return s * s / u;
    };
    double error = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, from, 1.0, 12, 1e-12, &error);
    if (!std::isfinite(v)) throw NumericalError("k_lambda: non-finite quadrature result");
    return v;
  }

  double lambda_;
  double norm_;
  mutable std::map<double, double> cache_;
};

inline double k_lambda(double t, double lambda) { return KLambda(lambda)(t); }

inline double kappa_lambda(double t, double lambda) {
  const KLambda k(lambda);
  return std::sqrt(std::max(k(t / lambda) - k(t), 0.0));
}

inline double eta_lambda(double t, double lambda) { return std::sqrt(KLambda(lambda)(t)); }

struct TilingParams {
  double lambda = 3.0;
  int J0 = 0;
  std::size_t P_max = 1;  // tiling domain: ceil(N) for a region, L^2 for the sphere

  // Smallest J with lambda^J >= P_max, i.e. ceil(log_lambda(P_max)) without
  // rounding surprises at exact powers.
  int J() const {
    check_lambda(lambda);
    int j = 0;
    while (std::pow(lambda, j) < static_cast<double>(P_max)) ++j;
    return j;
  }

  void validate() const {
    check_lambda(lambda);
    if (P_max < 1) throw std::invalid_argument("tiling: P_max must be >= 1");
    if (J0 < 0) throw std::invalid_argument("tiling: J0 must be >= 0");
    if (J0 >= J()) {
      throw std::invalid_argument("tiling: J0=" + std::to_string(J0) + " must be below J=" +
                                  std::to_string(J()) + " for P_max=" + std::to_string(P_max));
    }
  }
};

struct FilterBank {
  TilingParams params;
  int J = 0;
  std::vector<double> scaling;                // Phi_p at index p-1
  std::vector<std::vector<double>> wavelets;  // Psi^j_p at [j - J0][p-1]

  std::size_t size() const { return scaling.size(); }
  int scale_count() const { return static_cast<int>(wavelets.size()); }
  const std::vector<double>& wavelet(int j) const {
    return wavelets.at(static_cast<std::size_t>(j - params.J0));
  }

  // |Phi_p|^2 + sum_j |Psi^j_p|^2 - 1, largest magnitude over p.
  double admissibility_residual() const {
    double worst = 0.0;
    for (std::size_t p = 0; p < scaling.size(); ++p) {
      double s = scaling[p] * scaling[p];
      for (const auto& w : wavelets) s += w[p] * w[p];
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }
};

inline FilterBank build_filter_bank(const TilingParams& params) {
  params.validate();
  const KLambda k(params.lambda);
  FilterBank bank;
  bank.params = params;
  bank.J = params.J();
  const std::size_t P = params.P_max;
  bank.scaling.resize(P);
  bank.wavelets.assign(static_cast<std::size_t>(bank.J - params.J0 + 1), std::vector<double>(P));
  auto arg = [&](std::size_t p, int j) { return static_cast<double>(p) / std::pow(params.lambda, j); };
  for (std::size_t p = 1; p <= P; ++p) {
    bank.scaling[p - 1] = std::sqrt(k(arg(p, params.J0)));
    for (int j = params.J0; j <= bank.J; ++j) {
      bank.wavelets[static_cast<std::size_t>(j - params.J0)][p - 1] =
          std::sqrt(std::max(k(arg(p, j + 1)) - k(arg(p, j)), 0.0));
    }
  }
  if (const double r = bank.admissibility_residual(); r > 1e-10) {
    std::ostringstream msg;
    msg << "filter bank violates admissibility by " << r;
    throw NumericalError(msg.str());
  }
  return bank;
}

struct WaveletCoefficients {
  int L = 0;
  int J0 = 0;
  std::vector<complex> scaling;                // W^Phi_p
  std::vector<std::vector<complex>> wavelets;  // W^{Psi j}_p at [j - J0]
  std::size_t dropped = 0;                     // input coefficients beyond P_max

  int J() const { return J0 + static_cast<int>(wavelets.size()) - 1; }
};

// W^phi_p = phi_p conj(f_p) for the scaling filter and every wavelet.
// Inputs shorter than P_max are zero-padded; longer ones are cut and the
// count is reported in `dropped`.
inline WaveletCoefficients wavelet_analysis(const SlepianCoeffs& f, const FilterBank& bank) {
  const std::size_t P = bank.size();
  if (P != bank.params.P_max) throw std::invalid_argument("wavelet_analysis: malformed filter bank");
  WaveletCoefficients w;
  w.L = f.L;
  w.J0 = bank.params.J0;
  w.dropped = f.size() > P ? f.size() - P : 0;
  auto input = [&](std::size_t p) { return p < f.size() ? f.values[p] : complex{}; };
  w.scaling.resize(P);
  for (std::size_t p = 0; p < P; ++p) w.scaling[p] = bank.scaling[p] * std::conj(input(p));
  w.wavelets.resize(bank.wavelets.size());
  for (std::size_t s = 0; s < bank.wavelets.size(); ++s) {
    w.wavelets[s].resize(P);
    for (std::size_t p = 0; p < P; ++p) {
      w.wavelets[s][p] = bank.wavelets[s][p] * std::conj(input(p));
    }
  }
  return w;
}

// f_p = conj(W^Phi_p) Phi_p + sum_j conj(W^{Psi j}_p) Psi^j_p.
inline SlepianCoeffs wavelet_synthesis(const WaveletCoefficients& w, const FilterBank& bank) {
  const std::size_t P = bank.size();
  if (w.J0 != bank.params.J0 || w.wavelets.size() != bank.wavelets.size()) {
    throw std::invalid_argument("wavelet_synthesis: scale range [" + std::to_string(w.J0) + ", " +
                                std::to_string(w.J()) + "] does not match filter bank [" +
                                std::to_string(bank.params.J0) + ", " + std::to_string(bank.J) +
                                "]");
  }
  if (w.scaling.size() != P) {
    throw std::invalid_argument("wavelet_synthesis: coefficient length does not match P_max");
  }
  SlepianCoeffs f{w.L, std::vector<complex>(P)};
  for (std::size_t p = 0; p < P; ++p) {
    complex acc = std::conj(w.scaling[p]) * bank.scaling[p];
    for (std::size_t s = 0; s < bank.wavelets.size(); ++s) {
      if (w.wavelets[s].size() != P) {
        throw std::invalid_argument("wavelet_synthesis: coefficient length does not match P_max");
      }
      acc += std::conj(w.wavelets[s][p]) * bank.wavelets[s][p];
    }
    f.values[p] = acc;
  }
  return f;
}

// ||phi||^2 = sum_p |phi_p|^2, by orthonormality of the Slepian functions.
inline double wavelet_energy(std::span<const double> filter, const SlepianBasis& basis) {
  if (filter.size() > basis.count()) {
    throw std::invalid_argument("wavelet_energy: filter longer than the basis");
  }
  double e = 0.0;
  for (double v : filter) e += v * v;
  return e;
}

// Slepian coefficients of a real filter, as a coefficient vector.
inline SlepianCoeffs filter_coeffs(std::span<const double> filter, int L) {
  SlepianCoeffs c{L, std::vector<complex>(filter.size())};
  for (std::size_t p = 0; p < filter.size(); ++p) c.values[p] = filter[p];
  return c;
}

}  // namespace slepwave
