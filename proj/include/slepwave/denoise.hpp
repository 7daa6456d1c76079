#pragma once

// White noise in Slepian space, the position-dependent noise level of each
// wavelet/scaling field, and hard-thresholding denoising.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slepwave/slepian_basis.hpp"
#include "slepwave/slepian_wavelets.hpp"
#include "slepwave/sphere_core.hpp"

namespace slepwave {

enum class NoiseKind { match_signal, real, complex };

struct NoiseModel {
  double sigma = 1.0;  // per-coefficient standard deviation
  std::uint64_t seed = 0;
  NoiseKind kind = NoiseKind::match_signal;
};

inline bool is_real(const SlepianCoeffs& c) {
  for (const auto& v : c.values) {
    if (v.imag() != 0.0) return false;
  }
  return true;
}

// x_p = s_p + n_p, n_p i.i.d. zero mean with E|n_p|^2 = sigma^2. Real input
// gets real Gaussian noise, complex input circular complex Gaussian noise,
// unless the model forces one kind.
inline SlepianCoeffs add_white_noise(const SlepianCoeffs& s, const NoiseModel& model) {
  if (!(model.sigma >= 0.0) || !std::isfinite(model.sigma)) {
    throw std::invalid_argument("add_white_noise: sigma must be finite and non-negative");
  }
  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SlepianCoeffs x = s;
  const bool real = model.kind == NoiseKind::match_signal ? is_real(s) : model.kind == NoiseKind::real;
  if (real) {
    for (auto& v : x.values) v += model.sigma * normal(rng);
  } else {
    const double scale = model.sigma / std::sqrt(2.0);
    for (auto& v : x.values) {
      const double re = normal(rng);
      const double im = normal(rng);
      v += scale * complex(re, im);
    }
  }
  return x;
}

inline double energy(std::span<const complex> c) {
  double e = 0.0;
  for (const auto& v : c) e += std::norm(v);
  return e;
}

// sigma with sigma^2 = ||s||^2 / (P 10^{snr_db/10}), so that E[SNR] hits snr_db.
inline double target_snr_sigma(const SlepianCoeffs& s, double snr_db) {
  const double e = energy(s.values);
  if (s.size() == 0 || !(e > 0.0)) {
    throw std::invalid_argument("target_snr_sigma: signal has zero energy");
  }
  return std::sqrt(e / (static_cast<double>(s.size()) * std::pow(10.0, snr_db / 10.0)));
}

// 10 log10(||s||^2 / ||x - s||^2); +inf when x == s.
inline double snr(const SlepianCoeffs& x, const SlepianCoeffs& s) {
  if (x.size() != s.size()) {
    throw std::invalid_argument("snr: coefficient lengths differ (" + std::to_string(x.size()) +
                                " vs " + std::to_string(s.size()) + ")");
  }
  double err = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) err += std::norm(x.values[p] - s.values[p]);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(energy(s.values) / err);
}

// Samples of the first P Slepian functions on a grid, with the matching
// projection back to Slepian coefficients. The basis must outlive the sampler.
class SlepianSampler {
 public:
  SlepianSampler(const SlepianBasis& basis, GridSpec grid, std::size_t P)
      : basis_(&basis), transform_(std::move(grid)), P_(P) {
    if (transform_.grid().L != basis.L) {
      throw std::invalid_argument("SlepianSampler: grid bandlimit does not match basis");
    }
    if (P == 0 || P > basis.count()) throw std::invalid_argument("SlepianSampler: bad truncation");
    const GridSpec& g = transform_.grid();
    samples_.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(P));
    HarmonicCoeffs a(basis.L);
    for (std::size_t p = 0; p < P; ++p) {
      const auto col = basis.eigenvectors.col(static_cast<Eigen::Index>(p));
      std::copy(col.data(), col.data() + col.size(), a.values.begin());
      const SampledField s = transform_.inverse(a);
      for (std::size_t n = 0; n < s.values.size(); ++n) {
        samples_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)) = s.values[n];
      }
    }
  }

  const GridSpec& grid() const { return transform_.grid(); }
  std::size_t truncation() const { return P_; }
  const Eigen::MatrixXcd& samples() const { return samples_; }

  // sum_p c_p S_p(w) on the grid.
  SampledField render(std::span<const complex> c) const {
    if (c.size() != P_) throw std::invalid_argument("SlepianSampler::render: length mismatch");
    SampledField out(grid());
    const Eigen::Map<const Eigen::VectorXcd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
    Eigen::Map<Eigen::VectorXcd> ov(out.values.data(), static_cast<Eigen::Index>(out.values.size()));
    ov.noalias() = samples_ * cv;
    return out;
  }

  // Forward SHT, then harmonic -> Slepian, keeping the first P coefficients.
  std::vector<complex> project(const SampledField& f) const {
    return harmonic_to_slepian(transform_.forward(f), *basis_, P_).values;
  }

  // sqrt(sum_p |phi_p|^2 |S_p(w)|^2): the noise standard deviation of a
  // filtered field per unit sigma.
  SampledField unit_noise_std(std::span<const double> filter) const {
    if (filter.size() != P_) {
      throw std::invalid_argument("wavelet_noise_std: filter length " + std::to_string(filter.size()) +
                                  " does not match truncation " + std::to_string(P_));
    }
    SampledField out(grid());
    for (Eigen::Index n = 0; n < samples_.rows(); ++n) {
      double v = 0.0;
      for (Eigen::Index p = 0; p < samples_.cols(); ++p) {
        v += filter[static_cast<std::size_t>(p)] * filter[static_cast<std::size_t>(p)] *
             std::norm(samples_(n, p));
      }
      out.values[static_cast<std::size_t>(n)] = std::sqrt(v);
    }
    return out;
  }

 private:
  const SlepianBasis* basis_;
  SphericalTransform transform_;
  std::size_t P_;
  Eigen::MatrixXcd samples_;
};

// sigma^phi(w) = sigma sqrt(sum_p |phi_p|^2 |S_p(w)|^2).
inline SampledField wavelet_noise_std(const NoiseModel& model, std::span<const double> filter,
                                      const SlepianBasis& basis, const GridSpec& grid) {
  const SlepianSampler sampler(basis, grid, filter.size());
  SampledField out = sampler.unit_noise_std(filter);
  for (auto& v : out.values) v *= model.sigma;
  return out;
}

struct ThresholdField {
  double n_sigma = 0.0;
  SampledField field;  // N_sigma sigma^phi(w)
};

inline ThresholdField make_threshold(double n_sigma, const SampledField& noise_std) {
  if (!(n_sigma >= 0.0)) throw std::invalid_argument("threshold: N_sigma must be >= 0");
  ThresholdField t{n_sigma, noise_std};
  for (auto& v : t.field.values) v = n_sigma * v.real();
  return t;
}

struct ThresholdStats {
  std::size_t kept = 0;
  std::size_t total = 0;
};

// Zero where |X(w)| < T(w), unchanged otherwise.
inline SampledField hard_threshold(const SampledField& X, const ThresholdField& T,
                                   ThresholdStats* stats = nullptr) {
  if (!X.grid.same_layout(T.field.grid) || X.values.size() != T.field.values.size()) {
    throw std::invalid_argument("hard_threshold: field and threshold grids differ");
  }
  SampledField out = X;
  ThresholdStats s{0, X.values.size()};
  for (std::size_t n = 0; n < out.values.size(); ++n) {
    if (std::abs(out.values[n]) < T.field.values[n].real()) {
      out.values[n] = complex{};
    } else {
      ++s.kept;
    }
  }
  if (stats != nullptr) *stats = s;
  return out;
}

struct ScaleReport {
  std::string name;  // "scaling" or "j<scale>"
  ThresholdStats stats;
};

struct DenoiseResult {
  SlepianCoeffs denoised;
  std::vector<ScaleReport> scales;
};

// Analysis, rendering of each scaling/wavelet field, spatial hard
// thresholding at N_sigma sigma^phi(w), projection back to Slepian space, and
// synthesis. The scaling field is thresholded like the wavelets.
class Denoiser {
 public:
  Denoiser(const SlepianBasis& basis, FilterBank bank, GridSpec grid)
      : bank_(std::move(bank)), sampler_(basis, std::move(grid), bank_.size()) {
    unit_std_.push_back(sampler_.unit_noise_std(bank_.scaling));
    for (const auto& w : bank_.wavelets) unit_std_.push_back(sampler_.unit_noise_std(w));
  }

  const FilterBank& bank() const { return bank_; }
  const SlepianSampler& sampler() const { return sampler_; }

  DenoiseResult run(const SlepianCoeffs& x, double sigma, double n_sigma) const {
    if (!(sigma >= 0.0)) throw std::invalid_argument("denoise: sigma must be >= 0");
    WaveletCoefficients w = wavelet_analysis(x, bank_);
    DenoiseResult result;
    auto process = [&](std::vector<complex>& coeffs, const SampledField& unit_std,
                       std::string name) {
      SampledField scaled = unit_std;
      for (auto& v : scaled.values) v *= sigma;
      const ThresholdField t = make_threshold(n_sigma, scaled);
      ThresholdStats stats;
      const SampledField kept = hard_threshold(sampler_.render(coeffs), t, &stats);
      coeffs = sampler_.project(kept);
      result.scales.push_back({std::move(name), stats});
    };
    process(w.scaling, unit_std_[0], "scaling");
    for (std::size_t s = 0; s < w.wavelets.size(); ++s) {
      process(w.wavelets[s], unit_std_[s + 1], "j" + std::to_string(bank_.params.J0 + static_cast<int>(s)));
    }
    result.denoised = wavelet_synthesis(w, bank_);
    return result;
  }

 private:
  FilterBank bank_;
  SlepianSampler sampler_;
  std::vector<SampledField> unit_std_;
};

inline DenoiseResult denoise_pipeline(const SlepianCoeffs& x, const FilterBank& bank,
                                      const SlepianBasis& basis, const NoiseModel& model,
                                      double n_sigma) {
  return Denoiser(basis, bank, make_grid(basis.L)).run(x, model.sigma, n_sigma);
}

}  // namespace slepwave
