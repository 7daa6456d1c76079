#pragma once

// Sampling grids, quadrature and spherical harmonic transforms at bandlimit L.
//
// Harmonics are orthonormal with the Condon-Shortley phase, so that
// conj(Y_lm) = (-1)^m Y_l(-m). Coefficients are stored flat at l^2 + l + m.
//
// The grid places L Gauss-Legendre nodes in cos(theta) and 2L-1 equispaced
// nodes in phi. The resulting product rule integrates every product of two
// bandlimit-L functions exactly, which keeps all identity checks at roundoff.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace slepwave {

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double four_pi = 4.0 * std::numbers::pi;

inline constexpr std::size_t flat_index(int l, int m) {
  return static_cast<std::size_t>(l * l + l + m);
}

inline constexpr std::size_t harmonic_count(int L) {
  return static_cast<std::size_t>(L) * static_cast<std::size_t>(L);
}

// Inverse of flat_index.
inline void flat_to_lm(std::size_t k, int& l, int& m) {
  l = static_cast<int>(std::sqrt(static_cast<double>(k)));
  while (static_cast<std::size_t>((l + 1) * (l + 1)) <= k) ++l;
  while (static_cast<std::size_t>(l * l) > k) --l;
  m = static_cast<int>(k) - l * l - l;
}

struct GridSpec {
  int L = 0;
  int n_theta = 0;
  int n_phi = 0;
  std::vector<double> theta;    // ring colatitudes, ascending
  std::vector<double> phi;      // ring longitudes in [0, 2pi)
  std::vector<double> weights;  // per-sample quadrature weight of each ring (sr)

  std::size_t size() const {
    return static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_phi) +
           static_cast<std::size_t>(j);
  }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w * n_phi;
    return s;
  }
  bool same_layout(const GridSpec& o) const {
    return L == o.L && n_theta == o.n_theta && n_phi == o.n_phi;
  }
};

struct SampledField {
  GridSpec grid;
  std::vector<complex> values;  // theta-major, n_theta x n_phi

  SampledField() = default;
  explicit SampledField(GridSpec g) : grid(std::move(g)), values(grid.size()) {}

  complex& operator()(int i, int j) { return values[grid.index(i, j)]; }
  const complex& operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

struct HarmonicCoeffs {
  int L = 0;
  std::vector<complex> values;

  HarmonicCoeffs() = default;
  explicit HarmonicCoeffs(int bandlimit) : L(bandlimit), values(harmonic_count(bandlimit)) {
    if (bandlimit < 0) throw std::invalid_argument("HarmonicCoeffs: negative bandlimit");
  }

  complex& operator()(int l, int m) { return values[flat_index(l, m)]; }
  const complex& operator()(int l, int m) const { return values[flat_index(l, m)]; }

  // True when conj(f_lm) = (-1)^m f_l(-m) for every (l, m), i.e. the field is real.
  bool has_real_symmetry(double tol = 1e-12) const {
    for (int l = 0; l < L; ++l) {
      for (int m = -l; m <= l; ++m) {
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        if (std::abs(std::conj((*this)(l, m)) - sign * (*this)(l, -m)) > tol) return false;
      }
    }
    return true;
  }
};

// Orthonormalised associated Legendre values lambda_l^m(theta), 0 <= m <= l < L,
// packed at l(l+1)/2 + m. Y_lm(theta, phi) = lambda_l^m(theta) e^{i m phi} for m >= 0.
// Ascending three-term recursion in l; no factorials, so no overflow at L = 128.
inline std::vector<double> legendre_table(int L, double theta) {
  std::vector<double> out(static_cast<std::size_t>(L) * (L + 1) / 2, 0.0);
  if (L <= 0) return out;
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  auto at = [&](int l, int m) -> double& {
    return out[static_cast<std::size_t>(l) * (l + 1) / 2 + m];
  };
  double pmm = 1.0 / std::sqrt(four_pi);
  for (int m = 0; m < L; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    at(m, m) = pmm;
    if (m + 1 < L) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * pmm;
    for (int l = m + 2; l < L; ++l) {
      const double ll = static_cast<double>(l);
      const double mm = static_cast<double>(m);
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) /
                                 (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
    }
  }
  return out;
}

inline std::size_t legendre_index(int l, int m) {
  return static_cast<std::size_t>(l) * (l + 1) / 2 + static_cast<std::size_t>(m);
}

inline complex ylm_eval(int l, int m, double theta, double phi) {
  if (l < 0 || std::abs(m) > l) {
    throw std::domain_error("ylm_eval: require 0 <= |m| <= l, got l=" + std::to_string(l) +
                            " m=" + std::to_string(m));
  }
  if (!(theta >= 0.0 && theta <= pi)) {
    throw std::domain_error("ylm_eval: theta outside [0, pi]");
  }
  const int am = std::abs(m);
  const double lam = legendre_table(l + 1, theta)[legendre_index(l, am)];
  const complex value = lam * std::polar(1.0, am * phi);
  if (m >= 0) return value;
  return (am % 2 == 0 ? 1.0 : -1.0) * std::conj(value);
}

// All Y_lm(theta, phi) for l < L at one point, flat-indexed.
inline std::vector<complex> ylm_all(int L, double theta, double phi) {
  std::vector<complex> out(harmonic_count(L));
  const auto lam = legendre_table(L, theta);
  for (int m = 0; m < L; ++m) {
    const complex e = std::polar(1.0, m * phi);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    for (int l = m; l < L; ++l) {
      const complex y = lam[legendre_index(l, m)] * e;
      out[flat_index(l, m)] = y;
      if (m > 0) out[flat_index(l, -m)] = sign * std::conj(y);
    }
  }
  return out;
}

// Gauss-Legendre nodes (descending) and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p1 = 1.0, p2 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
    }
    dp = n * (z * p1 - p2) / (z * z - 1.0);
    nodes[i] = z;
    nodes[n - 1 - i] = -z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

inline GridSpec make_grid(int L) {
  if (L < 1) throw std::invalid_argument("make_grid: bandlimit must be >= 1");
  GridSpec g;
  g.L = L;
  g.n_theta = L;
  g.n_phi = 2 * L - 1;
  std::vector<double> x, w;
  gauss_legendre(L, x, w);
  g.theta.resize(L);
  g.weights.resize(L);
  const double dphi = 2.0 * pi / g.n_phi;
  for (int i = 0; i < L; ++i) {
    g.theta[i] = std::acos(x[i]);
    g.weights[i] = w[i] * dphi;
  }
  g.phi.resize(g.n_phi);
  for (int j = 0; j < g.n_phi; ++j) g.phi[j] = j * dphi;
  return g;
}

// Reusable transform plan: Legendre tables per ring and the phi phase table.
class SphericalTransform {
 public:
  explicit SphericalTransform(GridSpec grid) : grid_(std::move(grid)) {
    const int L = grid_.L;
    legendre_.reserve(grid_.n_theta);
    for (double t : grid_.theta) legendre_.push_back(legendre_table(L, t));
    const int n_m = 2 * L - 1;
    phase_.resize(static_cast<std::size_t>(grid_.n_phi) * n_m);
    for (int j = 0; j < grid_.n_phi; ++j) {
      for (int m = -(L - 1); m <= L - 1; ++m) {
        phase_[static_cast<std::size_t>(j) * n_m + (m + L - 1)] = std::polar(1.0, m * grid_.phi[j]);
      }
    }
  }

  const GridSpec& grid() const { return grid_; }

  HarmonicCoeffs forward(const SampledField& f) const {
    if (!f.grid.same_layout(grid_) || f.values.size() != grid_.size()) {
      throw std::invalid_argument("forward_sht: field dimensions do not match grid");
    }
    const int L = grid_.L;
    const int n_m = 2 * L - 1;
    HarmonicCoeffs out(L);
    std::vector<complex> ring(n_m);
    for (int i = 0; i < grid_.n_theta; ++i) {
      std::fill(ring.begin(), ring.end(), complex{});
      for (int j = 0; j < grid_.n_phi; ++j) {
        const complex v = f(i, j);
        const complex* ph = &phase_[static_cast<std::size_t>(j) * n_m];
        for (int k = 0; k < n_m; ++k) ring[k] += v * std::conj(ph[k]);
      }
      const auto& lam = legendre_[i];
      const double w = grid_.weights[i];
      for (int m = -(L - 1); m <= L - 1; ++m) {
        const int am = std::abs(m);
        const double sign = (m < 0 && am % 2 == 1) ? -1.0 : 1.0;
        const complex g = w * sign * ring[m + L - 1];
        for (int l = am; l < L; ++l) out(l, m) += lam[legendre_index(l, am)] * g;
      }
    }
    return out;
  }

  SampledField inverse(const HarmonicCoeffs& a) const {
    if (a.L > grid_.L) {
      throw std::invalid_argument("inverse_sht: coefficient bandlimit " + std::to_string(a.L) +
                                  " exceeds grid bandlimit " + std::to_string(grid_.L));
    }
    if (a.values.size() != harmonic_count(a.L)) {
      throw std::invalid_argument("inverse_sht: coefficient count does not match bandlimit");
    }
    const int L = grid_.L;
    const int La = a.L;
    const int n_m = 2 * L - 1;
    SampledField out(grid_);
    std::vector<complex> ring(n_m);
    for (int i = 0; i < grid_.n_theta; ++i) {
      std::fill(ring.begin(), ring.end(), complex{});
      const auto& lam = legendre_[i];
      for (int m = -(La - 1); m <= La - 1; ++m) {
        const int am = std::abs(m);
        const double sign = (m < 0 && am % 2 == 1) ? -1.0 : 1.0;
        complex acc{};
        for (int l = am; l < La; ++l) acc += a(l, m) * lam[legendre_index(l, am)];
        ring[m + L - 1] = sign * acc;
      }
      for (int j = 0; j < grid_.n_phi; ++j) {
        const complex* ph = &phase_[static_cast<std::size_t>(j) * n_m];
        complex acc{};
        for (int k = 0; k < n_m; ++k) acc += ring[k] * ph[k];
        out(i, j) = acc;
      }
    }
    return out;
  }

 private:
  GridSpec grid_;
  std::vector<std::vector<double>> legendre_;
  std::vector<complex> phase_;
};

inline HarmonicCoeffs forward_sht(const SampledField& f) {
  return SphericalTransform(f.grid).forward(f);
}

inline SampledField inverse_sht(const HarmonicCoeffs& a, const GridSpec& grid) {
  return SphericalTransform(grid).inverse(a);
}

// Unit vector for a point given in spherical coordinates.
inline void to_cartesian(double theta, double phi, double out[3]) {
  out[0] = std::sin(theta) * std::cos(phi);
  out[1] = std::sin(theta) * std::sin(phi);
  out[2] = std::cos(theta);
}

// Great-circle angle between two points.
inline double angular_distance(double t1, double p1, double t2, double p2) {
  double a[3], b[3];
  to_cartesian(t1, p1, a);
  to_cartesian(t2, p2, b);
  const double cx = a[1] * b[2] - a[2] * b[1];
  const double cy = a[2] * b[0] - a[0] * b[2];
  const double cz = a[0] * b[1] - a[1] * b[0];
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

}  // namespace slepwave
