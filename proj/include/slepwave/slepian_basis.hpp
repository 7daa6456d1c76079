#pragma once

// Concentration matrix, Slepian eigenbasis and Slepian <-> harmonic transforms.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "slepwave/errors.hpp"
#include "slepwave/region.hpp"
#include "slepwave/sphere_core.hpp"

namespace slepwave {

struct ConcentrationMatrix {
  int L = 0;
  Region region;
  Eigen::MatrixXcd K;

  double trace() const { return K.diagonal().real().sum(); }
};

// Tolerances of the eigendecomposition contract.
inline constexpr double kEigenClampEps = 1e-14;
inline constexpr double kEigenRangeTol = 1e-10;
inline constexpr double kDegeneracyTol = 1e-12;
inline constexpr double kBlockCouplingTol = 1e-12;

enum class Truncation { shannon, full };

// ceil(N), clamped to [1, n_max].
inline std::size_t shannon_count(double shannon, std::size_t n_max) {
  const double n = std::ceil(shannon - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(n, 1.0)), 1, n_max);
}

struct SlepianBasis {
  int L = 0;
  Region region;
  std::vector<double> eigenvalues;  // descending, clamped into (0, 1)
  Eigen::MatrixXcd eigenvectors;    // column p-1 holds the harmonic coefficients of S_p
  double shannon = 0.0;

  std::size_t count() const { return eigenvalues.size(); }

  std::size_t shannon_truncation() const { return shannon_count(shannon, count()); }

  std::size_t truncation(Truncation t) const {
    return t == Truncation::shannon ? shannon_truncation() : count();
  }
};

struct SlepianCoeffs {
  int L = 0;
  std::vector<complex> values;  // f_p for p = 1..P at index p-1

  std::size_t size() const { return values.size(); }
};

// K_{lm,l'm'} = int_R Y_lm conj(Y_l'm') dOmega by quadrature over the region.
// North-polar caps use the m-block structure directly; other regions
// accumulate the Gram product over node batches.
inline ConcentrationMatrix assemble_k_matrix(const Region& region, const GridSpec& grid) {
  const int L = grid.L;
  if (const auto* m = region.mask(); m != nullptr && !m->grid.same_layout(grid)) {
    throw std::invalid_argument("assemble_k_matrix: region mask grid (L=" +
                                std::to_string(m->grid.L) + ") does not match grid (L=" +
                                std::to_string(L) + ")");
  }
  const auto n = static_cast<Eigen::Index>(harmonic_count(L));
  ConcentrationMatrix out{L, region, Eigen::MatrixXcd::Zero(n, n)};
  const RegionQuadrature q = region_quadrature(region, L);

  if (const auto* cap = region.cap(); cap != nullptr && cap->at_north_pole()) {
    // Integrate over azimuth analytically: K = 2pi * sum_i w_i lambda_lm lambda_l'm.
    const int n_az = 2 * L - 1;
    for (std::size_t r = 0; r < q.size(); r += n_az) {
      const auto lam = legendre_table(L, q.theta[r]);
      const double w = q.weight[r] * n_az;
      for (int mm = 0; mm < L; ++mm) {
        for (int l = mm; l < L; ++l) {
          const double a = w * lam[legendre_index(l, mm)];
          for (int lp = mm; lp < L; ++lp) {
            const double v = a * lam[legendre_index(lp, mm)];
            out.K(flat_index(l, mm), flat_index(lp, mm)) += v;
            if (mm > 0) out.K(flat_index(l, -mm), flat_index(lp, -mm)) += v;
          }
        }
      }
    }
  } else {
    constexpr std::size_t batch = 512;
    for (std::size_t start = 0; start < q.size(); start += batch) {
      const std::size_t count = std::min(batch, q.size() - start);
      Eigen::MatrixXcd B(static_cast<Eigen::Index>(count), n);
      for (std::size_t r = 0; r < count; ++r) {
        const auto y = ylm_all(L, q.theta[start + r], q.phi[start + r]);
        const double sw = std::sqrt(q.weight[start + r]);
        for (Eigen::Index k = 0; k < n; ++k) B(static_cast<Eigen::Index>(r), k) = sw * y[k];
      }
      out.K.noalias() += B.transpose() * B.conjugate();
    }
  }
  Eigen::MatrixXcd sym = 0.5 * (out.K + out.K.adjoint());
  out.K = std::move(sym);
  return out;
}

namespace detail {

// Smallest index whose magnitude is within roundoff of the largest.
inline Eigen::Index dominant_index(const Eigen::VectorXcd& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) >= peak * (1.0 - 1e-9)) return k;
  }
  return 0;
}

// Connected components of the coupling graph of K.
inline std::vector<std::vector<Eigen::Index>> coupling_blocks(const Eigen::MatrixXcd& K) {
  const Eigen::Index n = K.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (std::abs(K(i, j)) > kBlockCouplingTol) {
        const Eigen::Index a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<Eigen::Index>> blocks;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<Eigen::Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[r]].push_back(i);
  }
  return blocks;
}

}  // namespace detail

// Full Hermitian eigendecomposition of conj(K): the region energy of
// S = sum_k v_k Y_k is v^H conj(K) v. Decoupled blocks (the m-blocks of
// an axisymmetric cap, or the diagonal of the full-sphere identity) are solved
// separately so that eigenvectors never mix across them.
//
// Ordering is by descending eigenvalue; within a degenerate cluster (within
// 1e-12 of its largest member) by the flat index of the dominant component.
// Each eigenvector is rotated so that its dominant component is real positive.
inline SlepianBasis solve_eigenproblem(const ConcentrationMatrix& K) {
  const Eigen::Index n = K.K.rows();
  if (K.K.cols() != n || n != static_cast<Eigen::Index>(harmonic_count(K.L))) {
    throw std::invalid_argument("solve_eigenproblem: matrix is not L^2 x L^2");
  }
  struct Pair {
    double mu;
    Eigen::Index dominant;
    Eigen::VectorXcd vec;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));

  for (const auto& block : detail::coupling_blocks(K.K)) {
    const auto bn = static_cast<Eigen::Index>(block.size());
    Eigen::MatrixXcd sub(bn, bn);
    for (Eigen::Index i = 0; i < bn; ++i) {
      for (Eigen::Index j = 0; j < bn; ++j) sub(i, j) = std::conj(K.K(block[i], block[j]));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sub);
    if (solver.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Hermitian eigensolver did not converge on a block of size " << bn
          << " (L=" << K.L << ", ||K||_F=" << K.K.norm() << ", trace=" << K.trace() << ")";
      throw NumericalError(msg.str());
    }
    for (Eigen::Index c = 0; c < bn; ++c) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
      for (Eigen::Index i = 0; i < bn; ++i) v(block[i]) = solver.eigenvectors()(i, c);
      v.normalize();
      const Eigen::Index dom = detail::dominant_index(v);
      v *= std::conj(v(dom)) / std::abs(v(dom));
      v(dom) = complex(v(dom).real(), 0.0);
      pairs.push_back({solver.eigenvalues()(c), dom, std::move(v)});
    }
  }

  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.mu != b.mu) return a.mu > b.mu;
    return a.dominant < b.dominant;
  });
  // Reorder vectors inside each degenerate cluster; eigenvalues keep their
  // sorted positions so the spectrum stays monotone.
  for (std::size_t start = 0; start < pairs.size();) {
    std::size_t end = start + 1;
    while (end < pairs.size() && pairs[start].mu - pairs[end].mu < kDegeneracyTol) ++end;
    if (end - start > 1) {
      std::vector<double> mus;
      for (std::size_t i = start; i < end; ++i) mus.push_back(pairs[i].mu);
      std::stable_sort(pairs.begin() + static_cast<std::ptrdiff_t>(start),
                       pairs.begin() + static_cast<std::ptrdiff_t>(end),
                       [](const Pair& a, const Pair& b) { return a.dominant < b.dominant; });
      for (std::size_t i = start; i < end; ++i) pairs[i].mu = mus[i - start];
    }
    start = end;
  }

  SlepianBasis basis;
  basis.L = K.L;
  basis.region = K.region;
  basis.shannon = shannon_number(K.region, K.L);
  basis.eigenvalues.resize(pairs.size());
  basis.eigenvectors.resize(n, n);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double mu = pairs[p].mu;
    if (!std::isfinite(mu) || mu < -kEigenRangeTol || mu > 1.0 + kEigenRangeTol) {
      std::ostringstream msg;
      msg << "concentration eigenvalue " << mu << " at p=" << p + 1 << " lies outside [0, 1]";
      throw NumericalError(msg.str());
    }
    basis.eigenvalues[p] = std::clamp(mu, kEigenClampEps, 1.0 - kEigenClampEps);
    basis.eigenvectors.col(static_cast<Eigen::Index>(p)) = pairs[p].vec;
  }
  return basis;
}

inline SlepianBasis build_slepian_basis(const Region& region, int L) {
  return solve_eigenproblem(assemble_k_matrix(region, make_grid(L)));
}

inline SlepianCoeffs harmonic_to_slepian(const HarmonicCoeffs& a, const SlepianBasis& basis,
                                         std::size_t P) {
  if (a.L != basis.L) {
    throw std::invalid_argument("harmonic_to_slepian: bandlimit " + std::to_string(a.L) +
                                " does not match basis bandlimit " + std::to_string(basis.L));
  }
  if (P > basis.count()) throw std::invalid_argument("harmonic_to_slepian: truncation exceeds L^2");
  const Eigen::Map<const Eigen::VectorXcd> av(a.values.data(),
                                              static_cast<Eigen::Index>(a.values.size()));
  SlepianCoeffs out{basis.L, std::vector<complex>(P)};
  Eigen::Map<Eigen::VectorXcd> ov(out.values.data(), static_cast<Eigen::Index>(P));
  ov.noalias() = basis.eigenvectors.leftCols(static_cast<Eigen::Index>(P)).adjoint() * av;
  return out;
}

inline SlepianCoeffs harmonic_to_slepian(const HarmonicCoeffs& a, const SlepianBasis& basis,
                                         Truncation t = Truncation::full) {
  return harmonic_to_slepian(a, basis, basis.truncation(t));
}

inline HarmonicCoeffs slepian_to_harmonic(const SlepianCoeffs& c, const SlepianBasis& basis) {
  if (c.size() > basis.count()) {
    throw std::invalid_argument("slepian_to_harmonic: " + std::to_string(c.size()) +
                                " coefficients exceed L^2 = " + std::to_string(basis.count()));
  }
  const auto P = static_cast<Eigen::Index>(c.size());
  const Eigen::Map<const Eigen::VectorXcd> cv(c.values.data(), P);
  HarmonicCoeffs out(basis.L);
  Eigen::Map<Eigen::VectorXcd> ov(out.values.data(), static_cast<Eigen::Index>(out.values.size()));
  ov.noalias() = basis.eigenvectors.leftCols(P) * cv;
  return out;
}

inline SampledField slepian_synthesis(const SlepianCoeffs& c, const SlepianBasis& basis,
                                      const GridSpec& grid) {
  return inverse_sht(slepian_to_harmonic(c, basis), grid);
}

inline SlepianCoeffs slepian_analysis(const SampledField& f, const SlepianBasis& basis,
                                      std::size_t P) {
  if (f.grid.L != basis.L) {
    throw std::invalid_argument("slepian_analysis: field bandlimit " + std::to_string(f.grid.L) +
                                " does not match basis bandlimit " + std::to_string(basis.L));
  }
  return harmonic_to_slepian(forward_sht(f), basis, P);
}

inline SlepianCoeffs slepian_analysis(const SampledField& f, const SlepianBasis& basis,
                                      Truncation t = Truncation::full) {
  return slepian_analysis(f, basis, basis.truncation(t));
}

// The p-th Slepian function sampled on a grid.
inline SampledField slepian_function(const SlepianBasis& basis, std::size_t p,
                                     const GridSpec& grid) {
  HarmonicCoeffs a(basis.L);
  const auto col = basis.eigenvectors.col(static_cast<Eigen::Index>(p));
  std::copy(col.data(), col.data() + col.size(), a.values.begin());
  return inverse_sht(a, grid);
}

struct RestrictedAnalysis {
  SlepianCoeffs coeffs;
  std::vector<std::size_t> skipped;  // 1-based p with mu_p below the floor
};

inline constexpr double kDefaultMuFloor = 1e-6;

// f_p = (1/mu_p) int_R f conj(S_p) by quadrature over the region. Mask regions
// use the field samples directly; caps evaluate the field's harmonic expansion
// at the cap nodes.
inline RestrictedAnalysis region_restricted_analysis(const SampledField& f,
                                                     const SlepianBasis& basis,
                                                     double mu_floor = kDefaultMuFloor,
                                                     Truncation t = Truncation::full) {
  if (!(mu_floor > 0.0 && mu_floor < 1.0)) {
    throw std::invalid_argument("region_restricted_analysis: mu_floor must lie in (0, 1)");
  }
  if (f.grid.L != basis.L) {
    throw std::invalid_argument("region_restricted_analysis: bandlimit mismatch");
  }
  const int L = basis.L;
  const RegionQuadrature q = region_quadrature(basis.region, L);
  std::vector<complex> samples(q.size());
  if (const auto* m = basis.region.mask()) {
    if (!m->grid.same_layout(f.grid)) {
      throw std::invalid_argument("region_restricted_analysis: field grid differs from mask grid");
    }
    for (std::size_t r = 0; r < q.size(); ++r) samples[r] = f.values[q.grid_index[r]];
  } else {
    const HarmonicCoeffs a = forward_sht(f);
    for (std::size_t r = 0; r < q.size(); ++r) {
      const auto y = ylm_all(L, q.theta[r], q.phi[r]);
      complex acc{};
      for (std::size_t k = 0; k < y.size(); ++k) acc += a.values[k] * y[k];
      samples[r] = acc;
    }
  }
  // g_k = sum_r w_r f(w_r) conj(Y_k(w_r)); then int_R f conj(S_p) = (V^H g)_p.
  const auto n = static_cast<Eigen::Index>(harmonic_count(L));
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
  for (std::size_t r = 0; r < q.size(); ++r) {
    const auto y = ylm_all(L, q.theta[r], q.phi[r]);
    const complex fw = q.weight[r] * samples[r];
    for (Eigen::Index k = 0; k < n; ++k) g(k) += fw * std::conj(y[k]);
  }
  const std::size_t P = basis.truncation(t);
  const Eigen::VectorXcd proj = basis.eigenvectors.leftCols(static_cast<Eigen::Index>(P)).adjoint() * g;
  RestrictedAnalysis out{{L, std::vector<complex>(P)}, {}};
  for (std::size_t p = 0; p < P; ++p) {
    if (basis.eigenvalues[p] < mu_floor) {
      out.skipped.push_back(p + 1);
      continue;
    }
    out.coeffs.values[p] = proj(static_cast<Eigen::Index>(p)) / basis.eigenvalues[p];
  }
  return out;
}

}  // namespace slepwave
