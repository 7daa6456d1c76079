// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "slepwave/denoise.hpp"
#include "slepwave/io.hpp"
#include "slepwave/pipeline.hpp"
#include "slepwave/sifting_convolution.hpp"
#include "slepwave/slepian_wavelets.hpp"
#include "support.hpp"

using namespace slepwave;
using testing_support::Gen;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::pass : Status::fail, detail}; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1. Admissibility over the parameter grid.
Outcome admissibility() {
  double worst = 0.0;
  for (double lambda : {2.0, 3.0})
    for (int J0 : {0, 1, 2})
      for (std::size_t P : {30u, 690u, 1024u})
        worst = std::max(worst, build_filter_bank({lambda, J0, P}).admissibility_residual());
  return verdict(worst < 1e-12, "max |Phi^2 + sum Psi^2 - 1| = " + sci(worst) + " (< 1e-12)");
}

// 2. synthesis(analysis(f)) == f.
Outcome exact_reconstruction() {
  Gen g(2002);
  const FilterBank bank = build_filter_bank({3.0, 2, 690});
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SlepianCoeffs f = g.slepian(128, 690);
    const SlepianCoeffs back = wavelet_synthesis(wavelet_analysis(f, bank), bank);
    worst = std::max(worst, testing_support::rel_error(back.values, f.values));
  }
  return verdict(worst < 1e-12, "100 vectors, max relative error " + sci(worst) + " (< 1e-12)");
}

// Shannon number of a cap centred at (theta, phi) on a thresholded dataset.
double dataset_shannon(const HarmonicCoeffs& topo, int L, double opening_deg, double theta_deg, double phi_deg) {
  RegionConfig cfg;
  cfg.opening_deg = opening_deg;
  cfg.center_theta_deg = theta_deg;
  cfg.center_phi_deg = phi_deg;
  const Region r = build_region(cfg, make_grid(L), &topo);
  return shannon_number(r, L);
}

// 3. trace(K) and sum mu against the cap area.
Outcome shannon_number_check() {
  const int L = 16;
  const Region cap = Region::polar_cap(deg_to_rad(40.0));
  const double expect = 256.0 * (1.0 - std::cos(deg_to_rad(40.0))) / 2.0;
  const ConcentrationMatrix K = assemble_k_matrix(cap, make_grid(L));
  const SlepianBasis b = solve_eigenproblem(K);
  double sum = 0.0;
  for (double mu : b.eigenvalues) sum += mu;
  const double e1 = std::abs(K.trace() - expect) / expect;
  const double e2 = std::abs(sum - expect) / expect;
  std::string detail = "trace(K)=" + io::format_double(K.trace()) + " sum(mu)=" + io::format_double(sum) +
                       " expected " + io::format_double(expect) + " (rel err " + sci(std::max(e1, e2)) +
                       " < 1e-6)";
  return verdict(e1 < 1e-6 && e2 < 1e-6, detail);
}

Outcome shannon_dataset() {
  const char* path = std::getenv("SLEPWAVE_EGM2008");
  if (path == nullptr || !fs::exists(path)) {
    return {Status::skip, "EGM2008 coefficients not available (set SLEPWAVE_EGM2008 to a coefficient file)"};
  }
  const int L = 128;
  const HarmonicCoeffs topo = fit_bandlimit(ingest_coeffs(path, deg_to_rad(1.17)).coeffs, L);
  // Approximate continental centres; the exact cap centres are not published.
  const double n_sa = dataset_shannon(topo, L, 40.0, 105.0, 300.0);
  const double n_af = dataset_shannon(topo, L, 41.0, 85.0, 20.0);
  const auto r_sa = std::lround(n_sa), r_af = std::lround(n_af);
  return verdict(r_sa == 690 && r_af == 1208, "South America N=" + io::format_double(n_sa) + " (690), Africa N=" +
                                                  io::format_double(n_af) + " (1208)");
}

// 4. Spectrum, m-block structure, orthogonality on the sphere and region.
Outcome eigen_structure() {
  const int L = 16;
  const Region cap = Region::polar_cap(deg_to_rad(40.0));
  const GridSpec grid = make_grid(L);
  const ConcentrationMatrix K = assemble_k_matrix(cap, grid);
  const SlepianBasis b = solve_eigenproblem(K);
  bool range_ok = true, order_ok = true;
  for (std::size_t p = 0; p < b.count(); ++p) {
    range_ok = range_ok && b.eigenvalues[p] > 0.0 && b.eigenvalues[p] < 1.0;
    if (p > 0) order_ok = order_ok && b.eigenvalues[p] <= b.eigenvalues[p - 1];
  }
  double off_block = 0.0;
  for (std::size_t i = 0; i < b.count(); ++i)
    for (std::size_t j = 0; j < b.count(); ++j) {
      int l1, m1, l2, m2;
      flat_to_lm(i, l1, m1);
      flat_to_lm(j, l2, m2);
      if (m1 != m2) off_block = std::max(off_block, std::abs(K.K(i, j)));
    }
  // Orthogonality from sampled Slepian functions: grid quadrature for the
  // sphere, the cap's own quadrature for the region.
  const auto n = static_cast<Eigen::Index>(b.count());
  Eigen::MatrixXcd Ssphere(static_cast<Eigen::Index>(grid.size()), n);
  for (int i = 0; i < grid.n_theta; ++i)
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto y = ylm_all(L, grid.theta[i], grid.phi[j]);
      const Eigen::Map<const Eigen::RowVectorXcd> yv(y.data(), n);
      Ssphere.row(static_cast<Eigen::Index>(grid.index(i, j))) = std::sqrt(grid.weights[i]) * yv * b.eigenvectors;
    }
  const Eigen::MatrixXcd G = Ssphere.transpose() * Ssphere.conjugate();
  const RegionQuadrature q = region_quadrature(cap, L);
  Eigen::MatrixXcd Sregion(static_cast<Eigen::Index>(q.size()), n);
  for (std::size_t r = 0; r < q.size(); ++r) {
    const auto y = ylm_all(L, q.theta[r], q.phi[r]);
    const Eigen::Map<const Eigen::RowVectorXcd> yv(y.data(), n);
    Sregion.row(static_cast<Eigen::Index>(r)) = std::sqrt(q.weight[r]) * yv * b.eigenvectors;
  }
  const Eigen::MatrixXcd R = Sregion.transpose() * Sregion.conjugate();
  double e19 = 0.0, e20 = 0.0;
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index s = 0; s < n; ++s) {
      e19 = std::max(e19, std::abs(G(p, s) - (p == s ? 1.0 : 0.0)));
      e20 = std::max(e20, std::abs(R(p, s) - (p == s ? b.eigenvalues[static_cast<std::size_t>(p)] : 0.0)));
    }
  std::ostringstream d;
  d << "mu in (0,1): " << (range_ok ? "yes" : "no") << ", descending: " << (order_ok ? "yes" : "no")
    << ", off-block max " << sci(off_block) << " (< 1e-10), sphere orthonormality " << sci(e19)
    << ", region orthogonality " << sci(e20) << " (< 1e-8)";
  return verdict(range_ok && order_ok && off_block < 1e-10 && e19 < 1e-8 && e20 < 1e-8, d.str());
}

// 5. Coefficient-level energy preservation.
Outcome parseval() {
  Gen g(2005);
  const FilterBank bank = build_filter_bank({3.0, 2, 690});
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SlepianCoeffs f = g.slepian(128, 690);
    const WaveletCoefficients w = wavelet_analysis(f, bank);
    double e = 0.0, ef = 0.0;
    for (const auto& v : w.scaling) e += std::norm(v);
    for (const auto& s : w.wavelets)
      for (const auto& v : s) e += std::norm(v);
    for (const auto& v : f.values) ef += std::norm(v);
    worst = std::max(worst, std::abs(e - ef) / ef);
  }
  return verdict(worst < 1e-12, "100 signals, max relative energy defect " + sci(worst) + " (< 1e-12)");
}

// 6. Product form against the integral definition, harmonic and Slepian.
Outcome sifting_equivalence() {
  const int L = 8;
  const GridSpec grid = make_grid(L);
  const auto basis = std::make_shared<const SlepianBasis>(
      build_slepian_basis(Region::polar_cap(deg_to_rad(40.0), 0.7, 1.9), L));
  const std::vector<BasisHandle> handles = {BasisHandle::harmonic(L),
                                            BasisHandle::slepian(basis, basis->shannon_truncation())};
  Gen g(2006);
  double worst = 0.0;
  for (const BasisHandle& b : handles) {
    for (int pair = 0; pair < 20; ++pair) {
      const auto f = g.cvector(b.size());
      const auto h = g.cvector(b.size());
      const SampledField hf = b.synthesize(h, grid);
      const SampledField product = b.synthesize(sift_convolve(f, h, b), grid);
      SampledField integral(grid);
      for (int i = 0; i < grid.n_theta; ++i)
        for (int j = 0; j < grid.n_phi; ++j) {
          const SampledField tf = b.synthesize(translate_coeffs(f, grid.theta[i], grid.phi[j], b), grid);
          complex s{};
          for (int a = 0; a < grid.n_theta; ++a)
            for (int c = 0; c < grid.n_phi; ++c) s += grid.weights[a] * tf(a, c) * std::conj(hf(a, c));
          integral(i, j) = s;
        }
      worst = std::max(worst, testing_support::max_abs_diff(integral.values, product.values));
      worst = std::max(worst, testing_support::max_abs_diff(b.analyze(integral), sift_convolve(f, h, b)));
    }
  }
  return verdict(worst < 1e-9, "20 pairs x 2 bases at L=8, max deviation " + sci(worst) + " (< 1e-9)");
}

// 7. Monte Carlo variance of every scaling/wavelet field at 50 grid points.
Outcome wavelet_variance() {
  const int L = 16;
  const SlepianBasis b = build_slepian_basis(Region::polar_cap(deg_to_rad(40.0)), L);
  const std::size_t P = b.shannon_truncation();
  const FilterBank bank = build_filter_bank({3.0, 2, P});
  const GridSpec grid = make_grid(L);
  const SlepianSampler sampler(b, grid, P);
  std::vector<std::vector<double>> filters{bank.scaling};
  for (const auto& w : bank.wavelets) filters.push_back(w);

  Gen g(2007);
  std::vector<std::size_t> points;
  while (points.size() < 50) {
    const auto k = static_cast<std::size_t>(g.integer(0, static_cast<int>(grid.size()) - 1));
    if (std::find(points.begin(), points.end(), k) == points.end()) points.push_back(k);
  }
  const double sigma = 0.8;
  const int draws = 1000;
  std::vector<std::vector<double>> acc(filters.size(), std::vector<double>(points.size(), 0.0));
  const SlepianCoeffs zero{L, std::vector<complex>(P)};
  for (int d = 0; d < draws; ++d) {
    const SlepianCoeffs n = add_white_noise(zero, {sigma, 70000u + static_cast<std::uint64_t>(d), NoiseKind::complex});
    const WaveletCoefficients w = wavelet_analysis(n, bank);
    for (std::size_t f = 0; f < filters.size(); ++f) {
      const SampledField field = sampler.render(f == 0 ? w.scaling : w.wavelets[f - 1]);
      for (std::size_t i = 0; i < points.size(); ++i) acc[f][i] += std::norm(field.values[points[i]]);
    }
  }
  double worst = 0.0;
  for (std::size_t f = 0; f < filters.size(); ++f) {
    const SampledField sd = wavelet_noise_std({sigma, 0}, filters[f], b, grid);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double expect = std::norm(sd.values[points[i]]);
      worst = std::max(worst, std::abs(acc[f][i] / draws - expect) / expect);
    }
  }
  return verdict(worst < 0.10, std::to_string(filters.size()) + " filters x 50 points, 1000 draws, max relative deviation " +
                                   sci(worst) + " (< 0.10)");
}

// 8. Denoising gain on a synthetic smooth signal in a 40 degree cap.
Outcome denoising() {
  const int L = 32;
  const SlepianBasis b = build_slepian_basis(Region::polar_cap(deg_to_rad(40.0)), L);
  const std::size_t P = b.shannon_truncation();
  const Denoiser d(b, build_filter_bank({3.0, 2, P}), make_grid(L));
  int wins = 0;
  double gain2 = 0.0, gain5 = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SlepianCoeffs s = harmonic_to_slepian(synthetic_signal(L, seed), b, P);
    const NoiseModel model{target_snr_sigma(s, 4.0), noise_seed(seed)};
    const SlepianCoeffs x = add_white_noise(s, model);
    const double in = snr(x, s);
    const double out2 = snr(d.run(x, model.sigma, 2.0).denoised, s);
    const double out5 = snr(d.run(x, model.sigma, 5.0).denoised, s);
    wins += out2 > in;
    gain2 += out2 - in;
    gain5 += out5 - in;
  }
  gain2 /= 20.0;
  gain5 /= 20.0;
  std::ostringstream det;
  det.precision(3);
  det << "gain at N_sigma=2 in " << wins << "/20 seeds (>= 18), mean gain " << gain2 << " dB at 2 vs " << gain5
      << " dB at 5";
  return verdict(wins >= 18 && gain2 > gain5, det.str());
}

// 9. Transform round trip, quadrature orthonormality, addition theorem.
Outcome sht_correctness() {
  Gen g(2009);
  const HarmonicCoeffs a = g.coeffs(32);
  const double rt = testing_support::rel_error(forward_sht(inverse_sht(a, make_grid(32))).values, a.values);

  const int L = 16;
  const GridSpec grid = make_grid(L);
  const auto n = static_cast<Eigen::Index>(harmonic_count(L));
  Eigen::MatrixXcd Y(static_cast<Eigen::Index>(grid.size()), n);
  for (int i = 0; i < grid.n_theta; ++i)
    for (int j = 0; j < grid.n_phi; ++j) {
      const auto y = ylm_all(L, grid.theta[i], grid.phi[j]);
      for (Eigen::Index k = 0; k < n; ++k) Y(static_cast<Eigen::Index>(grid.index(i, j)), k) = std::sqrt(grid.weights[i]) * y[k];
    }
  const double ortho = (Y.adjoint() * Y - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();

  double addition = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    double t1, p1, t2, p2;
    g.point(t1, p1);
    g.point(t2, p2);
    const auto y1 = ylm_all(64, t1, p1);
    const auto y2 = ylm_all(64, t2, p2);
    const double cosg = std::cos(angular_distance(t1, p1, t2, p2));
    for (int l = 0; l < 64; ++l) {
      complex s{};
      double same = 0.0;
      for (int m = -l; m <= l; ++m) {
        s += y1[flat_index(l, m)] * std::conj(y2[flat_index(l, m)]);
        same += std::norm(y1[flat_index(l, m)]);
      }
      const double scale = (2.0 * l + 1.0) / four_pi;
      addition = std::max(addition, std::abs(s - scale * std::legendre(l, cosg)) / scale);
      addition = std::max(addition, std::abs(same - scale) / scale);
    }
  }
  std::ostringstream d;
  d << "round trip L=32 " << sci(rt) << ", orthonormality L=16 " << sci(ortho) << ", addition theorem " << sci(addition)
    << " (all < 1e-10)";
  return verdict(rt < 1e-10 && ortho < 1e-10 && addition < 1e-10, d.str());
}

template <class T, class W, class R>
bool text_round_trip(const T& value, W write, R read) {
  std::stringstream first;
  write(first, value);
  std::stringstream in(first.str());
  const T back = read(in);
  std::stringstream second;
  write(second, back);
  return first.str() == second.str();
}

bool same_bits(const std::vector<complex>& a, const std::vector<complex>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(complex)) == 0;
}

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" SLEPWAVE_CLI "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 10. Every format re-parses bit-identically; CLI exit codes.
Outcome file_boundary() {
  Gen g(2010);
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  HarmonicCoeffs a = g.coeffs(32);
  a.values[1] = complex(-0.0, 1e-310);
  check(text_round_trip(a, io::write_harmonic_coeffs, [](std::istream& i) { return io::read_harmonic_coeffs(i); }) &&
            [&] {
              std::stringstream ss;
              io::write_harmonic_coeffs(ss, a);
              return same_bits(io::read_harmonic_coeffs(ss).values, a.values);
            }(),
        "harmonic coefficients");
  SampledField f(make_grid(9));
  f.values = g.cvector(f.values.size());
  {
    std::stringstream ss;
    io::write_field(ss, f);
    check(same_bits(io::read_field(ss).values, f.values), "field grid");
    std::stringstream cs;
    io::write_field_csv(cs, f);
    check(same_bits(io::read_field_csv(cs, 9).values, f.values), "csv grid");
  }
  const SlepianCoeffs c = g.slepian(16, 77);
  {
    std::stringstream ss;
    io::write_slepian_coeffs(ss, c);
    check(same_bits(io::read_slepian_coeffs(ss).values, c.values), "slepian coefficients");
  }
  const Region r = Region::polar_cap(0.6, 0.5, 0.4);
  const SlepianBasis b = build_slepian_basis(r, 8);
  {
    std::stringstream ss;
    io::write_basis(ss, b);
    const SlepianBasis back = io::read_basis(ss, r);
    check(back.eigenvalues == b.eigenvalues && back.eigenvectors == b.eigenvectors && back.shannon == b.shannon,
          "basis cache");
  }
  const FilterBank bank = build_filter_bank({3.0, 2, 690});
  {
    std::stringstream ss;
    io::write_filter_bank(ss, bank);
    const FilterBank back = io::read_filter_bank(ss);
    check(back.scaling == bank.scaling && back.wavelets == bank.wavelets && back.J == bank.J &&
              back.params.lambda == bank.params.lambda,
          "filter bank");
    const auto coeffs = g.cvector(690);
    std::stringstream ws;
    io::write_wavelet_scale(ws, bank, "j4", 128, coeffs);
    check(same_bits(io::read_wavelet_scale(ws).coeffs, coeffs), "wavelet coefficients");
  }
  {
    PipelineConfig cfg;
    cfg.lambda = 2.0 / 3.0 + 1.0;
    cfg.region.opening_deg = 0.1 + 0.2;
    cfg.n_sigma = {2.0, 3.0, 5.0, 1.0 / 7.0};
    cfg.seed = 18446744073709551615ULL;
    std::stringstream ss(to_text(cfg));
    const PipelineConfig back = parse_config(ss);
    check(to_text(back) == to_text(cfg) && back.lambda == cfg.lambda && back.n_sigma == cfg.n_sigma &&
              back.seed == cfg.seed,
          "pipeline config");
  }

  const fs::path dir = fs::temp_directory_path() / "slepwave_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.txt") << "# L=4\n0 0 1\n";
  struct Fixture {
    std::string args;
    int code;
  };
  const std::vector<Fixture> fixtures = {
      {"shannon -L 16", 0},
      {"basis -L 8 --kind full_sphere", 0},
      {"tiling -L 16", 0},
      {"frobnicate", 1},
      {"tiling --lambda 0.5", 1},
      {"denoise -L 8", 1},
      {"analyze -L 12 --seed 1", 2},
      {"sht --inverse --input bad.txt --output out.txt", 2},
      {"tiling --lambda 1e308 --J0 0", 3},
  };
  for (const auto& fx : fixtures) {
    const int code = run_cli(dir, fx.args);
    check(code == fx.code, "'" + fx.args + "' exited " + std::to_string(code) + ", expected " + std::to_string(fx.code));
  }
  fs::remove_all(dir);

  if (failures.empty()) return {Status::pass, "8 formats round-trip bit-identically; " + std::to_string(fixtures.size()) + " CLI exit-code fixtures (0/1/2/3) hold"};
  std::string d = "failed:";
  for (const auto& s : failures) d += " [" + s + "]";
  return {Status::fail, d};
}

}  // namespace

int main() {
  struct Criterion {
    std::string id;
    std::string name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1", "admissibility identity", admissibility},
      {"2", "exact reconstruction", exact_reconstruction},
      {"3", "Shannon number, 40 deg cap at L=16", shannon_number_check},
      {"3b", "Shannon number, EGM2008 regions at L=128", shannon_dataset},
      {"4", "eigen-structure of the cap basis", eigen_structure},
      {"5", "Parseval frame", parseval},
      {"6", "sifting convolution equivalence", sifting_equivalence},
      {"7", "wavelet-domain noise variance", wavelet_variance},
      {"8", "denoising efficacy", denoising},
      {"9", "spherical harmonic transform correctness", sht_correctness},
      {"10", "file-boundary integrity", file_boundary},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::pass ? "[PASS]" : o.status == Status::fail ? "[FAIL]" : "[SKIP]";
    std::printf("%s criterion %s: %s -- %s (%.1fs)\n", tag, c.id.c_str(), c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (o.status == Status::fail) ++failed;
  }
  std::printf("%d criterion check(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
