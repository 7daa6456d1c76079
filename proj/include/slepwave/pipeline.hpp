#pragma once

// Configuration, dataset ingestion, basis caching and the command bodies
// behind the slepwave tool. Commands print to the given streams and write
// files below the configured output directory.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slepwave/denoise.hpp"
#include "slepwave/errors.hpp"
#include "slepwave/io.hpp"
#include "slepwave/region.hpp"
#include "slepwave/slepian_basis.hpp"
#include "slepwave/slepian_wavelets.hpp"
#include "slepwave/sphere_core.hpp"

namespace slepwave {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numerical = 3 };

struct PipelineConfig {
  int L = 32;
  RegionConfig region;
  double lambda = 3.0;
  int J0 = 2;
  std::vector<double> n_sigma{2.0, 3.0, 5.0};
  double snr_db = 4.0;
  std::optional<std::uint64_t> seed;
  std::string cache_dir = "cache";
  std::string output_dir = "out";
  std::string signal;               // harmonic coefficient file; empty selects the synthetic signal
  double smoothing_fwhm_deg = 0.0;  // 0 disables smoothing of ingested datasets
  std::string truncation = "shannon";

  Truncation truncation_mode() const {
    return truncation == "full" ? Truncation::full : Truncation::shannon;
  }

  void validate() const {
    if (L < 1) throw std::invalid_argument("L must be >= 1");
    const auto& k = region.kind;
    if (k != "polar_cap" && k != "full_sphere" && k != "mask") {
      throw std::invalid_argument("kind must be polar_cap, full_sphere or mask");
    }
    if (k == "polar_cap" && !(region.opening_deg > 0.0 && region.opening_deg < 180.0)) {
      throw std::invalid_argument("opening_deg must lie in (0, 180)");
    }
    if (k == "mask" && region.mask_file.empty()) {
      throw std::invalid_argument("kind=mask requires mask_file");
    }
    check_lambda(lambda);
    if (J0 < 0) throw std::invalid_argument("J0 must be >= 0");
    for (double v : n_sigma) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("n_sigma values must be >= 0");
    }
    if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
    if (!(smoothing_fwhm_deg >= 0.0)) throw std::invalid_argument("smoothing_fwhm_deg must be >= 0");
    if (truncation != "shannon" && truncation != "full") {
      throw std::invalid_argument("truncation must be shannon or full");
    }
  }
};

inline std::string to_text(const PipelineConfig& c) {
  using io::format_double;
  std::ostringstream out;
  out << "L=" << c.L << '\n'
      << "kind=" << c.region.kind << '\n'
      << "opening_deg=" << format_double(c.region.opening_deg) << '\n'
      << "center_theta_deg=" << format_double(c.region.center_theta_deg) << '\n'
      << "center_phi_deg=" << format_double(c.region.center_phi_deg) << '\n'
      << "threshold_field=" << c.region.threshold_field << '\n'
      << "mask_file=" << c.region.mask_file << '\n'
      << "lambda=" << format_double(c.lambda) << '\n'
      << "J0=" << c.J0 << '\n'
      << "n_sigma=";
  for (std::size_t i = 0; i < c.n_sigma.size(); ++i) {
    out << (i ? "," : "") << format_double(c.n_sigma[i]);
  }
  out << '\n' << "snr_db=" << format_double(c.snr_db) << '\n';
  if (c.seed) out << "seed=" << *c.seed << '\n';
  out << "cache_dir=" << c.cache_dir << '\n'
      << "output_dir=" << c.output_dir << '\n'
      << "signal=" << c.signal << '\n'
      << "smoothing_fwhm_deg=" << format_double(c.smoothing_fwhm_deg) << '\n'
      << "truncation=" << c.truncation << '\n';
  return out.str();
}

inline std::vector<double> parse_number_list(std::string_view text, const std::string& source,
                                             std::size_t line_no) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    if (item.empty()) throw DataError(io::detail::where(source, line_no) + "empty list entry");
    out.push_back(io::detail::parse_number<double>(item, source, line_no));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

// Applies one key=value assignment. Unknown keys are rejected.
inline void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value,
                          const std::string& source = "<config>", std::size_t line_no = 0) {
  using io::detail::parse_number;
  auto num = [&](auto& dst) { dst = parse_number<std::decay_t<decltype(dst)>>(value, source, line_no); };
  if (key == "L") num(c.L);
  else if (key == "kind") c.region.kind = value;
  else if (key == "opening_deg") num(c.region.opening_deg);
  else if (key == "center_theta_deg") num(c.region.center_theta_deg);
  else if (key == "center_phi_deg") num(c.region.center_phi_deg);
  else if (key == "threshold_field") c.region.threshold_field = value;
  else if (key == "mask_file") c.region.mask_file = value;
  else if (key == "lambda") num(c.lambda);
  else if (key == "J0") num(c.J0);
  else if (key == "n_sigma") c.n_sigma = parse_number_list(value, source, line_no);
  else if (key == "snr_db") num(c.snr_db);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, source, line_no);
  else if (key == "cache_dir") c.cache_dir = value;
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "signal") c.signal = value;
  else if (key == "smoothing_fwhm_deg") num(c.smoothing_fwhm_deg);
  else if (key == "truncation") c.truncation = value;
  else throw DataError(io::detail::where(source, line_no) + "unknown config key '" + key + "'");
}

// Flat key=value text; '#' starts a comment line.
inline PipelineConfig parse_config(std::istream& in, const std::string& source = "<config>",
                                   PipelineConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(io::detail::where(source, line_no) + "expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), source, line_no);
  }
  return base;
}

inline PipelineConfig load_config(const fs::path& path, PipelineConfig base = {}) {
  auto in = io::detail::open_in(path);
  return parse_config(in, path.string(), std::move(base));
}

// ---------------------------------------------------------------------------
// Datasets

struct CoeffDataset {
  std::string name;
  HarmonicCoeffs coeffs;
  std::optional<double> smoothing_fwhm;  // radians
};

// f_lm <- f_lm exp(-l(l+1) s^2 / 2) with s = FWHM / sqrt(8 ln 2).
inline void gaussian_smooth(HarmonicCoeffs& a, double fwhm) {
  const double s = fwhm / std::sqrt(8.0 * std::log(2.0));
  for (int l = 0; l < a.L; ++l) {
    const double g = std::exp(-0.5 * l * (l + 1.0) * s * s);
    for (int m = -l; m <= l; ++m) a(l, m) *= g;
  }
}

inline CoeffDataset ingest_coeffs(const fs::path& path, std::optional<double> fwhm = std::nullopt) {
  CoeffDataset d{path.filename().string(), io::load_harmonic_coeffs(path), fwhm};
  if (fwhm && *fwhm > 0.0) gaussian_smooth(d.coeffs, *fwhm);
  return d;
}

// Seeded real random field with E|f_lm|^2 = (1 + l)^(-decay).
inline HarmonicCoeffs synthetic_coeffs(int L, std::uint64_t seed, double decay) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  HarmonicCoeffs a(L);
  for (int l = 0; l < L; ++l) {
    const double amp = std::pow(1.0 + l, -0.5 * decay);
    a(l, 0) = amp * normal(rng);
    for (int m = 1; m <= l; ++m) {
      const double re = normal(rng);
      const double im = normal(rng);
      a(l, m) = amp / std::sqrt(2.0) * complex(re, im);
      a(l, -m) = (m % 2 ? -1.0 : 1.0) * std::conj(a(l, m));
    }
  }
  return a;
}

// Stand-in for a topography model: power falling like l^-2.
inline HarmonicCoeffs synthetic_earth(int L, std::uint64_t seed) { return synthetic_coeffs(L, seed, 2.0); }

// Smooth test signal: steeply decaying power.
inline constexpr double kSmoothSignalDecay = 4.0;
inline HarmonicCoeffs synthetic_signal(int L, std::uint64_t seed) {
  return synthetic_coeffs(L, seed, kSmoothSignalDecay);
}

// Independent stream for noise draws, derived from the user seed.
inline std::uint64_t noise_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t require_seed(const PipelineConfig& c, const std::string& what) {
  if (!c.seed) throw std::invalid_argument(what + " is stochastic: --seed is required");
  return *c.seed;
}

inline std::optional<double> smoothing(const PipelineConfig& c) {
  if (c.smoothing_fwhm_deg > 0.0) return deg_to_rad(c.smoothing_fwhm_deg);
  return std::nullopt;
}

inline HarmonicCoeffs fit_bandlimit(const HarmonicCoeffs& a, int L) {
  HarmonicCoeffs out(L);
  std::copy_n(a.values.begin(), std::min(a.values.size(), out.values.size()), out.values.begin());
  return out;
}

// Region from the config. threshold_field=synthetic uses the seeded
// earth-like generator.
inline Region make_region(const PipelineConfig& c) {
  c.validate();
  const GridSpec grid = make_grid(c.L);
  std::optional<HarmonicCoeffs> threshold;
  std::optional<SampledField> mask;
  if (c.region.kind == "polar_cap" && !c.region.threshold_field.empty()) {
    if (c.region.threshold_field == "synthetic") {
      threshold = synthetic_earth(c.L, require_seed(c, "threshold_field=synthetic"));
    } else {
      threshold = ingest_coeffs(c.region.threshold_field, smoothing(c)).coeffs;
    }
  }
  if (c.region.kind == "mask") mask = io::load_field(c.region.mask_file);
  return build_region(c.region, grid, threshold ? &*threshold : nullptr, mask ? &*mask : nullptr);
}

inline HarmonicCoeffs load_signal(const PipelineConfig& c, const std::string& what) {
  if (!c.signal.empty()) return fit_bandlimit(ingest_coeffs(c.signal, smoothing(c)).coeffs, c.L);
  HarmonicCoeffs a = synthetic_signal(c.L, require_seed(c, what + " with the synthetic signal"));
  if (const auto f = smoothing(c)) gaussian_smooth(a, *f);
  return a;
}

// ---------------------------------------------------------------------------
// Basis cache

inline fs::path basis_cache_path(const PipelineConfig& c, const Region& r) {
  return fs::path(c.cache_dir) / ("basis_L" + std::to_string(c.L) + "_" + r.hash() + ".txt");
}

struct CachedBasis {
  SlepianBasis basis;
  fs::path path;
  bool hit = false;
};

// Loads the cached basis for (region, L). With require_cache a missing or
// stale cache is an error; otherwise it is rebuilt (with a warning if stale).
inline CachedBasis obtain_basis(const PipelineConfig& c, const Region& region, bool require_cache,
                                std::ostream& warn) {
  CachedBasis out;
  out.path = basis_cache_path(c, region);
  if (fs::exists(out.path)) {
    std::ifstream in(out.path);
    const auto header = io::read_basis_header(in, out.path.string());
    if (header.region_hash == region.hash() && header.L == c.L) {
      in.clear();
      in.seekg(0);
      out.basis = io::read_basis(in, region, out.path.string());
      out.hit = true;
      return out;
    }
    const std::string msg = "basis cache " + out.path.string() + " was built for region " +
                            header.region_hash + " L=" + std::to_string(header.L) +
                            ", expected region " + region.hash() + " L=" + std::to_string(c.L);
    if (require_cache) throw DataError(msg);
    warn << "warning: " << msg << "; rebuilding\n";
  } else if (require_cache) {
    throw DataError("no basis cache at " + out.path.string() + " (run the basis command first)");
  }
  out.basis = build_slepian_basis(region, c.L);
  io::save(out.path, out.basis, [](std::ostream& o, const SlepianBasis& b) { io::write_basis(o, b); });
  return out;
}

inline std::size_t truncation_for(const PipelineConfig& c, double shannon) {
  const std::size_t n = harmonic_count(c.L);
  return c.truncation_mode() == Truncation::full ? n : shannon_count(shannon, n);
}

inline FilterBank filter_bank_for(const PipelineConfig& c, std::size_t P) {
  return build_filter_bank(TilingParams{c.lambda, c.J0, P});
}

inline std::string scale_file_name(const std::string& scale) { return "wavelet_" + scale + ".txt"; }

// ---------------------------------------------------------------------------
// Commands

inline void cmd_basis(const PipelineConfig& c, std::ostream& out, std::ostream& err) {
  const Region region = make_region(c);
  const CachedBasis cb = obtain_basis(c, region, false, err);
  out << "N=" << io::format_double(cb.basis.shannon) << '\n';
  out << "cache=" << cb.path.string() << '\n';
  out << "cache_hit=" << (cb.hit ? "true" : "false") << '\n';
  const std::size_t shown = std::min<std::size_t>(10, cb.basis.count());
  for (std::size_t p = 0; p < shown; ++p) {
    out << "mu_" << p + 1 << '=' << io::format_double(cb.basis.eigenvalues[p]) << '\n';
  }
}

inline void cmd_shannon(const PipelineConfig& c, std::ostream& out) {
  const Region region = make_region(c);
  const double N = shannon_number(region, c.L);
  out << "area=" << io::format_double(region.area()) << '\n';
  out << "N=" << io::format_double(N) << '\n';
  out << "P=" << shannon_count(N, harmonic_count(c.L)) << '\n';
}

inline void cmd_tiling(const PipelineConfig& c, std::ostream& out) {
  const Region region = make_region(c);
  const FilterBank bank = filter_bank_for(c, truncation_for(c, shannon_number(region, c.L)));
  const fs::path path = fs::path(c.output_dir) / "filter_bank.txt";
  io::save(path, bank, [](std::ostream& o, const FilterBank& b) { io::write_filter_bank(o, b); });
  out << "Pmax=" << bank.params.P_max << '\n'
      << "J0=" << bank.params.J0 << '\n'
      << "J=" << bank.J << '\n'
      << "admissibility_residual=" << io::format_double(bank.admissibility_residual()) << '\n'
      << "filter_bank=" << path.string() << '\n';
}

inline void write_csv(const fs::path& path, const SampledField& f) {
  io::save(path, f, [](std::ostream& o, const SampledField& v) { io::write_field_csv(o, v); });
}

inline void cmd_analyze(const PipelineConfig& c, std::ostream& out, std::ostream& err) {
  const Region region = make_region(c);
  const CachedBasis cb = obtain_basis(c, region, true, err);
  const SlepianBasis& basis = cb.basis;
  const std::size_t P = basis.truncation(c.truncation_mode());
  const FilterBank bank = filter_bank_for(c, P);
  const SlepianCoeffs s = harmonic_to_slepian(load_signal(c, "analyze"), basis, P);
  const WaveletCoefficients w = wavelet_analysis(s, bank);

  const fs::path dir(c.output_dir);
  io::save(dir / "filter_bank.txt", bank, [](std::ostream& o, const FilterBank& b) { io::write_filter_bank(o, b); });
  io::save(dir / "slepian_coeffs.txt", s, [](std::ostream& o, const SlepianCoeffs& v) { io::write_slepian_coeffs(o, v); });
  const SlepianSampler sampler(basis, make_grid(c.L), P);
  write_csv(dir / "signal.csv", sampler.render(s.values));
  auto emit = [&](const std::string& scale, const std::vector<complex>& coeffs) {
    io::save(dir / scale_file_name(scale), coeffs, [&](std::ostream& o, const std::vector<complex>& v) {
      io::write_wavelet_scale(o, bank, scale, c.L, v);
    });
    write_csv(dir / (scale + ".csv"), sampler.render(coeffs));
  };
  emit("scaling", w.scaling);
  for (int j = w.J0; j <= w.J(); ++j) emit("j" + std::to_string(j), w.wavelets[static_cast<std::size_t>(j - w.J0)]);
  out << "P=" << P << '\n'
      << "scales=" << w.wavelets.size() + 1 << '\n'
      << "output_dir=" << dir.string() << '\n';
}

// Rebuilds Slepian coefficients from the files written by analyze.
inline SlepianCoeffs synthesize_from_dir(const fs::path& dir) {
  const FilterBank bank = io::load_filter_bank(dir / "filter_bank.txt");
  WaveletCoefficients w;
  w.J0 = bank.params.J0;
  auto load = [&](const std::string& scale) {
    const auto f = io::load_wavelet_scale(dir / scale_file_name(scale));
    if (f.scale != scale || f.J != bank.J || f.params.J0 != bank.params.J0 ||
        f.params.P_max != bank.params.P_max) {
      throw DataError((dir / scale_file_name(scale)).string() + ": header does not match filter bank");
    }
    w.L = f.L;
    return f.coeffs;
  };
  w.scaling = load("scaling");
  for (int j = bank.params.J0; j <= bank.J; ++j) w.wavelets.push_back(load("j" + std::to_string(j)));
  return wavelet_synthesis(w, bank);
}

inline void cmd_synth(const PipelineConfig& c, const fs::path& input_dir, std::ostream& out) {
  const SlepianCoeffs f = synthesize_from_dir(input_dir);
  const fs::path path = fs::path(c.output_dir) / "slepian_coeffs_synth.txt";
  io::save(path, f, [](std::ostream& o, const SlepianCoeffs& v) { io::write_slepian_coeffs(o, v); });
  out << "P=" << f.size() << '\n' << "output=" << path.string() << '\n';
}

inline std::string nsigma_label(double v) { return io::format_double(v); }

inline void cmd_denoise(const PipelineConfig& c, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = require_seed(c, "denoise");
  const Region region = make_region(c);
  const CachedBasis cb = obtain_basis(c, region, false, err);
  const SlepianBasis& basis = cb.basis;
  const std::size_t P = basis.truncation(c.truncation_mode());
  const FilterBank bank = filter_bank_for(c, P);
  const SlepianCoeffs s = harmonic_to_slepian(load_signal(c, "denoise"), basis, P);
  const NoiseModel model{target_snr_sigma(s, c.snr_db), noise_seed(seed)};
  const SlepianCoeffs x = add_white_noise(s, model);
  const double snr_in = snr(x, s);

  const fs::path dir(c.output_dir);
  const Denoiser denoiser(basis, bank, make_grid(c.L));
  const SlepianSampler& sampler = denoiser.sampler();
  write_csv(dir / "signal.csv", sampler.render(s.values));
  write_csv(dir / "noisy.csv", sampler.render(x.values));

  std::ostringstream report;
  report << "L=" << c.L << '\n'
         << "P=" << P << '\n'
         << "seed=" << seed << '\n'
         << "sigma=" << io::format_double(model.sigma) << '\n'
         << "snr_in_db=" << io::format_double(snr_in) << '\n';
  for (double ns : c.n_sigma) {
    const DenoiseResult r = denoiser.run(x, model.sigma, ns);
    const double snr_out = snr(r.denoised, s);
    const std::string tag = nsigma_label(ns);
    report << "n_sigma=" << tag << " snr_out_db=" << io::format_double(snr_out)
           << " gain_db=" << io::format_double(snr_out - snr_in);
    for (const auto& sc : r.scales) {
      const double frac = sc.stats.total ? static_cast<double>(sc.stats.kept) / sc.stats.total : 0.0;
      report << " kept_" << sc.name << '=' << io::format_double(frac);
    }
    report << '\n';
    write_csv(dir / ("denoised_nsigma" + tag + ".csv"), sampler.render(r.denoised.values));
  }
  const fs::path path = dir / "denoise_report.txt";
  io::save(path, report.str(), [](std::ostream& o, const std::string& v) { o << v; });
  out << report.str() << "report=" << path.string() << '\n';
}

// Forward (field file -> coefficient file) or inverse transform. A .csv
// output on the inverse path writes the plot layout instead.
inline void cmd_sht(const fs::path& input, const fs::path& output, bool inverse, std::ostream& out) {
  if (!inverse) {
    const HarmonicCoeffs a = forward_sht(io::load_field(input));
    io::save(output, a, [](std::ostream& o, const HarmonicCoeffs& v) { io::write_harmonic_coeffs(o, v); });
    out << "L=" << a.L << '\n';
  } else {
    const HarmonicCoeffs a = io::load_harmonic_coeffs(input);
    const SampledField f = inverse_sht(a, make_grid(a.L));
    if (output.extension() == ".csv") {
      write_csv(output, f);
    } else {
      io::save(output, f, [](std::ostream& o, const SampledField& v) { io::write_field(o, v); });
    }
    out << "L=" << a.L << " n_theta=" << f.grid.n_theta << " n_phi=" << f.grid.n_phi << '\n';
  }
  out << "output=" << output.string() << '\n';
}

// Runs a command body, reporting any exception on err and mapping it to the
// exit-code contract.
template <class F>
int run_guarded(F&& body, std::ostream& err) {
  try {
    body();
    return exit_ok;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::domain_error& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace slepwave
