#pragma once

// Text file formats. Doubles are written in shortest round-trip form, so a
// written file re-parses to bit-identical values.
//
//   harmonic coefficients  "# L=<int>"                         then "l m re im"
//   field grid             "# L=<int> n_theta=<int> n_phi=<int>" then one row per ring of "re im" pairs
//   Slepian coefficients   "# L=<int> P=<int>"                 then "p re im"
//   basis cache            "# L=<int> region=<hash> N=<float>" then per p: "p mu" + L^2 lines "l m re im"
//   filter bank            "# lambda=<f> J0=<int> J=<int> Pmax=<int>" then "# filter=..." blocks of "p value"
//   wavelet coefficients   filter-bank header + " scale=<name> L=<int>" then "p re im"
//   plot grid (CSV)        "theta,phi,re,im"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "slepwave/errors.hpp"
#include "slepwave/slepian_basis.hpp"
#include "slepwave/slepian_wavelets.hpp"
#include "slepwave/sphere_core.hpp"

namespace slepwave::io {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::string where(const std::string& source, std::size_t line_no) {
  if (line_no == 0) return source + ": ";
  return source + ":" + std::to_string(line_no) + ": ";
}

template <class T>
T parse_number(std::string_view tok, const std::string& source, std::size_t line_no) {
  T v{};
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw DataError(where(source, line_no) + "cannot parse '" + std::string(tok) + "' as a number");
  }
  return v;
}

// "# key=value key=value" -> map. Returns nullopt for lines without '#'.
inline std::optional<std::map<std::string, std::string>> parse_header(std::string_view line) {
  const auto toks = split_ws(line);
  if (toks.empty() || toks.front() != "#") {
    if (!toks.empty() && toks.front().starts_with("#")) {
      std::string_view first = toks.front().substr(1);
      std::map<std::string, std::string> kv;
      std::vector<std::string_view> rest(toks.begin() + 1, toks.end());
      if (!first.empty()) rest.insert(rest.begin(), first);
      for (auto t : rest) {
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) continue;
        kv.emplace(std::string(t.substr(0, eq)), std::string(t.substr(eq + 1)));
      }
      return kv;
    }
    return std::nullopt;
  }
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string_view::npos) continue;
    kv.emplace(std::string(toks[i].substr(0, eq)), std::string(toks[i].substr(eq + 1)));
  }
  return kv;
}

template <class T>
T header_value(const std::map<std::string, std::string>& kv, const std::string& key,
               const std::string& source) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError(where(source, 1) + "header is missing '" + key + "='");
  return parse_number<T>(it->second, source, 1);
}

// Reads the first line and requires it to be a header.
inline std::map<std::string, std::string> read_header(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(where(source, 1) + "empty file");
  auto kv = parse_header(line);
  if (!kv) throw DataError(where(source, 1) + "expected a '#' header line");
  return *kv;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void write_complex(std::ostream& out, complex v) {
  out << format_double(v.real()) << ' ' << format_double(v.imag());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Harmonic coefficients

inline void write_harmonic_coeffs(std::ostream& out, const HarmonicCoeffs& a) {
  out << "# L=" << a.L << '\n';
  for (int l = 0; l < a.L; ++l) {
    for (int m = -l; m <= l; ++m) {
      out << l << ' ' << m << ' ';
      detail::write_complex(out, a(l, m));
      out << '\n';
    }
  }
}

// Missing (l, m) entries read as zero.
inline HarmonicCoeffs read_harmonic_coeffs(std::istream& in, const std::string& source = "<stream>") {
  const auto header = detail::read_header(in, source);
  const int L = detail::header_value<int>(header, "L", source);
  if (L < 1) throw DataError(detail::where(source, 1) + "bandlimit must be >= 1");
  HarmonicCoeffs a(L);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = detail::split_ws(line);
    if (toks.empty() || toks.front().starts_with("#")) continue;
    if (toks.size() != 4) {
      throw DataError(detail::where(source, line_no) + "expected 'l m re im', got " +
                      std::to_string(toks.size()) + " fields");
    }
    const int l = detail::parse_number<int>(toks[0], source, line_no);
    const int m = detail::parse_number<int>(toks[1], source, line_no);
    if (l < 0 || std::abs(m) > l) {
      throw DataError(detail::where(source, line_no) + "invalid degree/order pair");
    }
    if (l >= L) {
      throw DataError(detail::where(source, line_no) + "degree " + std::to_string(l) +
                      " conflicts with header bandlimit L=" + std::to_string(L));
    }
    a(l, m) = complex(detail::parse_number<double>(toks[2], source, line_no),
                      detail::parse_number<double>(toks[3], source, line_no));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Sampled fields on the transform grid

inline void write_field(std::ostream& out, const SampledField& f) {
  const GridSpec& g = f.grid;
  out << "# L=" << g.L << " n_theta=" << g.n_theta << " n_phi=" << g.n_phi << '\n';
  for (int i = 0; i < g.n_theta; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      if (j > 0) out << ' ';
      detail::write_complex(out, f(i, j));
    }
    out << '\n';
  }
}

inline SampledField read_field(std::istream& in, const std::string& source = "<stream>") {
  const auto header = detail::read_header(in, source);
  const int L = detail::header_value<int>(header, "L", source);
  const int nt = detail::header_value<int>(header, "n_theta", source);
  const int np = detail::header_value<int>(header, "n_phi", source);
  if (L < 1) throw DataError(detail::where(source, 1) + "bandlimit must be >= 1");
  GridSpec g = make_grid(L);
  if (g.n_theta != nt || g.n_phi != np) {
    throw DataError(detail::where(source, 1) + "grid " + std::to_string(nt) + "x" +
                    std::to_string(np) + " does not match the sampling for L=" + std::to_string(L));
  }
  SampledField f(std::move(g));
  std::string line;
  std::size_t line_no = 1;
  int ring = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = detail::split_ws(line);
    if (toks.empty() || toks.front().starts_with("#")) continue;
    if (ring >= nt) throw DataError(detail::where(source, line_no) + "more rows than n_theta");
    if (toks.size() != static_cast<std::size_t>(2 * np)) {
      throw DataError(detail::where(source, line_no) + "expected " + std::to_string(2 * np) +
                      " values in ring row, got " + std::to_string(toks.size()));
    }
    for (int j = 0; j < np; ++j) {
      f(ring, j) = complex(detail::parse_number<double>(toks[2 * j], source, line_no),
                           detail::parse_number<double>(toks[2 * j + 1], source, line_no));
    }
    ++ring;
  }
  if (ring != nt) {
    throw DataError(source + ": expected " + std::to_string(nt) + " ring rows, found " +
                    std::to_string(ring));
  }
  return f;
}

// Plot dump: one CSV row per grid node.
inline void write_field_csv(std::ostream& out, const SampledField& f) {
  out << "theta,phi,re,im\n";
  const GridSpec& g = f.grid;
  for (int i = 0; i < g.n_theta; ++i) {
    for (int j = 0; j < g.n_phi; ++j) {
      out << format_double(g.theta[i]) << ',' << format_double(g.phi[j]) << ','
          << format_double(f(i, j).real()) << ',' << format_double(f(i, j).imag()) << '\n';
    }
  }
}

// Inverse of write_field_csv for a grid of bandlimit L.
inline SampledField read_field_csv(std::istream& in, int L, const std::string& source = "<stream>") {
  SampledField f(make_grid(L));
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line.rfind("theta,phi", 0) != 0) throw DataError(detail::where(source, 1) + "missing CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (std::size_t c; (c = rest.find(',')) != std::string_view::npos;) {
      cols.push_back(rest.substr(0, c));
      rest.remove_prefix(c + 1);
    }
    cols.push_back(rest);
    if (cols.size() != 4 || n >= f.values.size()) {
      throw DataError(detail::where(source, line_no) + "malformed CSV row");
    }
    f.values[n++] = complex(detail::parse_number<double>(cols[2], source, line_no),
                            detail::parse_number<double>(cols[3], source, line_no));
  }
  if (n != f.values.size()) throw DataError(source + ": CSV row count does not match grid");
  return f;
}

// ---------------------------------------------------------------------------
// Slepian coefficients

inline void write_slepian_coeffs(std::ostream& out, const SlepianCoeffs& c) {
  out << "# L=" << c.L << " P=" << c.size() << '\n';
  for (std::size_t p = 0; p < c.size(); ++p) {
    out << p + 1 << ' ';
    detail::write_complex(out, c.values[p]);
    out << '\n';
  }
}

namespace detail {

// Body of "p re im" lines with p = 1..P in order.
inline std::vector<complex> read_indexed_complex(std::istream& in, std::size_t P,
                                                 const std::string& source) {
  std::vector<complex> values(P);
  std::string line;
  std::size_t line_no = 1;
  std::size_t next = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty() || toks.front().starts_with("#")) continue;
    if (toks.size() != 3) throw DataError(where(source, line_no) + "expected 'p re im'");
    const auto p = parse_number<std::size_t>(toks[0], source, line_no);
    if (p != next || p > P) {
      throw DataError(where(source, line_no) + "unexpected index " + std::to_string(p));
    }
    values[p - 1] = complex(parse_number<double>(toks[1], source, line_no),
                            parse_number<double>(toks[2], source, line_no));
    ++next;
  }
  if (next != P + 1) {
    throw DataError(source + ": expected " + std::to_string(P) + " coefficients, found " +
                    std::to_string(next - 1));
  }
  return values;
}

}  // namespace detail

inline SlepianCoeffs read_slepian_coeffs(std::istream& in, const std::string& source = "<stream>") {
  const auto header = detail::read_header(in, source);
  SlepianCoeffs c;
  c.L = detail::header_value<int>(header, "L", source);
  const auto P = detail::header_value<std::size_t>(header, "P", source);
  c.values = detail::read_indexed_complex(in, P, source);
  return c;
}

// ---------------------------------------------------------------------------
// Basis cache

inline void write_basis(std::ostream& out, const SlepianBasis& b) {
  out << "# L=" << b.L << " region=" << b.region.hash() << " N=" << format_double(b.shannon) << '\n';
  for (std::size_t p = 0; p < b.count(); ++p) {
    out << p + 1 << ' ' << format_double(b.eigenvalues[p]) << '\n';
    const auto col = b.eigenvectors.col(static_cast<Eigen::Index>(p));
    for (int l = 0; l < b.L; ++l) {
      for (int m = -l; m <= l; ++m) {
        out << l << ' ' << m << ' ';
        detail::write_complex(out, col(static_cast<Eigen::Index>(flat_index(l, m))));
        out << '\n';
      }
    }
  }
}

struct BasisFileHeader {
  int L = 0;
  std::string region_hash;
  double shannon = 0.0;
};

inline BasisFileHeader read_basis_header(std::istream& in, const std::string& source) {
  const auto header = detail::read_header(in, source);
  BasisFileHeader h;
  h.L = detail::header_value<int>(header, "L", source);
  h.shannon = detail::header_value<double>(header, "N", source);
  const auto it = header.find("region");
  if (it == header.end()) throw DataError(detail::where(source, 1) + "header is missing 'region='");
  h.region_hash = it->second;
  if (h.L < 1) throw DataError(detail::where(source, 1) + "bandlimit must be >= 1");
  return h;
}

// Reads a cache written by write_basis. The region is not stored in the file
// and is attached by the caller, which should compare its hash first.
inline SlepianBasis read_basis(std::istream& in, const Region& region,
                               const std::string& source = "<stream>") {
  const BasisFileHeader h = read_basis_header(in, source);
  if (h.region_hash != region.hash()) {
    throw DataError(source + ": cached region hash " + h.region_hash +
                    " does not match region " + region.hash());
  }
  const auto n = static_cast<Eigen::Index>(harmonic_count(h.L));
  SlepianBasis b;
  b.L = h.L;
  b.region = region;
  b.shannon = h.shannon;
  b.eigenvalues.resize(static_cast<std::size_t>(n));
  b.eigenvectors.resize(n, n);
  std::string line;
  std::size_t line_no = 1;
  auto next_tokens = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      auto toks = detail::split_ws(line);
      if (!toks.empty() && !toks.front().starts_with("#")) return toks;
    }
    throw DataError(source + ": unexpected end of basis file after line " + std::to_string(line_no));
  };
  for (Eigen::Index p = 0; p < n; ++p) {
    auto toks = next_tokens();
    if (toks.size() != 2 || detail::parse_number<Eigen::Index>(toks[0], source, line_no) != p + 1) {
      throw DataError(detail::where(source, line_no) + "expected 'p mu' for p=" + std::to_string(p + 1));
    }
    b.eigenvalues[static_cast<std::size_t>(p)] = detail::parse_number<double>(toks[1], source, line_no);
    for (Eigen::Index k = 0; k < n; ++k) {
      toks = next_tokens();
      if (toks.size() != 4) throw DataError(detail::where(source, line_no) + "expected 'l m re im'");
      const int l = detail::parse_number<int>(toks[0], source, line_no);
      const int m = detail::parse_number<int>(toks[1], source, line_no);
      if (l < 0 || l >= h.L || std::abs(m) > l) {
        throw DataError(detail::where(source, line_no) + "invalid degree/order pair");
      }
      b.eigenvectors(static_cast<Eigen::Index>(flat_index(l, m)), p) =
          complex(detail::parse_number<double>(toks[2], source, line_no),
                  detail::parse_number<double>(toks[3], source, line_no));
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Filter bank and wavelet coefficients

inline std::string tiling_header(const TilingParams& t, int J) {
  return "# lambda=" + format_double(t.lambda) + " J0=" + std::to_string(t.J0) +
         " J=" + std::to_string(J) + " Pmax=" + std::to_string(t.P_max);
}

inline void write_filter_bank(std::ostream& out, const FilterBank& bank) {
  out << tiling_header(bank.params, bank.J) << '\n';
  auto block = [&](const std::string& name, const std::vector<double>& v) {
    out << "# filter=" << name << '\n';
    for (std::size_t p = 0; p < v.size(); ++p) out << p + 1 << ' ' << format_double(v[p]) << '\n';
  };
  block("scaling", bank.scaling);
  for (int j = bank.params.J0; j <= bank.J; ++j) block("wavelet j=" + std::to_string(j), bank.wavelet(j));
}

inline FilterBank read_filter_bank(std::istream& in, const std::string& source = "<stream>") {
  const auto header = detail::read_header(in, source);
  FilterBank bank;
  bank.params.lambda = detail::header_value<double>(header, "lambda", source);
  bank.params.J0 = detail::header_value<int>(header, "J0", source);
  bank.params.P_max = detail::header_value<std::size_t>(header, "Pmax", source);
  bank.J = detail::header_value<int>(header, "J", source);
  if (bank.J < bank.params.J0 || bank.params.P_max == 0) {
    throw DataError(detail::where(source, 1) + "inconsistent tiling header");
  }
  bank.scaling.assign(bank.params.P_max, 0.0);
  bank.wavelets.assign(static_cast<std::size_t>(bank.J - bank.params.J0 + 1),
                       std::vector<double>(bank.params.P_max, 0.0));
  std::vector<double>* current = nullptr;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.front().starts_with("#")) {
      if (line.find("filter=scaling") != std::string::npos) {
        current = &bank.scaling;
      } else if (const auto pos = line.find("j="); pos != std::string::npos) {
        const int j = detail::parse_number<int>(std::string_view(line).substr(pos + 2), source, line_no);
        if (j < bank.params.J0 || j > bank.J) throw DataError(detail::where(source, line_no) + "scale out of range");
        current = &bank.wavelets[static_cast<std::size_t>(j - bank.params.J0)];
      }
      continue;
    }
    if (current == nullptr) throw DataError(detail::where(source, line_no) + "value before any filter block");
    if (toks.size() != 2) throw DataError(detail::where(source, line_no) + "expected 'p value'");
    const auto p = detail::parse_number<std::size_t>(toks[0], source, line_no);
    if (p < 1 || p > bank.params.P_max) throw DataError(detail::where(source, line_no) + "index out of range");
    (*current)[p - 1] = detail::parse_number<double>(toks[1], source, line_no);
  }
  return bank;
}

inline std::string scale_name(int j, bool scaling) { return scaling ? "scaling" : std::to_string(j); }

// One file per scale: the tiling header extended with the scale and bandlimit.
inline void write_wavelet_scale(std::ostream& out, const FilterBank& bank, const std::string& scale,
                                int L, const std::vector<complex>& coeffs) {
  out << tiling_header(bank.params, bank.J) << " scale=" << scale << " L=" << L << '\n';
  for (std::size_t p = 0; p < coeffs.size(); ++p) {
    out << p + 1 << ' ';
    detail::write_complex(out, coeffs[p]);
    out << '\n';
  }
}

struct WaveletScaleFile {
  TilingParams params;
  int J = 0;
  std::string scale;
  int L = 0;
  std::vector<complex> coeffs;
};

inline WaveletScaleFile read_wavelet_scale(std::istream& in, const std::string& source = "<stream>") {
  const auto header = detail::read_header(in, source);
  WaveletScaleFile f;
  f.params.lambda = detail::header_value<double>(header, "lambda", source);
  f.params.J0 = detail::header_value<int>(header, "J0", source);
  f.params.P_max = detail::header_value<std::size_t>(header, "Pmax", source);
  f.J = detail::header_value<int>(header, "J", source);
  f.L = detail::header_value<int>(header, "L", source);
  const auto it = header.find("scale");
  if (it == header.end()) throw DataError(detail::where(source, 1) + "header is missing 'scale='");
  f.scale = it->second;
  f.coeffs = detail::read_indexed_complex(in, f.params.P_max, source);
  return f;
}

// ---------------------------------------------------------------------------
// Path conveniences

template <class T, class Writer>
void save(const std::filesystem::path& path, const T& value, Writer writer) {
  auto out = detail::open_out(path);
  writer(out, value);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

inline HarmonicCoeffs load_harmonic_coeffs(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_harmonic_coeffs(in, path.string());
}

inline SampledField load_field(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_field(in, path.string());
}

inline SlepianCoeffs load_slepian_coeffs(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_slepian_coeffs(in, path.string());
}

inline FilterBank load_filter_bank(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_filter_bank(in, path.string());
}

inline WaveletScaleFile load_wavelet_scale(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_wavelet_scale(in, path.string());
}

}  // namespace slepwave::io
