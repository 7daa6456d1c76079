#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <variant>
#include <vector>

#include "slepwave/errors.hpp"
#include "slepwave/sphere_core.hpp"

namespace slepwave {

struct PolarCap {
  double opening = 0.0;  // angular radius, radians
  double center_theta = 0.0;
  double center_phi = 0.0;

  bool at_north_pole() const { return center_theta == 0.0; }
  bool contains(double theta, double phi) const {
    return angular_distance(theta, phi, center_theta, center_phi) <= opening;
  }
};

struct GridMask {
  GridSpec grid;
  std::vector<std::uint8_t> inside;  // one flag per grid node, theta-major
};

// A subset of the sphere: an analytic polar cap or an indicator on grid nodes.
class Region {
 public:
  using Shape = std::variant<PolarCap, GridMask>;

  // Placeholder with zero area; use the named constructors for real regions.
  Region() = default;

  static Region polar_cap(double opening, double center_theta = 0.0, double center_phi = 0.0) {
    if (!(opening > 0.0 && opening < pi)) {
      throw std::invalid_argument("polar cap opening must lie in (0, pi)");
    }
    if (!(center_theta >= 0.0 && center_theta <= pi)) {
      throw std::invalid_argument("polar cap centre colatitude must lie in [0, pi]");
    }
    Region r;
    r.shape_ = PolarCap{opening, center_theta, center_phi};
    r.area_ = 2.0 * pi * (1.0 - std::cos(opening));
    return r;
  }

  static Region grid_mask(GridSpec grid, std::vector<std::uint8_t> inside) {
    if (inside.size() != grid.size()) {
      throw DataError("grid mask has " + std::to_string(inside.size()) + " flags, grid has " +
                      std::to_string(grid.size()) + " nodes");
    }
    double area = 0.0;
    bool any = false;
    for (int i = 0; i < grid.n_theta; ++i) {
      for (int j = 0; j < grid.n_phi; ++j) {
        if (inside[grid.index(i, j)]) {
          area += grid.weights[i];
          any = true;
        }
      }
    }
    if (!any) throw DataError("region mask is empty");
    Region r;
    r.shape_ = GridMask{std::move(grid), std::move(inside)};
    r.area_ = area;
    return r;
  }

  static Region full_sphere(const GridSpec& grid) {
    return grid_mask(grid, std::vector<std::uint8_t>(grid.size(), 1));
  }

  // Nodes inside the cap where the field is positive.
  static Region thresholded_cap(const PolarCap& cap, const SampledField& field) {
    const GridSpec& g = field.grid;
    std::vector<std::uint8_t> inside(g.size(), 0);
    for (int i = 0; i < g.n_theta; ++i) {
      for (int j = 0; j < g.n_phi; ++j) {
        inside[g.index(i, j)] =
            cap.contains(g.theta[i], g.phi[j]) && field(i, j).real() > 0.0 ? 1 : 0;
      }
    }
    return grid_mask(g, std::move(inside));
  }

  double area() const { return area_; }
  const Shape& shape() const { return shape_; }
  bool is_cap() const { return std::holds_alternative<PolarCap>(shape_); }
  const PolarCap* cap() const { return std::get_if<PolarCap>(&shape_); }
  const GridMask* mask() const { return std::get_if<GridMask>(&shape_); }

  // 64-bit FNV-1a over a canonical encoding of the shape, hex formatted.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const void* data, std::size_t n) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
      }
    };
    if (const auto* c = cap()) {
      const char tag = 'c';
      feed(&tag, 1);
      for (double v : {c->opening, c->center_theta, c->center_phi}) feed(&v, sizeof v);
    } else {
      const auto& m = *mask();
      const char tag = 'm';
      feed(&tag, 1);
      for (int v : {m.grid.L, m.grid.n_theta, m.grid.n_phi}) feed(&v, sizeof v);
      feed(m.inside.data(), m.inside.size());
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  Shape shape_;
  double area_ = 0.0;
};

// Quadrature rule over a region. For masks the nodes are the masked grid
// nodes (grid_index records where). For caps the rule is built in the cap's
// own frame: Gauss-Legendre in cos of the distance from the centre and 2L-1
// equispaced azimuths, which is exact for products of bandlimit-L functions.
struct RegionQuadrature {
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<double> weight;
  std::vector<std::size_t> grid_index;

  std::size_t size() const { return weight.size(); }
};

inline RegionQuadrature region_quadrature(const Region& region, int L) {
  RegionQuadrature q;
  if (const auto* m = region.mask()) {
    const GridSpec& g = m->grid;
    for (int i = 0; i < g.n_theta; ++i) {
      for (int j = 0; j < g.n_phi; ++j) {
        const std::size_t k = g.index(i, j);
        if (!m->inside[k]) continue;
        q.theta.push_back(g.theta[i]);
        q.phi.push_back(g.phi[j]);
        q.weight.push_back(g.weights[i]);
        q.grid_index.push_back(k);
      }
    }
    return q;
  }
  const PolarCap& c = *region.cap();
  std::vector<double> x, w;
  gauss_legendre(L, x, w);
  const double lo = std::cos(c.opening);
  const double half = 0.5 * (1.0 - lo);
  const int n_az = 2 * L - 1;
  const double daz = 2.0 * pi / n_az;

  double e3[3], e1[3], e2[3];
  to_cartesian(c.center_theta, c.center_phi, e3);
  e1[0] = std::cos(c.center_theta) * std::cos(c.center_phi);
  e1[1] = std::cos(c.center_theta) * std::sin(c.center_phi);
  e1[2] = -std::sin(c.center_theta);
  e2[0] = -std::sin(c.center_phi);
  e2[1] = std::cos(c.center_phi);
  e2[2] = 0.0;

  q.theta.reserve(static_cast<std::size_t>(L) * n_az);
  for (int i = 0; i < L; ++i) {
    const double ct = lo + half * (x[i] + 1.0);
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double wi = w[i] * half * daz;
    for (int j = 0; j < n_az; ++j) {
      const double a = j * daz;
      double p[3];
      for (int d = 0; d < 3; ++d) {
        p[d] = ct * e3[d] + st * (std::cos(a) * e1[d] + std::sin(a) * e2[d]);
      }
      double phi = std::atan2(p[1], p[0]);
      if (phi < 0.0) phi += 2.0 * pi;
      q.theta.push_back(std::acos(std::clamp(p[2], -1.0, 1.0)));
      q.phi.push_back(phi);
      q.weight.push_back(wi);
    }
  }
  return q;
}

inline double shannon_number(const Region& region, int L) {
  return region.area() / four_pi * static_cast<double>(L) * static_cast<double>(L);
}

// Textual region description as accepted by the CLI and config files.
struct RegionConfig {
  std::string kind = "polar_cap";  // polar_cap | full_sphere | mask
  double opening_deg = 40.0;
  double center_theta_deg = 0.0;
  double center_phi_deg = 0.0;
  std::string threshold_field;  // optional coefficient file, polar_cap only
  std::string mask_file;        // field file, kind=mask only
};

inline double deg_to_rad(double d) { return d * pi / 180.0; }

// Builds a region on the given grid. A polar cap with a threshold field
// becomes a grid mask: node inside iff within the cap and field value > 0.
// A mask field marks nodes with real part > 0.5 as inside.
inline Region build_region(const RegionConfig& cfg, const GridSpec& grid,
                           const HarmonicCoeffs* threshold = nullptr,
                           const SampledField* mask_field = nullptr) {
  if (cfg.kind == "polar_cap") {
    const double opening = deg_to_rad(cfg.opening_deg);
    Region cap = Region::polar_cap(opening, deg_to_rad(cfg.center_theta_deg),
                                   deg_to_rad(cfg.center_phi_deg));
    if (threshold == nullptr) return cap;
    HarmonicCoeffs t = *threshold;
    if (t.L > grid.L) {
      HarmonicCoeffs cut(grid.L);
      std::copy_n(t.values.begin(), cut.values.size(), cut.values.begin());
      t = std::move(cut);
    }
    return Region::thresholded_cap(*cap.cap(), inverse_sht(t, grid));
  }
  if (cfg.kind == "full_sphere") return Region::full_sphere(grid);
  if (cfg.kind == "mask") {
    if (mask_field == nullptr) throw std::invalid_argument("kind=mask requires a mask field");
    if (!mask_field->grid.same_layout(grid)) {
      throw DataError("mask field grid does not match bandlimit " + std::to_string(grid.L));
    }
    std::vector<std::uint8_t> inside(grid.size());
    for (std::size_t k = 0; k < inside.size(); ++k) {
      inside[k] = mask_field->values[k].real() > 0.5 ? 1 : 0;
    }
    return Region::grid_mask(grid, std::move(inside));
  }
  throw std::invalid_argument("unknown region kind '" + cfg.kind + "'");
}

}  // namespace slepwave
