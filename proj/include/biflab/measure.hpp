#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/parallel.hpp"
#include "biflab/potential.hpp"
#include "biflab/region.hpp"

namespace biflab {

/// Largest clipped fraction for which a measure grid is usable.
inline constexpr double kMaxClippedFraction = 0.05;

/// Cell masses of the bifurcation measure on the interior nodes of a
/// potential grid. Cell (ci, cj) is the square of side h centered on
/// potential node (ci + 1, cj + 1).
struct MeasureGrid {
  Region region;  // node region of the source potential grid
  int nx = 0;     // node counts of the source grid
  int ny = 0;
  double h = 0.0;
  std::vector<double> masses;  // (nx - 2) x (ny - 2), row-major
  double total_mass = 0.0;
  double clipped_mass = 0.0;
  std::int64_t masked_cells = 0;
  std::string source_hash;

  int cells_x() const { return nx - 2; }
  int cells_y() const { return ny - 2; }
  Complex center(int ci, int cj) const { return region.min + Complex((ci + 1) * h, (cj + 1) * h); }
  double mass(int ci, int cj) const { return masses[static_cast<std::size_t>(cj) * cells_x() + ci]; }

  double clipped_fraction() const {
    const double denom = total_mass + clipped_mass;
    return denom > 0.0 ? clipped_mass / denom : 0.0;
  }
  bool usable() const { return clipped_fraction() < kMaxClippedFraction; }
};

/// Builds a grid from explicit nonnegative cell masses (synthetic measures, file loading).
inline MeasureGrid make_measure_grid(Region node_region, int nx, int ny, std::vector<double> masses) {
  if (nx < 3 || ny < 3) throw Error(ErrorKind::InvalidArgument, "measure grid needs at least 3 nodes per side");
  if (masses.size() != static_cast<std::size_t>(nx - 2) * (ny - 2))
    throw Error(ErrorKind::InvalidArgument, "mass array does not match the grid shape");
  MeasureGrid m;
  m.region = node_region;
  m.nx = nx;
  m.ny = ny;
  m.h = node_region.width() / (nx - 1);
  m.masses = std::move(masses);
  for (double v : m.masses) {
    if (!(v >= 0.0)) throw Error(ErrorKind::InvalidArgument, "cell masses must be nonnegative");
    m.total_mass += v;
  }
  return m;
}

/// (1 / 2 pi) times the 5-point stencil at every interior node, without clipping.
/// Nodes whose stencil touches a masked value give NaN.
inline std::vector<double> stencil_masses(const PotentialGrid& pg, unsigned threads = 0) {
  const int cx = pg.nx - 2;
  const int cy = pg.ny - 2;
  std::vector<double> out(static_cast<std::size_t>(cx) * cy);
  parallel_for(static_cast<std::size_t>(cy), threads, [&](std::size_t cj) {
    const int j = static_cast<int>(cj) + 1;
    for (int i = 1; i <= cx; ++i) {
      const double s = pg.at(i + 1, j) + pg.at(i - 1, j) + pg.at(i, j + 1) + pg.at(i, j - 1) - 4.0 * pg.at(i, j);
      out[cj * cx + (i - 1)] = s / kTwoPi;
    }
  });
  return out;
}

/// Discrete Laplacian measure; negative outputs are clipped to 0 and tallied.
/// Does not enforce the usability gate.
inline MeasureGrid laplacian_measure_unchecked(const PotentialGrid& pg, unsigned threads = 0) {
  if (pg.nx < 3 || pg.ny < 3) throw Error(ErrorKind::InvalidArgument, "potential grid too small");
  std::vector<double> raw = stencil_masses(pg, threads);
  MeasureGrid m;
  m.region = pg.region;
  m.nx = pg.nx;
  m.ny = pg.ny;
  m.h = pg.h;
  for (double& v : raw) {
    if (std::isnan(v)) {
      ++m.masked_cells;
      v = 0.0;
    } else if (v < 0.0) {
      m.clipped_mass += -v;
      v = 0.0;
    } else {
      m.total_mass += v;
    }
  }
  m.masses = std::move(raw);
  return m;
}

/// As above, throwing UnusableGrid when the clipped fraction reaches 5%.
inline MeasureGrid laplacian_measure(const PotentialGrid& pg, unsigned threads = 0) {
  MeasureGrid m = laplacian_measure_unchecked(pg, threads);
  if (!m.usable())
    throw Error(ErrorKind::UnusableGrid, "clipped mass fraction " + std::to_string(m.clipped_fraction()) + " >= 0.05");
  return m;
}

/// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Draws parameters from the discrete measure: a cell with probability
/// mass / total by CDF inversion, then a uniform point in that cell.
inline std::vector<Complex> sample(const MeasureGrid& mg, int count, std::uint64_t seed) {
  if (!(mg.total_mass > 0.0)) throw Error(ErrorKind::EmptyMeasure, "cannot sample a measure with zero total mass");
  if (count < 0) throw Error(ErrorKind::InvalidArgument, "negative sample count");
  std::vector<double> cdf(mg.masses.size());
  double run = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) cdf[k] = (run += mg.masses[k]);
  std::mt19937_64 rng(seed);
  std::vector<Complex> out;
  out.reserve(count);
  const int cx = mg.cells_x();
  for (int s = 0; s < count; ++s) {
    const double u = unit_uniform(rng) * run;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // skip zero-mass cells that share the CDF value
    while (mg.masses[static_cast<std::size_t>(it - cdf.begin())] == 0.0 && it != cdf.begin()) --it;
    const auto k = static_cast<int>(it - cdf.begin());
    const Complex c = mg.center(k % cx, k / cx);
    const double ox = unit_uniform(rng) - 0.5;
    const double oy = unit_uniform(rng) - 0.5;
    out.push_back(c + Complex(ox * mg.h, oy * mg.h));
  }
  return out;
}

namespace detail {

// area of {0 <= u <= x, 0 <= v <= y, u^2 + v^2 <= r^2} for x, y >= 0
inline double quadrant_disk_area(double x, double y, double r) {
  if (x * x + y * y <= r * r) return x * y;
  auto g = [r](double u) { return 0.5 * (u * std::sqrt(std::max(0.0, r * r - u * u)) + r * r * std::asin(std::min(1.0, u / r))); };
  const double xe = std::min(x, r);
  const double us = std::min(xe, std::sqrt(std::max(0.0, r * r - y * y)));
  return y * us + g(xe) - g(us);
}

inline double signed_disk_area(double x, double y, double r) {
  const double s = (x < 0) != (y < 0) ? -1.0 : 1.0;
  return s * quadrant_disk_area(std::abs(x), std::abs(y), r);
}

}  // namespace detail

/// Fraction of the square cell (side h) lying inside the disk B(center, r).
inline double cell_disk_fraction(Complex cell, double h, Complex center, double r) {
  const double half = 0.5 * h;
  const double dx = std::abs(cell.real() - center.real());
  const double dy = std::abs(cell.imag() - center.imag());
  if (std::hypot(dx + half, dy + half) <= r) return 1.0;
  if (std::hypot(std::max(0.0, dx - half), std::max(0.0, dy - half)) >= r) return 0.0;
  const double a = dx - half, b = dx + half, c = dy - half, d = dy + half;
  using detail::signed_disk_area;
  const double area = signed_disk_area(b, d, r) - signed_disk_area(a, d, r) - signed_disk_area(b, c, r) + signed_disk_area(a, c, r);
  return std::clamp(area / (h * h), 0.0, 1.0);
}

/// mu(B(center, r)), each cell weighted by the fraction of its area inside the disk.
inline double ball_mass(const MeasureGrid& mg, Complex center, double r) {
  if (r < 2.0 * mg.h) throw Error(ErrorKind::ResolutionExceeded, "ball radius below two grid spacings");
  const int cx = mg.cells_x();
  const int cy = mg.cells_y();
  const Complex rel = center - mg.region.min;
  const int i0 = std::max(0, static_cast<int>(std::floor((rel.real() - r) / mg.h)) - 2);
  const int i1 = std::min(cx - 1, static_cast<int>(std::ceil((rel.real() + r) / mg.h)) + 1);
  const int j0 = std::max(0, static_cast<int>(std::floor((rel.imag() - r) / mg.h)) - 2);
  const int j1 = std::min(cy - 1, static_cast<int>(std::ceil((rel.imag() + r) / mg.h)) + 1);
  double total = 0.0;
  for (int cj = j0; cj <= j1; ++cj)
    for (int ci = i0; ci <= i1; ++ci) {
      const double m = mg.mass(ci, cj);
      if (m == 0.0) continue;
      total += m * cell_disk_fraction(mg.center(ci, cj), mg.h, center, r);
    }
  return total;
}

}  // namespace biflab
