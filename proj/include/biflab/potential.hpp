#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/family.hpp"
#include "biflab/parallel.hpp"
#include "biflab/projective.hpp"
#include "biflab/rational_map.hpp"
#include "biflab/region.hpp"

namespace biflab {

struct GreenResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Escape-rate Green function G_F(z) = lim d^-n log |F^n(z)| of the
/// homogeneous lift F of one map, evaluated at an explicit lift in C^2.
///
/// Iteration runs on coefficients scaled to max modulus 1; the scale's exact
/// contribution log(c) (1 - d^-N) / (d - 1) is added back at the end, so the
/// value is that of the original lift.
class GreenEvaluator {
 public:
  explicit GreenEvaluator(const RationalMap& f) : d_(f.degree()), p_(f.numerator()), q_(f.denominator()) {
    double c = 0.0;
    for (const auto& x : p_) c = std::max(c, std::abs(x));
    for (const auto& x : q_) c = std::max(c, std::abs(x));
    log_coeff_scale_ = std::log(c);
    double sp = 0.0, sq = 0.0;
    for (auto& x : p_) sp += std::abs(x /= c);
    for (auto& x : q_) sq += std::abs(x /= c);
    log_bound_ = std::log(std::max(sp, sq));
  }

  GreenResult operator()(std::array<Complex, 2> lift, int iter_budget, double tol) const {
    const double s0 = std::max(std::abs(lift[0]), std::abs(lift[1]));
    if (!(s0 > 0.0)) throw Error(ErrorKind::DegenerateParameter, "Green function at the zero vector");
    if (!std::isfinite(s0)) return {std::numeric_limits<double>::infinity(), true, 0};
    ProjectivePoint z(lift[0], lift[1]);
    GreenResult r;
    double acc = std::log(s0);
    double weight = 1.0 / d_;
    double sup = std::abs(log_bound_);
    const double tail_factor = 1.0 / (1.0 - 1.0 / d_);
    for (int n = 1; n <= iter_budget; ++n) {
      const MonomialTable t(z, d_);
      const Complex a = t.value(p_);
      const Complex b = t.value(q_);
      const double norm = std::max(std::abs(a), std::abs(b));
      const double inc = std::log(norm);
      acc += weight * inc;
      sup = std::max(sup, std::abs(inc));
      z = ProjectivePoint(a, b);
      r.iterations = n;
      // weight is now d^-n; bound on the remaining tail of the series
      if (sup * weight * tail_factor < tol) {
        r.converged = true;
        weight /= d_;
        break;
      }
      weight /= d_;
    }
    const double dn = weight * d_;  // d^-N
    r.value = std::max(0.0, acc + log_coeff_scale_ * (1.0 - dn) / (d_ - 1));
    return r;
  }

 private:
  int d_;
  std::vector<Complex> p_;
  std::vector<Complex> q_;
  double log_coeff_scale_ = 0.0;
  double log_bound_ = 0.0;
};

/// G_lambda at a point of the sphere, using the affine lift (z, 1); +inf at infinity.
inline GreenResult green_value(const Family& fam, Complex lambda, const ProjectivePoint& z, int iter_budget, double tol) {
  if (iter_budget < 1) throw Error(ErrorKind::InvalidArgument, "iter_budget must be >= 1");
  const GreenEvaluator g(specialize(fam, lambda));
  if (z.is_infinity()) return {std::numeric_limits<double>::infinity(), true, 0};
  return g({z.z0() / z.z1(), 1.0}, iter_budget, tol);
}

/// Bifurcation potential L(lambda) = G_lambda(a(lambda)) using the polynomial
/// lift (marked_num(lambda), marked_den(lambda)) of the marked point.
inline GreenResult marked_potential(const Family& fam, Complex lambda, int iter_budget, double tol) {
  const GreenEvaluator g(specialize(fam, lambda));
  return g({fam.marked_num(lambda), fam.marked_den(lambda)}, iter_budget, tol);
}

/// Values of L on a square-cell lattice; row-major with rows along Im(lambda).
/// Masked (degenerate) nodes hold NaN.
struct PotentialGrid {
  Region region;
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  int iter_budget = 0;
  double tol = 0.0;
  std::vector<double> values;
  std::int64_t nonconverged = 0;

  Complex node(int i, int j) const { return region.min + Complex(i * h, j * h); }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
  bool masked(int i, int j) const { return std::isnan(at(i, j)); }
};

/// Snaps a requested region to square cells: keeps min and the real extent,
/// and sets Im(max) = Im(min) + (ny - 1) h.
inline Region square_cell_region(Region r, int nx, int ny) {
  const double h = r.width() / (nx - 1);
  r.max = Complex(r.max.real(), r.min.imag() + (ny - 1) * h);
  return r;
}

inline PotentialGrid potential_grid(const Family& fam, Region region, int nx, int ny, int iter_budget, double tol,
                                    unsigned threads = 0) {
  if (nx < 16 || ny < 16) throw Error(ErrorKind::InvalidArgument, "potential grid needs nx, ny >= 16");
  if (iter_budget < 1) throw Error(ErrorKind::InvalidArgument, "iter_budget must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  if (!(region.width() > 0.0) || !(region.height() > 0.0)) throw Error(ErrorKind::InvalidArgument, "empty region");
  fam.validate();
  PotentialGrid g;
  g.region = square_cell_region(region, nx, ny);
  g.nx = nx;
  g.ny = ny;
  g.h = g.region.width() / (nx - 1);
  g.iter_budget = iter_budget;
  g.tol = tol;
  g.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  std::vector<std::uint8_t> converged(g.values.size(), 1);
  parallel_for(static_cast<std::size_t>(ny), threads, [&](std::size_t j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t idx = j * nx + i;
      try {
        const GreenResult r = marked_potential(fam, g.node(i, static_cast<int>(j)), iter_budget, tol);
        g.values[idx] = r.value;
        converged[idx] = r.converged ? 1 : 0;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateParameter) throw;
        g.values[idx] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
  for (auto c : converged) g.nonconverged += (c == 0);
  return g;
}

/// Empirical Holder exponent of L: slope of log(max increment) against
/// log(separation) for separations of 1, 2, 4, ... cells along rows and columns.
inline double holder_exponent(const PotentialGrid& g) {
  std::vector<double> xs, ys;
  for (int s = 1; s <= std::min(g.nx, g.ny) / 8; s *= 2) {
    double worst = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (i + s < g.nx) {
          const double v = std::abs(g.at(i + s, j) - g.at(i, j));
          if (std::isfinite(v)) worst = std::max(worst, v);
        }
        if (j + s < g.ny) {
          const double v = std::abs(g.at(i, j + s) - g.at(i, j));
          if (std::isfinite(v)) worst = std::max(worst, v);
        }
      }
    if (worst > 0.0) {
      xs.push_back(std::log(s * g.h));
      ys.push_back(std::log(worst));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxy / sxx;
}

}  // namespace biflab
