#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/polynomial.hpp"
#include "biflab/projective.hpp"
#include "biflab/rational_map.hpp"

namespace biflab {

/// Spherical distance below which an orbit point counts as critical.
inline constexpr double kCriticalHitDistance = 1e-12;

/// One-parameter algebraic family lambda -> f_lambda of degree d with a marked
/// point a(lambda) = [marked_num(lambda) : marked_den(lambda)]. Each
/// coefficient of the homogeneous lift is a polynomial in lambda.
struct Family {
  std::string name;
  int degree = 2;
  std::vector<Polynomial> numerator;    // d + 1 entries, z0^k z1^(d-k) coefficients
  std::vector<Polynomial> denominator;  // d + 1 entries
  Polynomial marked_num{{Complex{0.0}, Complex{1.0}}};
  Polynomial marked_den{{Complex{1.0}}};

  /// Throws InvalidArgument when the coefficient lists do not match the degree.
  void validate() const {
    if (degree < 2) throw Error(ErrorKind::InvalidArgument, "family degree must be >= 2");
    if (numerator.size() != static_cast<std::size_t>(degree) + 1 ||
        denominator.size() != static_cast<std::size_t>(degree) + 1)
      throw Error(ErrorKind::InvalidArgument, "family needs degree+1 numerator and denominator coefficient polynomials");
    if (marked_num.empty() || marked_den.empty())
      throw Error(ErrorKind::InvalidArgument, "marked point polynomials must be non-empty");
  }
};

/// f_lambda(z) = z^d + lambda with marked critical value a(lambda) = lambda.
inline Family unicritical_family(int d) {
  Family f;
  f.name = "unicritical";
  f.degree = d;
  f.numerator.assign(d + 1, Polynomial({Complex{}}));
  f.denominator.assign(d + 1, Polynomial({Complex{}}));
  f.numerator[0] = Polynomial({Complex{0.0}, Complex{1.0}});
  f.numerator[d] = Polynomial({Complex{1.0}});
  f.denominator[0] = Polynomial({Complex{1.0}});
  return f;
}

/// Constant family f_lambda = f0 with f0(z) = (z^2 + 1)^2 / (4 z (z^2 - 1)),
/// a degree-4 Lattes map, and marked point a(lambda) = lambda.
inline Family lattes4_family() {
  Family f;
  f.name = "lattes4";
  f.degree = 4;
  const std::array<double, 5> num{1.0, 0.0, 2.0, 0.0, 1.0};
  const std::array<double, 5> den{0.0, -4.0, 0.0, 4.0, 0.0};
  for (int k = 0; k <= 4; ++k) {
    f.numerator.emplace_back(std::vector<Complex>{num[k]});
    f.denominator.emplace_back(std::vector<Complex>{den[k]});
  }
  return f;
}

/// Family data evaluated at one parameter: the map, the lambda-derivatives of
/// its coefficients, and the marked point with its derivative.
struct Specialization {
  Complex lambda;
  RationalMap map;
  std::vector<Complex> num_dot;
  std::vector<Complex> den_dot;
  std::array<Complex, 2> marked;      // homogeneous lift (num(lambda), den(lambda))
  std::array<Complex, 2> marked_dot;  // its lambda-derivative
};

inline RationalMap specialize(const Family& fam, Complex lambda) {
  fam.validate();
  std::vector<Complex> p, q;
  p.reserve(fam.degree + 1);
  q.reserve(fam.degree + 1);
  for (int k = 0; k <= fam.degree; ++k) {
    p.push_back(fam.numerator[k](lambda));
    q.push_back(fam.denominator[k](lambda));
  }
  return RationalMap(std::move(p), std::move(q));
}

inline Specialization specialize_with_derivatives(const Family& fam, Complex lambda) {
  RationalMap map = specialize(fam, lambda);
  Specialization s{lambda, std::move(map), {}, {}, {}, {}};
  for (int k = 0; k <= fam.degree; ++k) {
    s.num_dot.push_back(fam.numerator[k].eval_dual(lambda).der);
    s.den_dot.push_back(fam.denominator[k].eval_dual(lambda).der);
  }
  const Dual<Complex> an = fam.marked_num.eval_dual(lambda);
  const Dual<Complex> ad = fam.marked_den.eval_dual(lambda);
  if (an.val == Complex{} && ad.val == Complex{})
    throw Error(ErrorKind::DegenerateParameter, "marked point lift vanishes");
  s.marked = {an.val, ad.val};
  s.marked_dot = {an.der, ad.der};
  return s;
}

/// Derivative of a point in a tagged chart: chart 0 is z = z0/z1, chart 1 is w = z1/z0.
struct ChartDerivative {
  LogComplex value;
  int chart = 0;
};

/// Projective point carried with its lambda-tangent. The tangent is e^log_scale * tangent
/// relative to the same (dropped) positive scale as the point; common positive
/// rescalings leave every chart derivative unchanged.
struct ProjectiveJet {
  ProjectivePoint point;
  std::array<Complex, 2> tangent{};
  double log_scale = -std::numeric_limits<double>::infinity();

  static ProjectiveJet lift(std::array<Complex, 2> z, std::array<Complex, 2> dz) {
    ProjectiveJet j;
    const double s = std::max(std::abs(z[0]), std::abs(z[1]));
    j.point = ProjectivePoint(z[0], z[1]);
    j.set_tangent(dz, -std::log(s));
    return j;
  }

  void set_tangent(std::array<Complex, 2> t, double log_factor) {
    const double m = std::max(std::abs(t[0]), std::abs(t[1]));
    if (m == 0.0) {
      tangent = {};
      log_scale = -std::numeric_limits<double>::infinity();
    } else {
      tangent = {t[0] / m, t[1] / m};
      log_scale = log_factor + std::log(m);
    }
  }

  /// log of |z0 t1 - z1 t0| e^L, the numerator shared by chart and spherical derivatives.
  LogComplex cross() const {
    const Complex c = tangent[0] * point.z1() - point.z0() * tangent[1];
    LogComplex r = LogComplex::from(c);
    if (!r.is_zero()) r.log_abs += log_scale;
    return r;
  }

  /// Affine derivative d(z0/z1)/dlambda.
  LogComplex affine_derivative() const {
    return cross() / (LogComplex::from(point.z1()) * LogComplex::from(point.z1()));
  }

  ChartDerivative chart_derivative() const {
    if (!point.prefers_infinity_chart()) return {affine_derivative(), 0};
    // d(z1/z0) = (t1 z0 - z1 t0) / z0^2 = -cross / z0^2
    LogComplex v = cross() / (LogComplex::from(point.z0()) * LogComplex::from(point.z0()));
    v.arg = std::remainder(v.arg + std::numbers::pi, kTwoPi);
    return {v, 1};
  }

  /// log of the spherical norm |d a| / (1 + |a|^2), chart-free.
  double log_spherical_norm() const { return cross().log_abs - std::log(point.norm2_sq()); }
};

/// One step of the orbit jet under the lift (P, Q) of f_lambda, including the
/// explicit lambda-dependence of the coefficients.
inline ProjectiveJet jet_step(const Specialization& s, const ProjectiveJet& j) {
  const int d = s.map.degree();
  const MonomialTable t(j.point, d);
  const FormValue P = t.eval(s.map.numerator());
  const FormValue Q = t.eval(s.map.denominator());
  const Complex Pdot = t.value(s.num_dot);
  const Complex Qdot = t.value(s.den_dot);

  const double base = std::isfinite(j.log_scale) ? std::max(j.log_scale, 0.0) : 0.0;
  const double a = std::exp(-base);
  const double b = std::isfinite(j.log_scale) ? std::exp(j.log_scale - base) : 0.0;
  std::array<Complex, 2> nt{a * Pdot + b * (P.d0 * j.tangent[0] + P.d1 * j.tangent[1]),
                            a * Qdot + b * (Q.d0 * j.tangent[0] + Q.d1 * j.tangent[1])};
  // only the part transverse to (P, Q) matters; the radial part grows like d^n and drowns it
  const Complex along = (nt[0] * std::conj(P.value) + nt[1] * std::conj(Q.value)) /
                        (std::norm(P.value) + std::norm(Q.value));
  nt = {nt[0] - along * P.value, nt[1] - along * Q.value};
  const double s_norm = std::max(std::abs(P.value), std::abs(Q.value));
  ProjectiveJet out;
  out.point = ProjectivePoint(P.value, Q.value);
  out.set_tangent(nt, base - std::log(s_norm));
  return out;
}

/// Marked orbit a_0, ..., a_n with the chain-rule partial sums of log f^# and
/// the forward-mode parameter derivatives of every a_m.
struct OrbitRecord {
  Complex lambda;
  std::vector<ProjectivePoint> points;         // a_0 .. a_n
  std::vector<double> log_sph;                 // entry m-1 = sum_{k<m} log f^#(a_k), m = 1..n
  std::vector<ChartDerivative> param_deriv;    // d a_m / d lambda, m = 0..n
  std::vector<LogComplex> param_deriv_affine;  // same in the affine chart
  std::vector<double> log_param_norm;          // log of the spherical norm, m = 0..n
  double min_crit_dist = 1.0;
  std::optional<int> critical_hit;             // first k <= n with a_k critical
  std::optional<int> escape;                   // first k <= n with |a_k| past the escape radius (polynomial maps)

  int length() const { return static_cast<int>(points.size()) - 1; }
};

inline double distance_to_set(const ProjectivePoint& z, const std::vector<ProjectivePoint>& set) {
  double m = 1.0;
  for (const auto& c : set) m = std::min(m, chordal_distance(z, c));
  return m;
}

inline OrbitRecord marked_orbit(const Family& fam, Complex lambda, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "orbit length must be positive");
  const Specialization s = specialize_with_derivatives(fam, lambda);
  const auto crit = s.map.critical_points();
  const std::optional<double> radius = s.map.escape_radius();

  OrbitRecord rec;
  rec.lambda = lambda;
  rec.points.reserve(n + 1);
  rec.log_sph.reserve(n);
  ProjectiveJet jet = ProjectiveJet::lift(s.marked, s.marked_dot);
  double partial = 0.0;
  for (int k = 0;; ++k) {
    rec.points.push_back(jet.point);
    rec.param_deriv.push_back(jet.chart_derivative());
    rec.param_deriv_affine.push_back(jet.affine_derivative());
    rec.log_param_norm.push_back(jet.log_spherical_norm());
    const double dist = distance_to_set(jet.point, crit);
    rec.min_crit_dist = std::min(rec.min_crit_dist, dist);
    if (!rec.critical_hit && dist <= kCriticalHitDistance) rec.critical_hit = k;
    if (radius && !rec.escape && (jet.point.is_infinity() || std::abs(jet.point.to_affine()) > *radius)) rec.escape = k;
    if (k == n) break;
    partial += s.map.log_spherical_derivative(jet.point);
    rec.log_sph.push_back(partial);
    jet = jet_step(s, jet);
  }
  return rec;
}

/// d a_n / d lambda from the transfer identity
///   (f^n)'(a) * (a' + sum_{k<n} fdot(a_k) / (f^{k+1})'(a)),
/// evaluated in the affine chart with every factor in log form. Throws
/// CriticalHit when some a_k, k <= n, lies on Crit(f_lambda).
inline LogComplex param_derivative_transfer(const Family& fam, Complex lambda, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "orbit length must be positive");
  const Specialization s = specialize_with_derivatives(fam, lambda);
  const auto crit = s.map.critical_points();
  const int d = s.map.degree();

  const auto& [an, ad] = s.marked;
  const auto& [an_dot, ad_dot] = s.marked_dot;
  if (ad == Complex{}) throw Error(ErrorKind::InvalidArgument, "marked point at infinity; transfer identity is affine");
  const LogComplex a_dot = LogComplex::from(an_dot * ad - an * ad_dot) / LogComplex::from(ad * ad);

  ProjectivePoint z(an, ad);
  LogComplex prefactor = LogComplex::one();  // (f^k)'(a)
  LogSum sum;
  sum.add(a_dot);
  for (int k = 0; k <= n; ++k) {
    if (distance_to_set(z, crit) <= kCriticalHitDistance)
      throw Error(ErrorKind::CriticalHit, "orbit point " + std::to_string(k) + " is critical");
    if (k == n) break;
    const MonomialTable t(z, d);
    const FormValue P = t.eval(s.map.numerator());
    const FormValue Q = t.eval(s.map.denominator());
    if (z.is_infinity() || Q.value == Complex{})
      throw Error(ErrorKind::InvalidArgument, "orbit meets infinity; transfer identity is affine");
    // f'(z) = (J / d) z1^2 / Q^2 and fdot(z) = (Pdot Q - P Qdot) / Q^2 on the normalized lift.
    const Complex jac = (P.d0 * Q.d1 - P.d1 * Q.d0) / static_cast<double>(d);
    const LogComplex q2 = LogComplex::from(Q.value) * LogComplex::from(Q.value);
    const LogComplex fprime = LogComplex::from(jac) * LogComplex::from(z.z1()) * LogComplex::from(z.z1()) / q2;
    const LogComplex fdot = LogComplex::from(t.value(s.num_dot) * Q.value - P.value * t.value(s.den_dot)) / q2;
    prefactor *= fprime;
    sum.add(fdot / prefactor);
    z = ProjectivePoint(P.value, Q.value);
  }
  return prefactor * sum.result();
}

}  // namespace biflab
