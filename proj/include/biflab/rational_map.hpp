#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <optional>
#include <utility>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/polynomial.hpp"
#include "biflab/projective.hpp"

namespace biflab {

/// Value and first partials of a binary form sum_k c_k z0^k z1^(d-k).
struct FormValue {
  Complex value;
  Complex d0;  // partial in z0
  Complex d1;  // partial in z1
};

/// Largest supported map degree (fixed-capacity monomial tables).
inline constexpr int kMaxDegree = 64;

/// Powers z0^k, z1^k for k = 0..d; both moduli are <= 1 so nothing overflows.
struct MonomialTable {
  std::array<Complex, kMaxDegree + 1> pow0;
  std::array<Complex, kMaxDegree + 1> pow1;
  int deg;

  MonomialTable(const ProjectivePoint& p, int degree) : deg(degree) {
    pow0[0] = pow1[0] = 1.0;
    for (int k = 1; k <= degree; ++k) {
      pow0[k] = pow0[k - 1] * p.z0();
      pow1[k] = pow1[k - 1] * p.z1();
    }
  }

  int degree() const { return deg; }

  Complex value(std::span<const Complex> c) const {
    const int d = degree();
    Complex s{};
    for (int k = 0; k <= d; ++k) s += c[k] * pow0[k] * pow1[d - k];
    return s;
  }

  FormValue eval(std::span<const Complex> c) const {
    const int d = degree();
    FormValue f{};
    for (int k = 0; k <= d; ++k) {
      f.value += c[k] * pow0[k] * pow1[d - k];
      if (k > 0) f.d0 += static_cast<double>(k) * c[k] * pow0[k - 1] * pow1[d - k];
      if (k < d) f.d1 += static_cast<double>(d - k) * c[k] * pow0[k] * pow1[d - k - 1];
    }
    return f;
  }
};

namespace detail {

/// Determinant of a dense complex matrix (row-major) by partial-pivot LU.
inline Complex determinant(std::vector<Complex> a, std::size_t n) {
  Complex det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == Complex{}) return {};
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[piv * n + k], a[col * n + k]);
      det = -det;
    }
    const Complex pv = a[col * n + col];
    det *= pv;
    for (std::size_t r = col + 1; r < n; ++r) {
      const Complex f = a[r * n + col] / pv;
      if (f == Complex{}) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
    }
  }
  return det;
}

}  // namespace detail

/// Resultant of two binary forms of degree d divided by the product of the
/// Sylvester row norms (Hadamard's bound), so the result lies in [0, 1].
inline double normalized_resultant(std::span<const Complex> p, std::span<const Complex> q) {
  const std::size_t d = p.size() - 1;
  const std::size_t n = 2 * d;
  std::vector<Complex> m(n * n);
  auto row_norm = [](std::span<const Complex> c) {
    double s = 0.0;
    for (const auto& x : c) s += std::norm(x);
    return std::sqrt(s);
  };
  const double np = row_norm(p);
  const double nq = row_norm(q);
  if (np == 0.0 || nq == 0.0) return 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t k = 0; k <= d; ++k) {
      m[r * n + r + k] = p[d - k] / np;
      m[(r + d) * n + r + k] = q[d - k] / nq;
    }
  }
  return std::abs(detail::determinant(std::move(m), n));
}

inline constexpr double kResultantTolerance = 1e-12;

/// Rational map of the Riemann sphere of exact degree d >= 2, given by the
/// homogeneous lift (P(z0, z1), Q(z0, z1)) with P = sum_k p_k z0^k z1^(d-k).
class RationalMap {
 public:
  RationalMap(std::vector<Complex> numerator, std::vector<Complex> denominator)
      : p_(std::move(numerator)), q_(std::move(denominator)) {
    if (p_.size() != q_.size() || p_.size() < 3 || p_.size() > kMaxDegree + 1)
      throw Error(ErrorKind::InvalidArgument, "rational map needs d+1 numerator and denominator coefficients, 2 <= d <= 64");
    d_ = static_cast<int>(p_.size()) - 1;
    if (!(normalized_resultant(p_, q_) > kResultantTolerance))
      throw Error(ErrorKind::DegenerateParameter, "numerator and denominator share a root (resultant vanishes)");
  }

  int degree() const { return d_; }
  const std::vector<Complex>& numerator() const { return p_; }
  const std::vector<Complex>& denominator() const { return q_; }

  /// For a polynomial map (denominator constant in z): R with |z| > R forcing
  /// |f(z)| >= 2|z|, i.e. max(1, (2 + sum_{k<d} |p_k|) / |p_d|) after dividing by q_0.
  std::optional<double> escape_radius() const {
    for (int k = 1; k <= d_; ++k)
      if (q_[k] != Complex{}) return std::nullopt;
    if (q_[0] == Complex{} || p_[d_] == Complex{}) return std::nullopt;
    double lower = 0.0;
    for (int k = 0; k < d_; ++k) lower += std::abs(p_[k] / q_[0]);
    return std::max(1.0, (2.0 + lower) / std::abs(p_[d_] / q_[0]));
  }

  /// Image under the homogeneous lift together with its sup norm before renormalizing.
  std::pair<ProjectivePoint, double> eval_scaled(const ProjectivePoint& z) const {
    const MonomialTable t(z, d_);
    const Complex a = t.value(p_);
    const Complex b = t.value(q_);
    const double s = std::max(std::abs(a), std::abs(b));
    return {ProjectivePoint(a, b), s};
  }

  ProjectivePoint operator()(const ProjectivePoint& z) const { return eval_scaled(z).first; }

  Complex operator()(Complex z) const { return (*this)(ProjectivePoint::affine(z)).to_affine(); }

  /// log f^#(z), -inf at critical points. Uses the chart-free expression
  /// |J| / d * |z|^2 / |F(z)|^2 with J = P_0 Q_1 - P_1 Q_0.
  double log_spherical_derivative(const ProjectivePoint& z) const {
    const MonomialTable t(z, d_);
    const FormValue P = t.eval(p_);
    const FormValue Q = t.eval(q_);
    const Complex jac = P.d0 * Q.d1 - P.d1 * Q.d0;
    const double image_sq = std::norm(P.value) + std::norm(Q.value);
    if (jac == Complex{}) return -std::numeric_limits<double>::infinity();
    return std::log(std::abs(jac)) - std::log(static_cast<double>(d_)) + std::log(z.norm2_sq()) - std::log(image_sq);
  }

  double spherical_derivative(const ProjectivePoint& z) const { return std::exp(log_spherical_derivative(z)); }

  /// Affine Wronskian P'Q - PQ' as a polynomial of formal degree 2d - 2.
  Polynomial wronskian() const {
    const Polynomial P(p_), Q(q_);
    const Polynomial w = P.derivative() * Q - P * Q.derivative();
    std::vector<Complex> c(w.coeffs().begin(), w.coeffs().begin() + std::min<std::size_t>(w.size(), 2 * d_ - 1));
    c.resize(2 * d_ - 1);
    return Polynomial(std::move(c));
  }

  /// The 2d - 2 critical points with multiplicity; roots of the Wronskian,
  /// missing finite roots accounted for at infinity.
  std::vector<ProjectivePoint> critical_points(const RootFinderOptions& opt = {}) const {
    const Polynomial w = wronskian();
    const double scale = w.norm1();
    std::vector<Complex> c = w.coeffs();
    std::size_t at_infinity = 0;
    while (!c.empty() && std::abs(c.back()) <= 1e-14 * scale) {
      c.pop_back();
      ++at_infinity;
    }
    std::vector<ProjectivePoint> out;
    out.reserve(2 * d_ - 2);
    if (!c.empty()) {
      for (const Complex& r : aberth_roots(Polynomial(std::move(c)), opt)) out.push_back(ProjectivePoint::affine(r));
    }
    for (std::size_t k = 0; k < at_infinity; ++k) out.push_back(ProjectivePoint::infinity());
    // Residual check in homogeneous form: J(z) relative to the Wronskian's coefficient mass.
    for (const auto& z : out) {
      const MonomialTable t(z, d_);
      const FormValue P = t.eval(p_);
      const FormValue Q = t.eval(q_);
      const double jac = std::abs(P.d0 * Q.d1 - P.d1 * Q.d0) / d_;
      if (jac > opt.residual_tolerance * scale)
        throw Error(ErrorKind::RootFindingFailure, "critical point residual above tolerance");
    }
    return out;
  }

 private:
  int d_ = 0;
  std::vector<Complex> p_;
  std::vector<Complex> q_;
};

/// log (f^n)^#(z) as the sum of log f^# along the orbit.
inline double log_spherical_derivative_sum(const RationalMap& f, ProjectivePoint z, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    s += f.log_spherical_derivative(z);
    z = f(z);
  }
  return s;
}

/// log (f^n)^#(z) for the composite map, obtained by pushing a tangent vector
/// through the homogeneous Jacobian of F^n and measuring its Fubini-Study
/// length before and after. Independent of the per-step Wronskian formula.
inline double log_composite_spherical_derivative(const RationalMap& f, ProjectivePoint z, int n) {
  auto fs_length = [](const ProjectivePoint& p, const std::array<Complex, 2>& v) {
    return std::log(std::abs(p.z0() * v[1] - p.z1() * v[0])) - std::log(p.norm2_sq());
  };
  std::array<Complex, 2> v{-std::conj(z.z1()), std::conj(z.z0())};
  const double start = fs_length(z, v);
  double log_ratio = 0.0;  // log |V| - log |Z| of the unnormalized pair
  const int d = f.degree();
  for (int k = 0; k < n; ++k) {
    const MonomialTable t(z, d);
    const FormValue P = t.eval(f.numerator());
    const FormValue Q = t.eval(f.denominator());
    std::array<Complex, 2> w{P.d0 * v[0] + P.d1 * v[1], Q.d0 * v[0] + Q.d1 * v[1]};
    // drop the component along F(Z); it does not move the point and would swamp the rest
    const Complex along = (w[0] * std::conj(P.value) + w[1] * std::conj(Q.value)) /
                          (std::norm(P.value) + std::norm(Q.value));
    w = {w[0] - along * P.value, w[1] - along * Q.value};
    const double wn = std::max(std::abs(w[0]), std::abs(w[1]));
    const double fn = std::max(std::abs(P.value), std::abs(Q.value));
    if (wn == 0.0) return -std::numeric_limits<double>::infinity();
    log_ratio += std::log(wn) - std::log(fn);
    v = {w[0] / wn, w[1] / wn};
    z = ProjectivePoint(P.value, Q.value);
  }
  return log_ratio + fs_length(z, v) - start;
}

}  // namespace biflab
