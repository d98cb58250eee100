#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"

namespace biflab {

/// Horner evaluation of an ascending coefficient list at a point of any ring
/// that accepts complex constants (Complex, Dual<Complex>).
template <typename T>
T horner(std::span<const Complex> coeffs, const T& x) {
  T acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + T(*it);
  return acc;
}

/// Dense univariate polynomial with complex coefficients, lowest degree first.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {}

  const std::vector<Complex>& coeffs() const { return c_; }
  std::size_t size() const { return c_.size(); }
  bool empty() const { return c_.empty(); }

  /// Degree ignoring exactly-zero leading coefficients; -1 for the zero polynomial.
  int degree() const {
    for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k)
      if (c_[k] != Complex{}) return k;
    return -1;
  }

  template <typename T>
  T operator()(const T& x) const {
    return horner<T>(c_, x);
  }

  Dual<Complex> eval_dual(Complex x) const { return horner(std::span<const Complex>(c_), Dual<Complex>(x, 1.0)); }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial({Complex{}});
    std::vector<Complex> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
    return Polynomial(std::move(d));
  }

  double norm1() const {
    double s = 0.0;
    for (const auto& c : c_) s += std::abs(c);
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : c_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Backward-error style residual |p(x)| / sum |c_k| |x|^k.
  double scaled_residual(Complex x) const {
    double denom = 0.0;
    double xp = 1.0;
    const double ax = std::abs(x);
    for (const auto& c : c_) {
      denom += std::abs(c) * xp;
      xp *= ax;
    }
    if (denom == 0.0) return 0.0;
    return std::abs((*this)(x)) / denom;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.empty() || b.empty()) return Polynomial();
    std::vector<Complex> r(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(r));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Complex> r(std::max(a.size(), b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a.c_[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += b.c_[i];
    return Polynomial(std::move(r));
  }

  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    std::vector<Complex> r(std::max(a.size(), b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a.c_[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b.c_[i];
    return Polynomial(std::move(r));
  }

  friend Polynomial operator*(Complex s, Polynomial p) {
    for (auto& c : p.c_) c *= s;
    return p;
  }

 private:
  std::vector<Complex> c_;
};

struct RootFinderOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-13;
  double residual_tolerance = 1e-9;
};

/// All roots of p with multiplicity, by Aberth-Ehrlich simultaneous iteration.
/// Exact zero roots are split off before iterating. Throws RootFindingFailure
/// when some root's scaled residual exceeds the tolerance.
inline std::vector<Complex> aberth_roots(const Polynomial& p, const RootFinderOptions& opt = {}) {
  const int deg = p.degree();
  if (deg < 0) throw Error(ErrorKind::InvalidArgument, "roots of the zero polynomial");
  std::vector<Complex> c(p.coeffs().begin(), p.coeffs().begin() + deg + 1);

  std::vector<Complex> roots;
  std::size_t low = 0;
  while (low < c.size() && c[low] == Complex{}) ++low;
  roots.assign(low, Complex{});
  c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(low));
  const int n = static_cast<int>(c.size()) - 1;
  if (n <= 0) return roots;
  if (n == 1) {
    roots.push_back(-c[0] / c[1]);
    return roots;
  }

  const Polynomial q(c);
  const Polynomial dq = q.derivative();

  // Initial guesses on a circle whose radius is the geometric mean of the root moduli.
  const double radius = std::pow(std::abs(c[0]) / std::abs(c[n]), 1.0 / n);
  std::vector<Complex> z(n);
  for (int k = 0; k < n; ++k) z[k] = std::polar(radius, kTwoPi * k / n + 0.4);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    double max_step = 0.0;
    for (int k = 0; k < n; ++k) {
      const Complex pv = q(z[k]);
      if (pv == Complex{}) continue;
      const Complex ratio = pv / dq(z[k]);
      Complex repulsion{};
      for (int j = 0; j < n; ++j)
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      const Complex step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step) / std::max(1.0, std::abs(z[k])));
    }
    if (max_step <= opt.step_tolerance) break;
  }

  for (const auto& r : z) {
    if (!(q.scaled_residual(r) <= opt.residual_tolerance))
      throw Error(ErrorKind::RootFindingFailure, "Aberth iteration did not reach the residual tolerance");
    roots.push_back(r);
  }
  return roots;
}

}  // namespace biflab
