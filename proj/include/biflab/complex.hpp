#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace biflab {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Forward-mode dual number: value plus derivative with respect to one
/// parameter. Arithmetic follows the product and quotient rules.
template <typename T>
struct Dual {
  T val{};
  T der{};

  constexpr Dual() = default;
  constexpr Dual(T v) : val(v) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T v, T d) : val(v), der(d) {}

  constexpr Dual& operator+=(const Dual& o) {
    val += o.val;
    der += o.der;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    val -= o.val;
    der -= o.der;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    der = der * o.val + val * o.der;
    val *= o.val;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    der = (der * o.val - val * o.der) / (o.val * o.val);
    val /= o.val;
    return *this;
  }

  friend constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.val, -a.der}; }
};

/// Nonzero complex number stored as log-modulus and argument, so products of
/// thousands of factors neither overflow nor underflow. Zero is log_abs = -inf.
struct LogComplex {
  double log_abs = -std::numeric_limits<double>::infinity();
  double arg = 0.0;

  static LogComplex from(Complex z) {
    if (z == Complex{}) return {};
    return {std::log(std::abs(z)), std::arg(z)};
  }
  static LogComplex one() { return {0.0, 0.0}; }

  bool is_zero() const { return std::isinf(log_abs) && log_abs < 0; }

  /// Direct conversion; may overflow to infinity for large log_abs.
  Complex value() const {
    if (is_zero()) return {};
    return std::polar(std::exp(log_abs), arg);
  }

  LogComplex& operator*=(const LogComplex& o) {
    log_abs += o.log_abs;
    arg = std::remainder(arg + o.arg, kTwoPi);
    return *this;
  }
  LogComplex& operator/=(const LogComplex& o) {
    log_abs -= o.log_abs;
    arg = std::remainder(arg - o.arg, kTwoPi);
    return *this;
  }
  friend LogComplex operator*(LogComplex a, const LogComplex& b) { return a *= b; }
  friend LogComplex operator/(LogComplex a, const LogComplex& b) { return a /= b; }
};

/// |a/b - 1| for two log-form numbers, the relative distance of a from b.
inline double relative_difference(const LogComplex& a, const LogComplex& b) {
  if (a.is_zero() && b.is_zero()) return 0.0;
  if (a.is_zero() || b.is_zero()) return 1.0;
  const LogComplex q = a / b;
  return std::abs(std::polar(std::exp(q.log_abs), q.arg) - 1.0);
}

/// Sum of log-form terms, kept as a scaled complex accumulator.
class LogSum {
 public:
  void add(const LogComplex& term) {
    if (term.is_zero()) return;
    if (empty_) {
      scale_ = term.log_abs;
      acc_ = std::polar(1.0, term.arg);
      empty_ = false;
      return;
    }
    if (term.log_abs > scale_) {
      acc_ *= std::exp(scale_ - term.log_abs);
      scale_ = term.log_abs;
    }
    acc_ += std::polar(std::exp(term.log_abs - scale_), term.arg);
  }

  LogComplex result() const {
    if (empty_ || acc_ == Complex{}) return {};
    return {scale_ + std::log(std::abs(acc_)), std::arg(acc_)};
  }

 private:
  bool empty_ = true;
  double scale_ = 0.0;
  Complex acc_{};
};

}  // namespace biflab
