#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"

namespace biflab {

/// Point [z0 : z1] of the Riemann sphere, affine coordinate z0 / z1.
/// Always stored with max(|z0|, |z1|) = 1.
class ProjectivePoint {
 public:
  ProjectivePoint() : z0_(0.0), z1_(1.0) {}

  ProjectivePoint(Complex z0, Complex z1) : z0_(z0), z1_(z1) {
    const double s = std::max(std::abs(z0_), std::abs(z1_));
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(ErrorKind::InvalidArgument, "projective point needs finite, not-both-zero coordinates");
    z0_ /= s;
    z1_ /= s;
  }

  static ProjectivePoint affine(Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return infinity();
    return {z, 1.0};
  }
  static ProjectivePoint infinity() { return {1.0, 0.0}; }

  Complex z0() const { return z0_; }
  Complex z1() const { return z1_; }

  bool is_infinity() const { return z1_ == Complex{}; }

  /// Affine coordinate; infinite components for the point at infinity.
  Complex to_affine() const {
    if (is_infinity()) {
      const double inf = std::numeric_limits<double>::infinity();
      return {inf, inf};
    }
    return z0_ / z1_;
  }

  /// True when the point is best handled in the chart w = z1 / z0 around infinity.
  bool prefers_infinity_chart() const { return std::abs(z0_) > std::abs(z1_); }

  /// Squared Euclidean norm of the (sup-normalized) coordinate vector.
  double norm2_sq() const { return std::norm(z0_) + std::norm(z1_); }

 private:
  Complex z0_;
  Complex z1_;
};

/// Chordal distance |z0 w1 - z1 w0| / (|z| |w|), in [0, 1].
inline double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
  const double num = std::abs(a.z0() * b.z1() - a.z1() * b.z0());
  return num / std::sqrt(a.norm2_sq() * b.norm2_sq());
}

}  // namespace biflab
