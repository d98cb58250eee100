#pragma once

#include <algorithm>

#include "biflab/complex.hpp"

namespace biflab {

/// Axis-aligned rectangle of the parameter (or image) plane.
struct Region {
  Complex min;
  Complex max;

  double width() const { return max.real() - min.real(); }
  double height() const { return max.imag() - min.imag(); }
  Complex center() const { return 0.5 * (min + max); }

  bool contains(Complex z) const {
    return z.real() >= min.real() && z.real() <= max.real() && z.imag() >= min.imag() && z.imag() <= max.imag();
  }

  /// Distance from an interior point to the nearest edge (negative outside).
  double inner_distance(Complex z) const {
    const double dx = std::min(z.real() - min.real(), max.real() - z.real());
    const double dy = std::min(z.imag() - min.imag(), max.imag() - z.imag());
    return std::min(dx, dy);
  }

  bool operator==(const Region&) const = default;
};

}  // namespace biflab
