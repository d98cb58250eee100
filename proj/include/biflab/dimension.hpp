#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/measure.hpp"
#include "biflab/parallel.hpp"

namespace biflab {

/// Ball masses at dyadic radii r_j = r_max 2^-j around one parameter.
struct DimensionEstimate {
  Complex lambda;
  std::vector<double> radii;
  std::vector<double> log_masses;
  double slope = std::numeric_limits<double>::quiet_NaN();          // least-squares fit
  double limsup_proxy = std::numeric_limits<double>::quiet_NaN();   // max 3-point secant slope
};

inline DimensionEstimate local_dimension(const MeasureGrid& mg, Complex lambda, double r_max, int levels) {
  if (levels < 2) throw Error(ErrorKind::InvalidArgument, "need at least three radii (J >= 2)");
  if (mg.region.inner_distance(lambda) < r_max)
    throw Error(ErrorKind::InvalidArgument, "ball of radius r_max leaves the grid region");
  if (r_max * std::ldexp(1.0, -levels) < 2.0 * mg.h)
    throw Error(ErrorKind::ResolutionExceeded, "smallest radius below two grid spacings");

  DimensionEstimate e;
  e.lambda = lambda;
  for (int j = 0; j <= levels; ++j) {
    const double r = r_max * std::ldexp(1.0, -j);
    const double m = ball_mass(mg, lambda, r);
    if (!(m > 0.0)) throw Error(ErrorKind::ZeroBallMass, "zero ball mass: parameter outside the support");
    e.radii.push_back(r);
    e.log_masses.push_back(std::log(m));
  }

  const std::size_t n = e.radii.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += std::log(e.radii[k]);
    my += e.log_masses[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::log(e.radii[k]) - mx;
    sxy += x * (e.log_masses[k] - my);
    sxx += x * x;
  }
  e.slope = sxy / sxx;

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const double s = (e.log_masses[k] - e.log_masses[k + 2]) / (std::log(e.radii[k]) - std::log(e.radii[k + 2]));
    best = std::max(best, s);
  }
  e.limsup_proxy = best;
  return e;
}

/// Linear-interpolation percentile (q in [0, 1]) of an unsorted list.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

inline constexpr int kMinPackingSamples = 50;
inline constexpr double kHistogramBinWidth = 0.1;
inline constexpr int kHistogramBins = 25;  // [0, 2.5)

struct PackingEstimate {
  double dstar = 0.0;                     // capped 95th percentile of the limsup proxies
  std::vector<std::optional<DimensionEstimate>> per_sample;  // empty where a sample was unusable
  std::vector<double> phi;                // valid limsup proxies, in sample order
  std::vector<int> histogram;             // counts per 0.1-wide bin of phi
  double p50 = 0.0, p90 = 0.0, p95 = 0.0, p99 = 0.0;
  int valid = 0;
  int rejected = 0;
};

/// Upper packing dimension proxy from mass-typical samples: the 95th
/// percentile of per-sample limsup proxies, capped at 2. Samples whose balls
/// leave the region or have zero mass are skipped.
inline PackingEstimate upper_packing(const MeasureGrid& mg, const std::vector<Complex>& samples, double r_max,
                                     int levels, unsigned threads = 0) {
  PackingEstimate out;
  out.per_sample.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t k) {
    try {
      out.per_sample[k] = local_dimension(mg, samples[k], r_max, levels);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ResolutionExceeded) throw;
    }
  });
  for (const auto& e : out.per_sample) {
    if (e && std::isfinite(e->limsup_proxy)) {
      out.phi.push_back(e->limsup_proxy);
    }
  }
  out.valid = static_cast<int>(out.phi.size());
  out.rejected = static_cast<int>(samples.size()) - out.valid;
  if (out.valid < kMinPackingSamples)
    throw Error(ErrorKind::InsufficientSamples,
                "only " + std::to_string(out.valid) + " valid local dimension estimates (need 50)");
  out.histogram.assign(kHistogramBins, 0);
  for (double v : out.phi) {
    const int b = std::clamp(static_cast<int>(std::floor(v / kHistogramBinWidth)), 0, kHistogramBins - 1);
    ++out.histogram[b];
  }
  out.p50 = percentile(out.phi, 0.50);
  out.p90 = percentile(out.phi, 0.90);
  out.p95 = percentile(out.phi, 0.95);
  out.p99 = percentile(out.phi, 0.99);
  out.dstar = std::min(2.0, out.p95);
  return out;
}

}  // namespace biflab
