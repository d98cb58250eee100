#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/family.hpp"

namespace biflab {

/// Finite-n Lyapunov exponents along one marked orbit:
///   dyn[m] = (1/n) log (f^n)^#(a),   par[m] = (1/n) log ||d a_n / d lambda||
/// with the spherical norm on the target, for n = n_values[m].
struct ExponentSeries {
  Complex lambda;
  int n_max = 0;
  std::vector<int> n_values;
  std::vector<double> dyn;
  std::vector<double> par;
  std::optional<int> critical_hit;
  std::optional<int> escape;  // step at which the orbit passed the escape radius
  double min_crit_dist = 1.0;

  /// First step the series may not reach: a critical hit or a certified escape.
  std::optional<int> horizon() const {
    if (critical_hit && escape) return std::min(*critical_hit, *escape);
    return critical_hit ? critical_hit : escape;
  }

  bool empty() const { return n_values.empty(); }
  double last_dyn() const { return dyn.back(); }
  double last_par() const { return par.back(); }
};

/// n_max/10, 2 n_max/10, ..., n_max (rounded, deduplicated, >= 1).
inline std::vector<int> exponent_checkpoints(int n_max) {
  std::vector<int> ns;
  for (int j = 1; j <= 10; ++j) {
    const int n = std::max(1, static_cast<int>(std::lround(j * n_max / 10.0)));
    if (ns.empty() || ns.back() != n) ns.push_back(n);
  }
  return ns;
}

/// Both exponent series from one orbit. When the orbit hits a critical point
/// or escapes at step k, the series keeps the checkpoints n < k and ends at n = k - 1.
inline ExponentSeries exponent_series(const Family& fam, Complex lambda, int n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 1");
  const OrbitRecord orbit = marked_orbit(fam, lambda, n_max);
  ExponentSeries s;
  s.lambda = lambda;
  s.n_max = n_max;
  s.critical_hit = orbit.critical_hit;
  s.escape = orbit.escape;
  s.min_crit_dist = orbit.min_crit_dist;
  auto push = [&](int n) {
    s.n_values.push_back(n);
    s.dyn.push_back(orbit.log_sph[n - 1] / n);
    s.par.push_back(orbit.log_param_norm[n] / n);
  };
  const std::optional<int> stop = s.horizon();
  for (int n : exponent_checkpoints(n_max)) {
    if (stop && n >= *stop) break;
    push(n);
  }
  if (stop && *stop - 1 >= 1 && (s.n_values.empty() || s.n_values.back() < *stop - 1)) push(*stop - 1);
  return s;
}

inline ExponentSeries dynamical_exponent(const Family& fam, Complex lambda, int n_max) {
  return exponent_series(fam, lambda, n_max);
}

inline ExponentSeries parametric_exponent(const Family& fam, Complex lambda, int n_max) {
  return exponent_series(fam, lambda, n_max);
}

struct CeVerdict {
  bool holds_half = false;
  bool holds_refined = false;
  double margin = 0.0;  // dyn at the last checkpoint minus (log d) / 2
  double slack = 0.0;
};

/// The liminf is proxied by the last checkpoint with slack
/// 3 * (sample standard deviation of the last three dyn values) + 0.02.
inline CeVerdict ce_verdict(const ExponentSeries& series, int d, double dstar) {
  if (series.empty()) throw Error(ErrorKind::InvalidArgument, "empty exponent series");
  if (!(dstar > 0.0)) throw Error(ErrorKind::InvalidArgument, "Dstar must be positive");
  const std::size_t m = series.dyn.size();
  const std::size_t k = std::min<std::size_t>(3, m);
  double mean = 0.0;
  for (std::size_t i = m - k; i < m; ++i) mean += series.dyn[i];
  mean /= k;
  double var = 0.0;
  for (std::size_t i = m - k; i < m; ++i) var += (series.dyn[i] - mean) * (series.dyn[i] - mean);
  const double sd = k > 1 ? std::sqrt(var / (k - 1)) : 0.0;

  CeVerdict v;
  v.slack = 3.0 * sd + 0.02;
  const double last = series.last_dyn();
  const double half = std::log(static_cast<double>(d)) / 2.0;
  const double refined = std::log(static_cast<double>(d)) / dstar;
  v.holds_half = last >= half - v.slack;
  v.holds_refined = last >= refined - v.slack;
  v.margin = last - half;
  return v;
}

/// Statistical shadow of "parametric growth alpha implies dynamical growth alpha":
/// true when a non-recurrent orbit has par >= alpha > 0 but dyn < par - 0.1.
inline bool transfer_direction_violated(const ExponentSeries& s) {
  if (s.empty()) return false;
  const double alpha = s.last_par();
  return alpha > 0.0 && s.min_crit_dist > 1e-6 && s.last_dyn() < alpha - 0.1;
}

}  // namespace biflab
