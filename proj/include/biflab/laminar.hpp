#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include "biflab/complex.hpp"
#include "biflab/error.hpp"
#include "biflab/family.hpp"
#include "biflab/parallel.hpp"
#include "biflab/region.hpp"

namespace biflab {

/// h_n(lambda) = f_lambda^n(a(lambda)) with its lambda-tangent.
inline ProjectiveJet graph_jet(const Family& fam, Complex lambda, int n) {
  const Specialization s = specialize_with_derivatives(fam, lambda);
  ProjectiveJet j = ProjectiveJet::lift(s.marked, s.marked_dot);
  for (int k = 0; k < n; ++k) j = jet_step(s, j);
  return j;
}

/// Direction of the Wronskian N'D - ND' of h_n = N/D. Its zeros are the
/// ramification points of h_n (critical points, multiple poles).
inline Complex ramification_direction(const ProjectiveJet& j) {
  const Complex c = j.tangent[0] * j.point.z1() - j.point.z0() * j.tangent[1];
  const double a = std::abs(c);
  return a > 0.0 ? c / a : Complex{};
}

namespace detail {

/// Principal-value argument increment from a to b, both nonzero.
inline double arg_step(Complex a, Complex b) { return std::arg(b / a); }

/// Perimeter of a rectangle traversed counterclockwise with `samples` points.
inline std::vector<Complex> rectangle_perimeter(const Region& r, int samples) {
  const double w = r.width(), h = r.height();
  const double perim = 2.0 * (w + h);
  std::vector<Complex> pts(samples);
  for (int k = 0; k < samples; ++k) {
    double s = perim * k / samples;
    Complex p;
    if (s < w) p = r.min + Complex(s, 0.0);
    else if ((s -= w) < h) p = Complex(r.max.real(), r.min.imag() + s);
    else if ((s -= h) < w) p = Complex(r.max.real() - s, r.max.imag());
    else p = Complex(r.min.real(), r.max.imag() - (s - w));
    pts[k] = p;
  }
  return pts;
}

struct WindingSample {
  double winding = 0.0;
  double max_step = 0.0;
  bool hit_zero = false;
};

template <typename DirFn>
WindingSample closed_winding(const std::vector<Complex>& pts, DirFn&& dir, unsigned threads) {
  std::vector<Complex> v(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t k) { v[k] = dir(pts[k]); });
  WindingSample w;
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Complex a = v[k], b = v[(k + 1) % v.size()];
    if (a == Complex{} || b == Complex{}) {
      w.hit_zero = true;
      continue;
    }
    const double s = arg_step(a, b);
    w.max_step = std::max(w.max_step, std::abs(s));
    total += s;
  }
  w.winding = total / kTwoPi;
  return w;
}

}  // namespace detail

inline constexpr int kRamificationSamples = 1 << 12;

/// R_n: zeros of the Wronskian of h_n inside the region, with multiplicity,
/// from the winding of its argument along the rectangle boundary. The sample
/// count is doubled until two consecutive windings round to the same integer
/// and sit within 0.25 of it; a slightly enlarged boundary is tried when the
/// integrand vanishes or jumps. Throws BoundaryZero after 3 failed refinements.
inline int ramification_count(const Family& fam, int n, const Region& region, unsigned threads = 0) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "iterate must be >= 0");
  auto dir = [&](Complex lambda) { return ramification_direction(graph_jet(fam, lambda, n)); };
  const double nudge = 1e-3 * std::min(region.width(), region.height());
  for (const double offset : {0.0, nudge, -nudge}) {
    const Region r{region.min - Complex(offset, offset), region.max + Complex(offset, offset)};
    std::optional<long> previous;
    bool spiky = false;
    for (int refinement = 0; refinement <= 3; ++refinement) {
      const auto w = detail::closed_winding(detail::rectangle_perimeter(r, kRamificationSamples << refinement), dir, threads);
      if (w.hit_zero) {
        spiky = true;
        break;
      }
      const long rounded = std::lround(w.winding);
      const bool integral = std::abs(w.winding - rounded) < 0.25 && w.max_step < 0.5 * std::numbers::pi;
      if (integral && previous && *previous == rounded) return static_cast<int>(rounded);
      previous = integral ? std::optional<long>(rounded) : std::nullopt;
    }
    if (!spiky) break;
  }
  throw Error(ErrorKind::BoundaryZero, "winding of h_n' along the region boundary did not stabilize");
}

struct RamificationBound {
  int ramifications = 0;
  double bound_constant = 0.0;  // R_n / d^n
};

inline RamificationBound rh_check(const Family& fam, int n, const Region& region, unsigned threads = 0) {
  RamificationBound b;
  b.ramifications = ramification_count(fam, n, region, threads);
  b.bound_constant = b.ramifications / std::pow(static_cast<double>(fam.degree), n);
  return b;
}

/// One connected component of h_n^-1(S) inside the region.
struct IslandComponent {
  Complex seed;
  int degree = 0;           // winding of h_n - c(S) around the component
  int ramifications = 0;    // zeros of h_n' inside
  bool is_island = false;
  double area = 0.0;
  int cells = 0;
  bool touches_region_boundary = false;
};

struct SquareReport {
  int id = 0;
  Complex image_min;
  Complex image_max;
  std::vector<IslandComponent> components;
  bool resolution_exceeded = false;

  Complex center() const { return 0.5 * (image_min + image_max); }
};

struct IslandReport {
  int n = 0;
  double beta = 0.0;  // side length e^(-beta n); NaN when n = 0
  int subdivisions = 0;
  Region image_chart;
  Region region;
  int grid = 0;  // lambda-grid nodes along the real axis at the final refinement
  std::vector<SquareReport> squares;
  std::optional<int> ramifications;  // R_n over the region
  long long d_n_expected = 0;        // d^n * deg(a)

  int total_degree() const {
    int s = 0;
    for (const auto& sq : squares)
      for (const auto& c : sq.components) s += c.degree;
    return s;
  }
  int island_degree() const {
    int s = 0;
    for (const auto& sq : squares)
      for (const auto& c : sq.components) s += c.is_island ? c.degree : 0;
    return s;
  }
};

struct IslandOptions {
  int subdivisions = 16;     // squares per side of the image chart
  int grid = 256;            // initial lambda-grid nodes along the real axis
  int max_grid = 2048;
  int min_cells_across = 8;  // resolution requirement per component
  int winding_samples = 1 << 9;
  bool count_ramifications = true;
  unsigned threads = 0;
};

/// beta for which e^(-beta n) equals chart_width / subdivisions.
inline double subdivision_beta(int n, double chart_width, int subdivisions) {
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return -std::log(chart_width / subdivisions) / n;
}

namespace detail {

struct LambdaLattice {
  Region region;
  int nx = 0, ny = 0;
  double h = 0.0;
  Complex node(int i, int j) const { return region.min + Complex(i * h, j * h); }
  Complex corner(int i, int j) const { return region.min + Complex((i - 0.5) * h, (j - 0.5) * h); }
};

struct GraphSample {
  Complex value;  // affine h_n; non-finite at infinity
  Complex ramification;
};

inline GraphSample sample_graph(const Family& fam, Complex lambda, int n) {
  try {
    const ProjectiveJet j = graph_jet(fam, lambda, n);
    return {j.point.to_affine(), ramification_direction(j)};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateParameter) throw;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {{nan, nan}, {}};
  }
}

struct PassResult {
  std::vector<SquareReport> squares;
  bool any_unresolved = false;
};

inline PassResult classify_pass(const Family& fam, int n, const Region& chart, const Region& region,
                                const IslandOptions& opt, int grid) {
  LambdaLattice lat;
  lat.region = region;
  lat.nx = grid;
  lat.h = region.width() / (grid - 1);
  lat.ny = static_cast<int>(std::lround(region.height() / lat.h)) + 1;
  const int k = opt.subdivisions;
  const double side = chart.width() / k;

  auto square_of = [&](Complex w) -> int {
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) return -1;
    const double fx = (w.real() - chart.min.real()) / side;
    const double fy = (w.imag() - chart.min.imag()) / side;
    if (fx < 0 || fy < 0 || fx >= k || fy >= k) return -1;
    return static_cast<int>(fy) * k + static_cast<int>(fx);
  };

  const std::size_t nodes = static_cast<std::size_t>(lat.nx) * lat.ny;
  std::vector<int> label(nodes, -1);
  parallel_for(static_cast<std::size_t>(lat.ny), opt.threads, [&](std::size_t j) {
    for (int i = 0; i < lat.nx; ++i)
      label[j * lat.nx + i] = square_of(sample_graph(fam, lat.node(i, static_cast<int>(j)), n).value);
  });
  const int cnx = lat.nx + 1;
  std::vector<GraphSample> corners(static_cast<std::size_t>(cnx) * (lat.ny + 1));
  parallel_for(static_cast<std::size_t>(lat.ny + 1), opt.threads, [&](std::size_t j) {
    for (int i = 0; i < cnx; ++i) corners[j * cnx + i] = sample_graph(fam, lat.corner(i, static_cast<int>(j)), n);
  });

  // connected components of equal labels, 4-connectivity
  std::vector<int> comp(nodes, -1);
  std::vector<std::vector<int>> members;
  for (std::size_t start = 0; start < nodes; ++start) {
    if (label[start] < 0 || comp[start] >= 0) continue;
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    std::vector<int> stack{static_cast<int>(start)};
    comp[start] = id;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      members[id].push_back(v);
      const int i = v % lat.nx, j = v / lat.nx;
      const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= lat.nx || q[1] >= lat.ny) continue;
        const int w = q[1] * lat.nx + q[0];
        if (comp[w] < 0 && label[w] == label[start]) {
          comp[w] = id;
          stack.push_back(w);
        }
      }
    }
  }

  PassResult out;
  out.squares.resize(static_cast<std::size_t>(k) * k);
  for (int s = 0; s < k * k; ++s) {
    auto& sq = out.squares[s];
    sq.id = s;
    sq.image_min = chart.min + Complex((s % k) * side, (s / k) * side);
    sq.image_max = sq.image_min + Complex(side, side);
  }

  std::vector<IslandComponent> results(members.size());
  std::vector<char> unresolved(members.size(), 0);
  parallel_for(members.size(), opt.threads, [&](std::size_t c) {
    const auto& cells = members[c];
    const int s = label[cells.front()];
    const Complex target = out.squares[s].center();
    IslandComponent ic;
    ic.seed = lat.node(cells.front() % lat.nx, cells.front() / lat.nx);
    ic.cells = static_cast<int>(cells.size());
    ic.area = cells.size() * lat.h * lat.h;
    int imin = lat.nx, imax = -1, jmin = lat.ny, jmax = -1;

    // boundary edges between corner indices, oriented counterclockwise around the component
    struct Edge {
      int a, b;
    };
    std::vector<Edge> edges;
    auto cid = [&](int i, int j) { return j * cnx + i; };  // corner (i, j) sits at node (i - 1/2, j - 1/2)
    auto inside = [&](int i, int j) {
      return i >= 0 && j >= 0 && i < lat.nx && j < lat.ny && comp[j * lat.nx + i] == static_cast<int>(c);
    };
    for (int v : cells) {
      const int i = v % lat.nx, j = v / lat.nx;
      imin = std::min(imin, i), imax = std::max(imax, i), jmin = std::min(jmin, j), jmax = std::max(jmax, j);
      if (i == 0 || j == 0 || i == lat.nx - 1 || j == lat.ny - 1) ic.touches_region_boundary = true;
      if (!inside(i + 1, j)) edges.push_back({cid(i + 1, j), cid(i + 1, j + 1)});
      if (!inside(i, j + 1)) edges.push_back({cid(i + 1, j + 1), cid(i, j + 1)});
      if (!inside(i - 1, j)) edges.push_back({cid(i, j + 1), cid(i, j)});
      if (!inside(i, j - 1)) edges.push_back({cid(i, j), cid(i + 1, j)});
    }

    auto corner_pos = [&](int id) { return lat.corner(id % cnx, id / cnx); };
    // winding of (h - target) and of the ramification direction with m samples per edge
    auto windings = [&](int m) {
      double wd = 0.0, wr = 0.0;
      bool degenerate = false;
      for (const auto& e : edges) {
        GraphSample prev = corners[e.a];
        const Complex pa = corner_pos(e.a), pb = corner_pos(e.b);
        for (int t = 1; t <= m; ++t) {
          const GraphSample cur = t == m ? corners[e.b] : sample_graph(fam, pa + (pb - pa) * (double(t) / m), n);
          const Complex g0 = prev.value - target, g1 = cur.value - target;
          if (!std::isfinite(std::abs(g0)) || !std::isfinite(std::abs(g1)) || g0 == Complex{} || g1 == Complex{}) {
            degenerate = true;
          } else {
            wd += detail::arg_step(g0, g1);
          }
          if (prev.ramification == Complex{} || cur.ramification == Complex{}) degenerate = true;
          else wr += detail::arg_step(prev.ramification, cur.ramification);
          prev = cur;
        }
      }
      return std::tuple{wd / kTwoPi, wr / kTwoPi, degenerate};
    };

    int m = std::max<int>(1, static_cast<int>((opt.winding_samples + edges.size() - 1) / edges.size()));
    auto [d1, r1, bad1] = windings(m);
    bool settled = false;
    for (int refinement = 0; refinement < 3 && !settled; ++refinement) {
      m *= 2;
      auto [d2, r2, bad2] = windings(m);
      const bool ok = !bad1 && !bad2 && std::lround(d1) == std::lround(d2) && std::lround(r1) == std::lround(r2) &&
                      std::abs(d2 - std::lround(d2)) < 0.25 && std::abs(r2 - std::lround(r2)) < 0.25;
      if (ok) settled = true;
      d1 = d2, r1 = r2, bad1 = bad2;
    }
    ic.degree = static_cast<int>(std::lround(d1));
    ic.ramifications = static_cast<int>(std::lround(r1));
    ic.is_island = ic.degree == 1 && ic.ramifications == 0;
    const int across = std::max(imax - imin, jmax - jmin) + 1;
    const bool too_small = !ic.touches_region_boundary && across < opt.min_cells_across;
    const bool bad_degree = !ic.touches_region_boundary && ic.degree < 1;
    unresolved[c] = !settled || too_small || bad_degree;
    results[c] = ic;
  });

  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& sq = out.squares[label[members[c].front()]];
    sq.components.push_back(results[c]);
    if (unresolved[c]) {
      sq.resolution_exceeded = true;
      out.any_unresolved = true;
    }
  }
  return out;
}

}  // namespace detail

/// Components of h_n^-1(S) for every square S of an image chart subdivided
/// into options.subdivisions^2 squares. Components are found by flood fill on
/// a lambda-grid that is doubled (up to max_grid) while any component is
/// narrower than min_cells_across cells or has an unstable winding; squares
/// still unresolved at the finest grid are flagged, not fatal.
inline IslandReport classify_islands(const Family& fam, int n, const Region& image_chart, const Region& region,
                                     const IslandOptions& opt = {}) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "iterate must be >= 0");
  if (opt.subdivisions < 1) throw Error(ErrorKind::InvalidArgument, "subdivisions must be >= 1");
  if (std::abs(image_chart.width() - image_chart.height()) > 1e-9 * image_chart.width() || !(image_chart.width() > 0))
    throw Error(ErrorKind::InvalidArgument, "image chart must be a square");
  if (!(region.width() > 0.0) || !(region.height() > 0.0)) throw Error(ErrorKind::InvalidArgument, "empty region");
  fam.validate();

  IslandReport rep;
  rep.n = n;
  rep.subdivisions = opt.subdivisions;
  rep.beta = subdivision_beta(n, image_chart.width(), opt.subdivisions);
  rep.image_chart = image_chart;
  rep.region = region;
  const int deg_a = std::max(fam.marked_num.degree(), fam.marked_den.degree());
  rep.d_n_expected = static_cast<long long>(std::llround(std::pow(fam.degree, n))) * std::max(deg_a, 1);

  int grid = std::max(16, opt.grid);
  for (;;) {
    detail::PassResult pass = detail::classify_pass(fam, n, image_chart, region, opt, grid);
    if (!pass.any_unresolved || grid * 2 > opt.max_grid) {
      rep.squares = std::move(pass.squares);
      rep.grid = grid;
      break;
    }
    grid *= 2;
  }
  if (opt.count_ramifications) {
    try {
      rep.ramifications = ramification_count(fam, n, region, opt.threads);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BoundaryZero) throw;
    }
  }
  return rep;
}

/// Variant taking the subdivision exponent: squares of side e^(-beta n).
inline IslandReport classify_islands_beta(const Family& fam, int n, double beta, const Region& image_chart,
                                          const Region& region, IslandOptions opt = {}) {
  const double side = std::exp(-beta * n);
  const double per_side = image_chart.width() / side;
  const int k = static_cast<int>(std::lround(per_side));
  if (k < 1 || std::abs(per_side - k) > 1e-6 * per_side)
    throw Error(ErrorKind::InvalidArgument, "chart width must be a whole number of squares of side e^(-beta n)");
  opt.subdivisions = k;
  IslandReport r = classify_islands(fam, n, image_chart, region, opt);
  r.beta = beta;
  return r;
}

}  // namespace biflab
