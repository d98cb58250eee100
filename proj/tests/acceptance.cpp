// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "biflab/biflab.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace biflab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biflab_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Pipeline pipeline(ExperimentConfig cfg, const fs::path& out) {
  Pipeline p;
  p.cfg = std::move(cfg);
  p.out = out;
  return p;
}

Outcome transfer_equivalence() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int cases = 0;
  for (int d : {2, 3}) {
    const Family fam = unicritical_family(d);
    for (int k = 0; k < 100;) {
      const Complex l = oracle::random_in_disk(rng, 1.5);
      const int n = 1 + static_cast<int>(rng() % 30);
      const OrbitRecord o = marked_orbit(fam, l, n);
      if (o.min_crit_dist <= 1e-6) continue;
      worst = std::max(worst, relative_difference(param_derivative_transfer(fam, l, n), o.param_deriv_affine[n]));
      ++k;
      ++cases;
    }
  }
  return {worst <= 1e-8, fmt::format("{} cases, worst relative error {:.3g}", cases, worst)};
}

Outcome chain_rule() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + t % 4;
    std::vector<Complex> p(d + 1), q(d + 1);
    for (int k = 0; k <= d; ++k) {
      p[k] = {g(rng), g(rng)};
      q[k] = {g(rng), g(rng)};
    }
    const RationalMap f(p, q);
    const ProjectivePoint z = ProjectivePoint::affine(oracle::random_in_disk(rng, 2.0));
    const int n = 1 + static_cast<int>(rng() % 50);
    const double a = log_spherical_derivative_sum(f, z, n);
    const double b = log_composite_spherical_derivative(f, z, n);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  return {worst <= 1e-9, fmt::format("100 cases, worst relative error {:.3g}", worst)};
}

struct BigRun {
  Pipeline p;
  double flux = 0.0;
  double total = 0.0;
  double clipped = 0.0;
};

Outcome unicritical_mass(BigRun& run) {
  ExperimentConfig cfg = default_config("unicritical");
  cfg.nx = cfg.ny = 2048;
  run.p = pipeline(cfg, scratch("mass"));
  const PotentialGrid g = stage_potential(run.p);
  run.flux = oracle::boundary_flux(g);
  const MeasureGrid m = stage_measure(run.p);
  run.total = m.total_mass;
  run.clipped = m.clipped_fraction();
  const bool ok = run.total >= 0.95 && run.total <= 1.05 && run.clipped < 0.05 && std::abs(run.flux - 1.0) < 0.01;
  return {ok, fmt::format("total_mass {:.5f}, clipped {:.4f}, flux oracle {:.5f}", run.total, run.clipped, run.flux)};
}

Outcome collet_eckmann(const BigRun& run) {
  stage_sample(run.p);
  stage_lyapunov(run.p);
  stage_dimension(run.p);
  const VerdictSummary v = stage_verify_ce(run.p);
  const double l2 = std::log(2.0);
  const bool ok = v.fraction_holds_half >= 0.90 && v.median_dyn >= 0.5 * l2 && v.median_dyn <= 1.15 * l2;
  return {ok, fmt::format("fraction_holds_half {:.3f} over {} evaluated, median dyn {:.4f} = {:.3f} log 2, "
                          "median horizon {}, escaped {}",
                          v.fraction_holds_half, v.evaluated, v.median_dyn, v.median_dyn / l2, v.median_horizon, v.escaped)};
}

Outcome lattes_sharpness() {
  const Pipeline p = pipeline(default_config("lattes4"), scratch("lattes"));
  const VerdictSummary v = run_pipeline(p);
  const double l2 = std::log(2.0);
  const bool ok = std::abs(v.mean_dyn - l2) <= 0.1 && v.dstar >= 1.85 && v.dstar <= 2.0 &&
                  v.mean_dyn <= std::log(4.0) / v.dstar + 0.1 && v.evaluated == p.cfg.sample_count;
  return {ok, fmt::format("mean dyn {:.4f}, Dstar {:.4f}, (log 4)/Dstar + 0.1 = {:.4f}, {} evaluated", v.mean_dyn, v.dstar,
                          std::log(4.0) / v.dstar + 0.1, v.evaluated)};
}

Outcome ramification() {
  const Family fam = unicritical_family(2);
  const Region region{{-3.0, -3.0}, {3.0, 3.0}};
  bool ok = true;
  std::string counts;
  for (int n = 1; n <= 6; ++n) {
    const RamificationBound b = rh_check(fam, n, region);
    ok = ok && b.ramifications == (1 << n) - 1 && b.bound_constant < 1.0;
    counts += fmt::format("{}R_{}={}", n == 1 ? "" : " ", n, b.ramifications);
  }
  return {ok, counts};
}

Outcome islands() {
  const Family fam = unicritical_family(2);
  // n = 0: h_0 is the identity
  IslandOptions o0;
  o0.subdivisions = 8;
  o0.grid = 128;
  const IslandReport r0 = classify_islands(fam, 0, {{-2, -2}, {2, 2}}, {{-2.5, -2.5}, {2.5, 2.5}}, o0);
  bool ok0 = r0.total_degree() == 64 && r0.island_degree() == r0.total_degree();
  for (const auto& sq : r0.squares) ok0 = ok0 && sq.components.size() == 1;

  // n = 1: h_1 = lambda^2 + lambda, critical value -1/4 at the center of one square
  IslandOptions o1;
  o1.subdivisions = 16;
  const Region chart{{-1.3125, -1.0625}, {0.6875, 0.9375}};
  const Region region{{-1.8, -1.3}, {0.8, 1.3}};
  const IslandReport r1 = classify_islands(fam, 1, chart, region, o1);
  const double side = chart.width() / o1.subdivisions;
  int with_degree_two = 0, oracle_mismatch = 0;
  bool ok1 = true;
  for (const auto& sq : r1.squares) {
    bool deg2 = false;
    int degree = 0;
    for (const auto& c : sq.components) {
      deg2 = deg2 || c.degree == 2;
      degree += c.degree;
    }
    with_degree_two += deg2;
    const bool near = std::abs(sq.center() + 0.25) < side;
    ok1 = ok1 && deg2 == near;
    // quadratic formula: preimages of the center inside the region
    const Complex root = std::sqrt(sq.center() + 0.25);
    int expected = region.contains(-0.5 + root) + region.contains(-0.5 - root);
    oracle_mismatch += degree != expected;
    if (!deg2) {
      ok1 = ok1 && sq.components.size() == 2;
      for (const auto& c : sq.components) ok1 = ok1 && c.is_island && c.degree == 1;
    } else {
      ok1 = ok1 && sq.components.size() == 1 && sq.components[0].ramifications == 1;
    }
  }
  const bool ok = ok0 && ok1 && with_degree_two >= 1 && oracle_mismatch == 0;
  return {ok, fmt::format("n=0: {}/{} island degree; n=1: {} square(s) with a degree-2 component, {} oracle mismatches",
                          r0.island_degree(), r0.total_degree(), with_degree_two, oracle_mismatch)};
}

Outcome dimension_calibration() {
  const Region r{{0.0, 0.0}, {1.0, 1.0}};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  const MeasureGrid uni = synthetic::uniform(r, 1024);
  const MeasureGrid str = synthetic::strip(r, 1024);
  std::vector<Complex> a, b;
  for (int k = 0; k < 200; ++k) {
    a.push_back({u(rng), u(rng)});
    b.push_back(str.center(static_cast<int>(u(rng) * str.cells_x()), (1024 - 3) / 2));
  }
  const PackingEstimate pu = upper_packing(uni, a, 0.25, 4);
  const PackingEstimate ps = upper_packing(str, b, 0.25, 4);
  // brute-force slope between the outer radii, for the record
  const Complex c(0.5, str.center(0, (1024 - 3) / 2).imag());
  const double su = std::log(oracle::brute_ball_mass(uni, c, 0.25) / oracle::brute_ball_mass(uni, c, 0.125)) / std::log(2.0);
  const double ss = std::log(oracle::brute_ball_mass(str, c, 0.25) / oracle::brute_ball_mass(str, c, 0.125)) / std::log(2.0);
  const bool ok = std::abs(pu.dstar - 2.0) <= 0.05 && std::abs(ps.dstar - 1.0) <= 0.15 && std::abs(su - 2.0) <= 0.05 &&
                  std::abs(ss - 1.0) <= 0.15;
  return {ok, fmt::format("uniform Dstar {:.4f} (oracle slope {:.4f}), strip Dstar {:.4f} (oracle slope {:.4f})", pu.dstar, su,
                          ps.dstar, ss)};
}

Outcome determinism() {
  ExperimentConfig cfg = default_config("unicritical");
  LaminarConfig l;
  l.n = 2;
  l.subdivisions = 4;
  l.grid = 64;
  l.max_grid = 256;
  cfg.laminar = l;
  cfg.potential_csv = true;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_pipeline(pipeline(cfg, a));
  Pipeline pb = pipeline(cfg, b);
  pb.threads = 1;
  run_pipeline(pb);
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || read_file(e.path()) != read_file(other)) ++differ;
  }
  const bool ok = files >= 9 && differ == 0;
  return {ok, fmt::format("{} artifacts compared, {} differ", files, differ)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  BigRun big;
  const std::vector<Criterion> criteria{
      {1, "transfer formula vs forward mode", 5, transfer_equivalence},
      {2, "spherical chain rule", 5, chain_rule},
      {3, "unicritical measure mass (2048^2)", 600, [&] { return unicritical_mass(big); }},
      {4, "Collet-Eckmann statistics", 120, [&] { return collet_eckmann(big); }},
      {5, "Lattes sharpness", 180, lattes_sharpness},
      {6, "ramification accounting", 60, ramification},
      {7, "island classification", 60, islands},
      {8, "dimension estimator calibration", 60, dimension_calibration},
      {9, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s limit", c.limit_s);
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  for (const char* n : {"mass", "lattes", "det_a", "det_b"}) fs::remove_all(fs::temp_directory_path() / ("biflab_acceptance_" + std::string(n)));
  return failed == 0 ? 0 : 1;
}
