#include <gtest/gtest.h>

#include <numbers>

#include "biflab/io.hpp"
#include "biflab/measure.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace biflab;


TEST(Laplacian, ConstantPotentialHasNoMass) {
  const auto pg = synthetic::potential({{0, 0}, {1, 1}}, 20, 20, [](Complex) { return 3.5; });
  const MeasureGrid m = laplacian_measure(pg);
  EXPECT_EQ(m.total_mass, 0.0);
  for (double v : m.masses) EXPECT_EQ(v, 0.0);
}

TEST(Laplacian, LogModulusIsHarmonic) {
  const auto pg = synthetic::potential({{0.5, 0.5}, {1.5, 1.5}}, 101, 101, [](Complex z) { return std::log(std::abs(z)); });
  const auto raw = stencil_masses(pg);
  double scale = 0.0;
  for (int j = 1; j < pg.ny - 1; ++j)
    for (int i = 1; i < pg.nx - 1; ++i)
      scale = std::max(scale, (4.0 * std::abs(pg.at(i, j)) + std::abs(pg.at(i + 1, j)) + std::abs(pg.at(i - 1, j)) +
                               std::abs(pg.at(i, j + 1)) + std::abs(pg.at(i, j - 1))) / kTwoPi);
  for (double v : raw) EXPECT_LE(std::abs(v), 1e-8 * scale);
}

TEST(Laplacian, QuadraticGivesUniformDensity) {
  // Laplacian of |z|^2 is 4, so each cell carries 4 h^2 / 2 pi
  const auto pg = synthetic::potential({{-1, -1}, {1, 1}}, 41, 41, [](Complex z) { return std::norm(z); });
  const MeasureGrid m = laplacian_measure(pg);
  for (double v : m.masses) EXPECT_NEAR(v, 4.0 * pg.h * pg.h / kTwoPi, 1e-13);
}

TEST(Laplacian, Linearity) {
  auto f1 = [](Complex z) { return std::norm(z) + z.real(); };
  auto f2 = [](Complex z) { return std::log(1.0 + std::norm(z)); };
  const Region r{{-1, -1}, {1, 1}};
  const auto a = stencil_masses(synthetic::potential(r, 30, 30, f1));
  const auto b = stencil_masses(synthetic::potential(r, 30, 30, f2));
  const auto c = stencil_masses(synthetic::potential(r, 30, 30, [&](Complex z) { return 2.5 * f1(z) + f2(z); }));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(c[k], 2.5 * a[k] + b[k], 1e-13);
}

TEST(Laplacian, TranslationCovariance) {
  auto f = [](Complex z) { return std::log(1.0 + std::norm(z - Complex(0.2, 0.1))); };
  const Complex shift(3.0, -2.0);
  const auto a = laplacian_measure(synthetic::potential({{-1, -1}, {1, 1}}, 30, 30, f));
  const auto b = laplacian_measure(
      synthetic::potential({{-1.0 + shift.real(), -1.0 + shift.imag()}, {1.0 + shift.real(), 1.0 + shift.imag()}}, 30, 30,
                           [&](Complex z) { return f(z - shift); }));
  for (std::size_t k = 0; k < a.masses.size(); ++k) EXPECT_NEAR(a.masses[k], b.masses[k], 1e-12);
}

TEST(Laplacian, HeavyClippingIsUnusable) {
  const auto pg = synthetic::potential({{-1, -1}, {1, 1}}, 20, 20, [](Complex z) { return -std::norm(z); });
  try {
    laplacian_measure(pg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnusableGrid);
  }
  const MeasureGrid m = laplacian_measure_unchecked(pg);
  EXPECT_EQ(m.total_mass, 0.0);
  EXPECT_GT(m.clipped_mass, 0.0);
  EXPECT_FALSE(m.usable());
}

TEST(Laplacian, MaskedNodesMaskTheirCells) {
  auto pg = synthetic::potential({{-1, -1}, {1, 1}}, 17, 17, [](Complex z) { return std::norm(z); });
  pg.at(8, 8) = std::numeric_limits<double>::quiet_NaN();
  const MeasureGrid m = laplacian_measure(pg);
  EXPECT_EQ(m.masked_cells, 5);
  for (double v : m.masses) EXPECT_GE(v, 0.0);
}

TEST(Laplacian, UnicriticalMassAgainstFluxOracle) {
  const PotentialGrid pg = potential_grid(unicritical_family(2), {{-2.5, -2.0}, {1.5, 2.0}}, 512, 512, 2000, 1e-10);
  const MeasureGrid m = laplacian_measure(pg);
  const double flux = oracle::boundary_flux(pg);
  EXPECT_NEAR(flux, 1.0, 0.01);
  // discrete Green identity: unclipped sum equals the boundary flux up to discretization
  EXPECT_NEAR(m.total_mass - m.clipped_mass, flux, 0.01);
  EXPECT_NEAR(m.total_mass, 1.0, 0.1);
  EXPECT_TRUE(m.usable());
}

TEST(Sample, DeterministicAndSeedDependent) {
  const MeasureGrid m = synthetic::uniform({{0, 0}, {1, 1}}, 40);
  EXPECT_EQ(sample(m, 100, 42), sample(m, 100, 42));
  EXPECT_NE(sample(m, 100, 42), sample(m, 100, 43));
}

TEST(Sample, SingleCellMass) {
  std::vector<double> masses(18 * 18, 0.0);
  masses[5 * 18 + 7] = 2.0;
  const MeasureGrid m = make_measure_grid({{0, 0}, {1.9, 1.9}}, 20, 20, masses);
  const Complex c = m.center(7, 5);
  for (const Complex s : sample(m, 500, 1)) {
    EXPECT_LE(std::abs(s.real() - c.real()), 0.5 * m.h);
    EXPECT_LE(std::abs(s.imag() - c.imag()), 0.5 * m.h);
  }
}

TEST(Sample, EmptyMeasure) {
  const MeasureGrid m = make_measure_grid({{0, 0}, {1, 1}}, 10, 10, std::vector<double>(64, 0.0));
  try {
    sample(m, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyMeasure);
  }
}

TEST(Sample, FrequenciesFollowMasses) {
  std::vector<double> masses(16, 0.0);
  masses[0] = 1.0;
  masses[5] = 3.0;
  const MeasureGrid m = make_measure_grid({{0, 0}, {5, 5}}, 6, 6, masses);
  int first = 0;
  const auto pts = sample(m, 20000, 9);
  for (const Complex s : pts) {
    const Complex d = s - m.center(0, 0);
    first += std::max(std::abs(d.real()), std::abs(d.imag())) <= 0.5 * m.h;
  }
  EXPECT_NEAR(first / 20000.0, 0.25, 0.01);
}

TEST(Sample, UnicriticalSamplesSitOnTheBoundary) {
  const Family fam = unicritical_family(2);
  const PotentialGrid pg = potential_grid(fam, {{-2.5, -2.0}, {1.5, 2.0}}, 512, 512, 2000, 1e-10);
  const MeasureGrid m = laplacian_measure(pg);
  const auto pts = sample(m, 1000, 3);
  int good = 0;
  for (const Complex s : pts) {
    const double L = marked_potential(fam, s, 2000, 1e-10).value;
    bool near_positive = L > 0.0;
    const int i0 = static_cast<int>(std::floor((s.real() - pg.region.min.real()) / pg.h));
    const int j0 = static_cast<int>(std::floor((s.imag() - pg.region.min.imag()) / pg.h));
    for (int j = j0 - 2; j <= j0 + 3 && !near_positive; ++j)
      for (int i = i0 - 2; i <= i0 + 3 && !near_positive; ++i)
        near_positive = std::abs(pg.node(i, j) - s) <= 2.0 * pg.h && pg.at(i, j) > 0.0;
    good += L < 0.05 && near_positive;
  }
  EXPECT_GE(good, 990);
}

TEST(BallMass, CellFractionAgainstFineSubsampling) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5), rr(0.2, 2.0);
  const int k = 1000;
  for (int t = 0; t < 50; ++t) {
    const Complex cell(u(rng), u(rng));
    const Complex center(0.0, 0.0);
    const double r = rr(rng);
    int inside = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        inside += std::abs(cell + Complex((a + 0.5) / k - 0.5, (b + 0.5) / k - 0.5) - center) <= r;
    EXPECT_NEAR(cell_disk_fraction(cell, 1.0, center, r), inside / double(k * k), 2e-3) << t;
  }
  EXPECT_NEAR(cell_disk_fraction(0.0, 1.0, 0.0, 0.5), std::numbers::pi / 4, 1e-14);
}

TEST(BallMass, WholeRegionAndEmptyRegion) {
  std::vector<double> masses(38 * 38, 0.0);
  for (int j = 0; j < 10; ++j)
    for (int i = 0; i < 10; ++i) masses[j * 38 + i] = 0.01;
  const MeasureGrid m = make_measure_grid({{0, 0}, {3.9, 3.9}}, 40, 40, masses);
  EXPECT_NEAR(ball_mass(m, Complex(1.95, 1.95), 10.0), m.total_mass, 1e-14);
  EXPECT_EQ(ball_mass(m, Complex(3.0, 3.0), 0.5), 0.0);
}

TEST(BallMass, UniformDensityMatchesArea) {
  const MeasureGrid m = synthetic::uniform({{-1, -1}, {1, 1}}, 201);
  const double density = m.total_mass / std::pow(m.h * m.cells_x(), 2);
  // 10x finer synthetic grid as the brute-force reference
  const MeasureGrid fine = synthetic::uniform({{-1, -1}, {1, 1}}, 1991);
  for (double r : {0.05, 0.13, 0.3, 0.5}) {
    const Complex c(0.013, -0.021);
    const double got = ball_mass(m, c, r);
    EXPECT_NEAR(got, std::numbers::pi * r * r * density, 0.02 * std::numbers::pi * r * r * density) << r;
    double brute = 0.0;
    for (int j = 0; j < fine.cells_y(); ++j)
      for (int i = 0; i < fine.cells_x(); ++i)
        if (std::abs(fine.center(i, j) - c) <= r) brute += fine.mass(i, j);
    EXPECT_NEAR(got, brute, 0.02 * brute) << r;
  }
}

TEST(BallMass, AgreesWithSubsampledOracleAndIsMonotone) {
  const PotentialGrid pg = potential_grid(unicritical_family(2), {{-2.5, -2.0}, {1.5, 2.0}}, 256, 256, 1000, 1e-10);
  const MeasureGrid m = laplacian_measure(pg);
  double prev = 0.0;
  for (double r = 2.0 * m.h; r < 1.0; r *= 1.3) {
    const double b = ball_mass(m, Complex(-0.75, 0.1), r);
    EXPECT_GE(b, prev);
    EXPECT_NEAR(b, oracle::brute_ball_mass(m, Complex(-0.75, 0.1), r), 0.02 * b + 1e-12);
    prev = b;
  }
}

TEST(BallMass, RefusesSubResolutionRadius) {
  const MeasureGrid m = synthetic::uniform({{-1, -1}, {1, 1}}, 21);
  try {
    ball_mass(m, 0.0, 1.5 * m.h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ResolutionExceeded);
  }
}

TEST(MeasureFile, RoundTrip) {
  const auto pg = synthetic::potential({{-1, -1}, {1, 1}}, 30, 25, [](Complex z) { return std::norm(z) * z.real() + 1.0; });
  MeasureGrid m = laplacian_measure_unchecked(pg);
  m.source_hash = std::string(64, 'a');
  const std::string bytes = encode_measure(m, "meta");
  const DecodedMeasure d = decode_measure(bytes);
  EXPECT_EQ(d.metadata, "meta");
  EXPECT_EQ(d.grid.masses, m.masses);
  EXPECT_EQ(d.grid.total_mass, m.total_mass);
  EXPECT_EQ(d.grid.clipped_mass, m.clipped_mass);
  EXPECT_EQ(d.grid.source_hash, m.source_hash);
  EXPECT_EQ(encode_measure(d.grid, "meta"), bytes);
}
