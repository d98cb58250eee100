#include <gtest/gtest.h>

#include "biflab/io.hpp"
#include "biflab/potential.hpp"
#include "oracles.hpp"

using namespace biflab;

namespace {

// G via the Euclidean norm of the lift, 60 plain iterations.
double euclidean_green(const RationalMap& f, Complex z) {
  const double n0 = std::sqrt(std::norm(z) + 1.0);
  Complex z0 = z / n0, z1 = 1.0 / n0;
  const int d = f.degree();
  double acc = std::log(n0), w = 1.0;
  for (int n = 0; n < 60; ++n) {
    Complex a{}, b{};
    for (int k = 0; k <= d; ++k) {
      const Complex m = std::pow(z0, k) * std::pow(z1, d - k);
      a += f.numerator()[k] * m;
      b += f.denominator()[k] * m;
    }
    const double r = std::sqrt(std::norm(a) + std::norm(b));
    w /= d;
    acc += w * std::log(r);
    z0 = a / r;
    z1 = b / r;
  }
  return acc;
}

}  // namespace

TEST(Green, SquareMapExamples) {
  const Family fam = unicritical_family(2);
  EXPECT_NEAR(green_value(fam, 0.0, ProjectivePoint::affine(2.0), 2000, 1e-12).value, std::log(2.0), 1e-10);
  EXPECT_EQ(green_value(fam, 0.0, ProjectivePoint::affine(0.5), 2000, 1e-12).value, 0.0);
  EXPECT_TRUE(std::isinf(green_value(fam, 0.0, ProjectivePoint::infinity(), 10, 1e-12).value));
}

TEST(Green, MatchesEscapeRateRecursion) {
  const Family fam = unicritical_family(3);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const Complex c = oracle::random_in_disk(rng, 1.5);
    const Complex z = oracle::random_in_disk(rng, 3.0);
    const double lib = green_value(fam, c, ProjectivePoint::affine(z), 5000, 1e-13).value;
    EXPECT_NEAR(lib, oracle::unicritical_green(3, c, z), 1e-9);
  }
}

TEST(Green, LattesAgreesWithEuclideanNormIteration) {
  const RationalMap f = specialize(lattes4_family(), 0.0);
  const GreenEvaluator g(f);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 40; ++t) {
    const Complex z = oracle::random_in_disk(rng, 2.0);
    const double lib = g({z, 1.0}, 200, 1e-13).value;
    EXPECT_NEAR(lib, euclidean_green(f, z), 1e-9) << z;
  }
}

TEST(Potential, LargeParameterAsymptotics) {
  const Family fam = unicritical_family(2);
  const GreenResult r = marked_potential(fam, 100.0, 10000, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, std::log(100.0), 0.02);
  const double tol[] = {0.02, 0.002, 0.0002};
  int k = 0;
  for (double m : {1e2, 1e3, 1e4}) {
    for (double ang : {0.0, 1.0, 2.5}) {
      const Complex l = std::polar(m, ang);
      EXPECT_NEAR(marked_potential(fam, l, 2000, 1e-12).value, std::log(m), tol[k]) << l;
    }
    ++k;
  }
}

TEST(Potential, UnicriticalGridVanishesOnM) {
  const PotentialGrid g = potential_grid(unicritical_family(2), {{-2.5, -2.0}, {1.5, 2.0}}, 512, 512, 2000, 1e-10);
  auto nearest = [&](Complex l) {
    const int i = static_cast<int>(std::lround((l.real() - g.region.min.real()) / g.h));
    const int j = static_cast<int>(std::lround((l.imag() - g.region.min.imag()) / g.h));
    return g.at(i, j);
  };
  EXPECT_EQ(nearest(0.0), 0.0);
  EXPECT_EQ(nearest(-1.0), 0.0);
  EXPECT_GT(nearest(1.0), 0.0);
  for (double v : g.values) EXPECT_GE(v, 0.0);
}

TEST(Potential, StableRegionIsZero) {
  const PotentialGrid g = potential_grid(unicritical_family(2), {{-0.3, -0.2}, {0.1, 0.2}}, 32, 32, 500, 1e-10);
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(Potential, LattesGridIsTheSingleMapGreenFunction) {
  const Family fam = lattes4_family();
  const PotentialGrid g = potential_grid(fam, {{-2.0, -2.0}, {2.0, 2.0}}, 33, 33, 200, 1e-12);
  const GreenEvaluator single(specialize(fam, 0.0));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) EXPECT_EQ(g.at(i, j), single({g.node(i, j), 1.0}, 200, 1e-12).value);
}

TEST(Potential, SquareCellsAndShape) {
  const PotentialGrid g = potential_grid(unicritical_family(2), {{-2.0, -1.0}, {2.0, 5.0}}, 17, 33, 100, 1e-8);
  EXPECT_DOUBLE_EQ(g.h, 0.25);
  EXPECT_DOUBLE_EQ(g.region.max.imag(), -1.0 + 32 * 0.25);
  EXPECT_EQ(g.values.size(), 17u * 33u);
  EXPECT_THROW(potential_grid(unicritical_family(2), {{-2.0, -2.0}, {2.0, 2.0}}, 8, 32, 100, 1e-8), Error);
}

TEST(Potential, MonotoneInBudget) {
  const Family fam = unicritical_family(2);
  const Region r{{-2.0, -1.25}, {0.5, 1.25}};
  const PotentialGrid lo = potential_grid(fam, r, 64, 64, 40, 1e-10);
  const PotentialGrid hi = potential_grid(fam, r, 64, 64, 400, 1e-10);
  for (std::size_t k = 0; k < lo.values.size(); ++k) EXPECT_GE(hi.values[k], lo.values[k] - 1e-10 - 1e-6 * lo.values[k]);
}

TEST(Potential, HolderExponentPositive) {
  const PotentialGrid g = potential_grid(unicritical_family(2), {{-2.5, -2.0}, {1.5, 2.0}}, 128, 128, 500, 1e-10);
  const double alpha = holder_exponent(g);
  EXPECT_GT(alpha, 0.0);
  EXPECT_LE(alpha, 1.5);
}

TEST(Potential, DegenerateNodesAreMasked) {
  Family fam;
  fam.degree = 2;
  fam.numerator = {Polynomial({0.0, 1.0}), Polynomial({0.0}), Polynomial({1.0})};
  fam.denominator = {Polynomial({0.0}), Polynomial({1.0}), Polynomial({0.0})};
  const PotentialGrid g = potential_grid(fam, {{-1.0, -1.0}, {1.0, 1.0}}, 17, 17, 50, 1e-8);
  EXPECT_TRUE(g.masked(8, 8));
  int masked = 0;
  for (int j = 0; j < 17; ++j)
    for (int i = 0; i < 17; ++i) masked += g.masked(i, j);
  EXPECT_EQ(masked, 1);
}

TEST(Potential, DeterministicAcrossThreadCounts) {
  const Family fam = unicritical_family(2);
  const Region r{{-2.0, -1.5}, {1.0, 1.5}};
  const PotentialGrid a = potential_grid(fam, r, 48, 48, 300, 1e-10, 1);
  const PotentialGrid b = potential_grid(fam, r, 48, 48, 300, 1e-10, 4);
  EXPECT_EQ(encode_potential(a), encode_potential(b));
}

TEST(Potential, BinaryRoundTrip) {
  const PotentialGrid a = potential_grid(unicritical_family(2), {{-2.0, -1.5}, {1.0, 1.5}}, 20, 24, 100, 1e-9);
  const std::string bytes = encode_potential(a, "meta data");
  const DecodedPotential d = decode_potential(bytes);
  EXPECT_EQ(d.metadata, "meta data");
  EXPECT_EQ(d.grid.region, a.region);
  EXPECT_EQ(d.grid.nx, 20);
  EXPECT_EQ(d.grid.ny, 24);
  EXPECT_EQ(d.grid.iter_budget, 100);
  EXPECT_EQ(d.grid.tol, 1e-9);
  EXPECT_EQ(d.grid.values, a.values);
  EXPECT_EQ(encode_potential(d.grid, "meta data"), bytes);
  // header: 4 region doubles, nx, ny, tol, iter_budget
  EXPECT_EQ(bytes.size(), 64u + 8u * 20u * 24u + 9u + 8u);
}

TEST(Potential, CsvExport) {
  const PotentialGrid a = potential_grid(unicritical_family(2), {{-2.0, -1.5}, {1.0, 1.5}}, 16, 16, 100, 1e-9);
  const CsvTable t = parse_csv(potential_csv(a, "x"));
  ASSERT_EQ(t.rows.size(), 256u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"lambda_re", "lambda_im", "L"}));
  EXPECT_EQ(parse_double(t.rows[17][2]), a.at(1, 1));
}
