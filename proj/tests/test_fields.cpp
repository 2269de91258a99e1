#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cgostab/field.hpp"

using namespace cgostab;
using std::numbers::pi;

namespace {

GridPtr default_grid() { return build_disk_grid(1.0, 64, 256); }

double max_diff(const GridFunction& a, const GridFunction& b) { return (a - b).sup_norm(); }

GridFunction sample(const GridPtr& g, auto f) { return GridFunction::sample(g, f); }

}  // namespace

TEST(Dbar, Examples) {
  auto g = default_grid();
  auto zb = sample(g, [](cplx z) { return std::conj(z); });
  auto zz = sample(g, [](cplx z) { return z; });
  auto r2 = sample(g, [](cplx z) { return std::norm(z); });
  EXPECT_LT(max_diff(dbar(zb), GridFunction::constant(g, 1.0)), 1e-6);
  EXPECT_LT(dbar(zz).sup_norm(), 1e-6);
  EXPECT_LT(max_diff(dbar(r2), zz), 1e-4);
}

TEST(Dz, Examples) {
  auto g = default_grid();
  auto zb = sample(g, [](cplx z) { return std::conj(z); });
  auto zz = sample(g, [](cplx z) { return z; });
  auto z2 = sample(g, [](cplx z) { return z * z; });
  EXPECT_LT(max_diff(dz(zz), GridFunction::constant(g, 1.0)), 1e-6);
  EXPECT_LT(dz(zb).sup_norm(), 1e-6);
  EXPECT_LT(max_diff(dz(z2), 2.0 * zz), 1e-4);
}

TEST(Dbar, WithoutBoundaryValues) {
  auto g = default_grid();
  auto r2 = GridFunction::sample(g, [](cplx z) { return std::norm(z); }, false);
  auto zz = GridFunction::sample(g, [](cplx z) { return z; }, false);
  auto d = dbar(r2);
  EXPECT_FALSE(d.has_boundary());
  EXPECT_LT(max_diff(d, zz), 1e-4);
}

TEST(Dbar, ConjugationSymmetry) {
  auto g = build_disk_grid(1.0, 32, 64);
  std::mt19937 rng(7);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    cplx a(n01(rng), n01(rng)), b(n01(rng), n01(rng)), c(n01(rng), n01(rng));
    auto u = sample(g, [&](cplx z) {
      return a * std::exp(b * z * 0.5) + c * std::conj(z) * z * z + std::sin(z.real() * z.imag());
    });
    EXPECT_LT(max_diff(dz(u).conj(), dbar(u.conj())), 1e-12);
  }
}

TEST(Dbar, ProductRuleResidualShrinksUnderRefinement) {
  auto residual = [](int nr, int na) {
    auto g = build_disk_grid(1.0, nr, na);
    auto u = sample(g, [](cplx z) { return std::exp(std::conj(z) * z) * z; });
    auto v = sample(g, [](cplx z) { return std::cos(z.real()) + cplx(0, 1) * std::conj(z); });
    return (dbar(u * v) - u * dbar(v) - v * dbar(u)).sup_norm();
  };
  const double coarse = residual(16, 32), fine = residual(32, 64), finer = residual(64, 128);
  EXPECT_LT(fine, coarse / 2);
  EXPECT_LT(finer, fine / 2);
}

TEST(C1zbarNorm, Examples) {
  auto g = default_grid();
  EXPECT_NEAR(c1zbar_norm(GridFunction::constant(g, 1.0)), 1.0, 1e-12);
  EXPECT_NEAR(c1zbar_norm(sample(g, [](cplx z) { return std::conj(z); })), 1.0, 1e-9);
  // sup|2 zbar^2| = 2 and sup|4 zbar| = 4 on the closed unit disk.
  EXPECT_NEAR(c1zbar_norm(sample(g, [](cplx z) { return 2.0 * std::conj(z) * std::conj(z); })), 4.0, 1e-9);
}

TEST(C1zbarNorm, IsANorm) {
  auto g = build_disk_grid(1.0, 16, 32);
  auto u = sample(g, [](cplx z) { return std::exp(z) + std::conj(z); });
  auto v = sample(g, [](cplx z) { return z * std::conj(z) - cplx(0.3, 1.0); });
  const cplx s(-2.5, 1.5);
  EXPECT_NEAR(c1zbar_norm(s * u), std::abs(s) * c1zbar_norm(u), 1e-12 * c1zbar_norm(u) * std::abs(s));
  EXPECT_LE(c1zbar_norm(u + v), c1zbar_norm(u) + c1zbar_norm(v) + 1e-12);
}

TEST(LpNorm, Examples) {
  auto g = default_grid();
  EXPECT_NEAR(lp_norm(GridFunction::constant(g, 1.0), 2.0), std::sqrt(pi), 1e-3);
  EXPECT_EQ(lp_norm(GridFunction::constant(g, 0.0), 2.0), 0.0);
  EXPECT_NEAR(lp_norm(sample(g, [](cplx z) { return z; }), 2.0), std::sqrt(pi / 2), 1e-3);
  EXPECT_THROW(lp_norm(GridFunction::constant(g, 1.0), 1.0), std::invalid_argument);
  EXPECT_THROW(lp_norm(GridFunction::constant(g, 1.0), 0.5), std::invalid_argument);
}

TEST(GridFunction, MismatchAndNonFinite) {
  auto a = GridFunction::constant(build_disk_grid(1.0, 16, 32), 1.0);
  auto b = GridFunction::constant(build_disk_grid(1.0, 16, 64), 1.0);
  EXPECT_THROW(a + b, GridMismatch);
  auto bad = a;
  bad[3] = cplx(std::nan(""), 0.0);
  EXPECT_THROW(dbar(bad), NonFiniteValue);
}
