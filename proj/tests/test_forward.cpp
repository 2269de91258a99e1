#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cgostab/forward.hpp"
#include "oracles.hpp"

using namespace cgostab;
using std::numbers::pi;

namespace {

std::vector<cplx> boundary_mode(const DiskGrid& g, int n) {
  std::vector<cplx> f(g.boundary_size());
  for (int j = 0; j < g.n_angular(); ++j) f[j] = std::exp(cplx(0, n * g.theta(j)));
  return f;
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

DtnMatrix kernel_matrix(const GridPtr& g, auto kernel) {
  const int n = g->n_angular();
  std::vector<cplx> m(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m[static_cast<std::size_t>(i) * n + j] = kernel(i, j) * g->boundary_weights()[j];
    }
  }
  return DtnMatrix(g, std::move(m));
}

}  // namespace

TEST(SolveDirichlet, ConstantsAreHarmonic) {
  auto g = build_disk_grid(1.0, 32, 64);
  std::vector<cplx> f(g->boundary_size(), 1.0);
  auto sol = solve_dirichlet(make_zero_potential(g), f);
  EXPECT_LT((sol.u - GridFunction::constant(g, 1.0)).sup_norm(), 1e-10);
  EXPECT_LT(sol.residual, 1e-10);
}

TEST(SolveDirichlet, FirstHarmonic) {
  auto g = build_disk_grid(1.0, 64, 128);
  std::vector<cplx> f(g->boundary_size());
  for (int j = 0; j < g->n_angular(); ++j) f[j] = std::cos(g->theta(j));
  auto sol = solve_dirichlet(make_zero_potential(g), f);
  auto expected = GridFunction::sample(g, [](cplx z) { return cplx(z.real(), 0.0); });
  EXPECT_LT((sol.u - expected).sup_norm(), 1e-4);
}

TEST(SolveDirichlet, ModifiedBesselProfile) {
  auto g = build_disk_grid(1.0, 64, 128);
  for (double c : {1.0, 4.0}) {
    for (int n : {0, 2, 5}) {
      auto sol = solve_dirichlet(make_constant_potential(g, c), boundary_mode(*g, n));
      const double s = std::sqrt(c);
      auto expected = GridFunction::sample(g, [&](cplx z) {
        return oracles::bessel_i(n, s * std::abs(z)) / oracles::bessel_i(n, s) * std::exp(cplx(0, n * std::arg(z)));
      });
      EXPECT_LT((sol.u - expected).sup_norm(), 1e-3) << "c=" << c << " n=" << n;
    }
  }
}

TEST(DtnMap, LaplaceExamples) {
  auto g = build_disk_grid(1.0, 64, 128);
  auto dtn = dtn_map(make_zero_potential(g));
  std::vector<cplx> one(g->boundary_size(), 1.0);
  std::vector<cplx> zero(g->boundary_size(), 0.0);
  EXPECT_LT(max_abs_diff(dtn.apply(one), zero), 1e-3);
  std::vector<cplx> cosine(g->boundary_size());
  for (int j = 0; j < g->n_angular(); ++j) cosine[j] = std::cos(g->theta(j));
  EXPECT_LT(max_abs_diff(dtn.apply(cosine), cosine), 1e-3);
  EXPECT_TRUE(dtn.flagged_columns.empty());
}

TEST(DtnMap, BesselEigenvalues) {
  auto g = build_disk_grid(1.0, 128, 256);
  for (double c : {1.0, 4.0}) {
    auto dtn = dtn_map(make_constant_potential(g, c), 2);
    for (int n = 0; n <= 8; ++n) {
      const double expected = oracles::dtn_eigenvalue(n, c);
      auto f = boundary_mode(*g, n);
      auto phi = dtn.apply(f);
      double err = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) err = std::max(err, std::abs(phi[j] - expected * f[j]));
      EXPECT_LT(err / expected, 1e-3) << "c=" << c << " n=" << n;
    }
  }
}

TEST(DtnMap, KernelRecomposesMatrixAction) {
  auto g = build_disk_grid(1.0, 16, 32);
  auto dtn = dtn_map(make_bump(g, 0.1, 0.4, 2.0, 3));
  const auto& w = g->boundary_weights();
  auto f = boundary_mode(*g, 3);
  auto phi = dtn.apply(f);
  for (int i = 0; i < dtn.size(); ++i) {
    cplx acc = 0.0;
    for (int j = 0; j < dtn.size(); ++j) acc += dtn.kernel(i, j) * f[j] * w[j];
    EXPECT_NEAR(std::abs(acc - phi[i]), 0.0, 1e-10);
  }
}

TEST(DtnMap, SymmetricKernelForRealPotential) {
  auto g = build_disk_grid(1.0, 48, 96);
  auto v = add_scaled(make_bump(g, cplx(0.2, -0.1), 0.4, 3.0, 3), make_bump(g, cplx(-0.3, 0.2), 0.3, -1.0, 4), 1.0);
  auto dtn = dtn_map(v);
  double asym = 0.0, scale = 0.0;
  for (int i = 0; i < dtn.size(); ++i) {
    for (int j = 0; j < dtn.size(); ++j) {
      asym = std::max(asym, std::abs(dtn.kernel(i, j) - dtn.kernel(j, i)));
      scale = std::max(scale, std::abs(dtn.kernel(i, j)));
    }
  }
  EXPECT_LT(asym / scale, 1e-2);
}

TEST(DtnMap, ThreadCountDoesNotChangeResult) {
  auto g = build_disk_grid(1.0, 16, 96);
  auto v = make_bump(g, 0.2, 0.5, 1.0, 3);
  auto a = dtn_map(v, 1), b = dtn_map(v, 3);
  EXPECT_EQ(a.matrix_entries(), b.matrix_entries());
}

TEST(DtnMap, DifferenceIsFirstOrderInPerturbation) {
  auto g = build_disk_grid(1.0, 24, 64);
  auto v1 = make_bump(g, 0.0, 0.5, 1.0, 3);
  auto bump = make_bump(g, 0.2, 0.3, 1.0, 3);
  auto base = dtn_map(v1);
  std::vector<double> eps;
  for (double t : {1e-3, 1e-2, 1e-1}) eps.push_back(op_norm_inf(dtn_map(add_scaled(v1, bump, t)) - base));
  EXPECT_NEAR(eps[1] / eps[0], 10.0, 0.5);
  EXPECT_NEAR(eps[2] / eps[1], 10.0, 1.0);
}

TEST(DirichletSolver, EigenvalueProximityIsReported) {
  auto g = build_disk_grid(1.0, 12, 32);
  std::vector<cplx> one(g->boundary_size(), 1.0);
  auto centre = [&](double k2) {
    return DirichletSolver(make_constant_potential(g, -k2)).solve(one).u[0].real();
  };
  // Bracket the first discrete eigenvalue near j_{0,1}^2 = 5.783 by the sign of u.
  double lo = 5.0, hi = 6.5;
  ASSERT_GT(centre(lo), 0.0);
  ASSERT_LT(centre(hi), 0.0);
  try {
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (centre(mid) > 0.0 ? lo : hi) = mid;
    }
  } catch (const DirichletEigenvalueProximity&) {
    SUCCEED();
    return;
  }
  EXPECT_THROW(DirichletSolver(make_constant_potential(g, -lo)), DirichletEigenvalueProximity);
}

TEST(DirichletSolver, ConditionEstimateIsModerateAwayFromSpectrum) {
  auto g = build_disk_grid(1.0, 32, 64);
  DirichletSolver s(make_zero_potential(g));
  EXPECT_GT(s.condition_estimate(), 1.0);
  EXPECT_LT(s.condition_estimate(), 1e9);
}

TEST(OpNormInf, Examples) {
  auto g = build_disk_grid(1.0, 8, 64);
  EXPECT_EQ(op_norm_inf(kernel_matrix(g, [](int, int) { return cplx(0.0); })), 0.0);
  EXPECT_NEAR(op_norm_inf(kernel_matrix(g, [](int, int) { return cplx(1.0); })), 2 * pi, 1e-6);
  auto gf = [&](int i) { return cplx(std::cos(g->theta(i)), 0.5); };
  auto hf = [&](int j) { return cplx(std::sin(2 * g->theta(j)), 1.0); };
  double max_g = 0.0, sum_h = 0.0;
  for (int k = 0; k < g->n_angular(); ++k) {
    max_g = std::max(max_g, std::abs(gf(k)));
    sum_h += std::abs(hf(k)) * g->boundary_weights()[k];
  }
  EXPECT_NEAR(op_norm_inf(kernel_matrix(g, [&](int i, int j) { return gf(i) * hf(j); })), max_g * sum_h, 1e-6);
}

TEST(Norm1, Examples) {
  auto g = build_disk_grid(1.0, 8, 16);
  EXPECT_EQ(norm1(kernel_matrix(g, [](int, int) { return cplx(0.0); })), 0.0);
  // A = 1: the weight log(3 + 1/d) is smallest at the largest distance d = 2.
  double expected = 0.0;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const double d = i == j ? 2 * std::sin(pi / 16) : std::abs(g->boundary_nodes()[i] - g->boundary_nodes()[j]);
      expected = std::max(expected, 1.0 / std::log(3.0 + 1.0 / d));
    }
  }
  EXPECT_NEAR(norm1(kernel_matrix(g, [](int, int) { return cplx(1.0); })), expected, 1e-12);
  EXPECT_NEAR(expected, 1.0 / std::log(3.5), 1e-12);
  auto logw = kernel_matrix(g, [&](int i, int j) { return cplx(std::log(3.0 + 1.0 / kernel_distance(*g, i, j))); });
  EXPECT_NEAR(norm1(logw), 1.0, 1e-12);
}

TEST(Norm1, FactOneBoundsOperatorNorm) {
  auto g = build_disk_grid(1.0, 8, 64);
  const double c = norm1_to_inf_constant(*g);
  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const double scale = std::exp(2 * n01(rng));
    auto a = kernel_matrix(g, [&](int, int) { return scale * cplx(n01(rng), n01(rng)); });
    EXPECT_LE(op_norm_inf(a), c * norm1(a) * (1 + 1e-12));
  }
}

TEST(MakeBump, Examples) {
  auto g = build_disk_grid(1.0, 64, 256);
  auto v = make_bump(g, 0.0, 0.5, 1.0, 3);
  EXPECT_DOUBLE_EQ(v.evaluate(0.0), 1.0);
  EXPECT_DOUBLE_EQ(v.evaluate(cplx(0.0, 0.5)), 0.0);
  EXPECT_DOUBLE_EQ(v.evaluate(0.99), 0.0);
  EXPECT_TRUE(v.boundary_zero);
  auto w = make_bump(g, 0.3, 0.2, -2.0, 3);
  EXPECT_DOUBLE_EQ(w.evaluate(0.3), -2.0);
  EXPECT_LE(w.field.sup_norm(), 2.0);
  EXPECT_NEAR(w.field.sup_norm(), 2.0, 1e-2);
}

TEST(MakeBump, DerivativeVanishesAtSupportEdge) {
  auto g = build_disk_grid(1.0, 256, 256);
  auto v = make_bump(g, 0.0, 0.5, 1.0, 3);
  auto d = dbar(v.field);
  for (std::size_t k = 0; k < g->interior_size(); ++k) {
    if (std::abs(std::abs(g->interior_nodes()[k]) - 0.5) < 0.6 * g->dr()) {
      EXPECT_LT(std::abs(d[k]), 1e-3);
    }
  }
}

TEST(MakeBump, RejectsInvalidArguments) {
  auto g = build_disk_grid(1.0, 16, 32);
  EXPECT_THROW(make_bump(g, 0.6, 0.4, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(make_bump(g, 0.0, -0.1, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(make_bump(g, 0.0, 0.5, 1.0, 2), std::invalid_argument);
}

TEST(MakeBump, C2BoundDominatesFiniteDifferenceDerivatives) {
  auto g = build_disk_grid(1.0, 64, 128);
  for (int power : {3, 4, 6}) {
    auto v = make_bump(g, cplx(0.1, 0.2), 0.35, 1.7, power);
    const double h = 1e-4;
    double sup = 0.0, grad = 0.0, hess = 0.0;
    for (cplx z : g->interior_nodes()) {
      auto f = [&](double dx, double dy) { return v.evaluate(z + cplx(dx, dy)); };
      const double fxx = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / (h * h);
      const double fyy = (f(0, h) - 2 * f(0, 0) + f(0, -h)) / (h * h);
      const double fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
      const double gx = (f(h, 0) - f(-h, 0)) / (2 * h), gy = (f(0, h) - f(0, -h)) / (2 * h);
      // spectral norm of the symmetric Hessian
      const double mean = 0.5 * (fxx + fyy), rad = std::hypot(0.5 * (fxx - fyy), fxy);
      sup = std::max(sup, std::abs(f(0, 0)));
      grad = std::max(grad, std::hypot(gx, gy));
      hess = std::max(hess, std::abs(mean) + rad);
    }
    EXPECT_GE(v.c2_bound * (1 + 1e-6), sup);
    EXPECT_GE(v.c2_bound * (1 + 1e-6), grad);
    EXPECT_GE(v.c2_bound * (1 + 1e-6), hess);
    // closed-form maxima are attained, so the bound is not loose
    EXPECT_GT(std::max({sup, grad, hess}), 0.95 * v.c2_bound) << power;
  }
}

TEST(Potential, BoundaryZeroInvariant) {
  auto g = build_disk_grid(1.0, 64, 128);
  auto v = add_scaled(make_bump(g, 0.2, 0.6, 1.0, 3), make_bump(g, -0.4, 0.5, 2.0, 4), 0.5);
  ASSERT_TRUE(v.boundary_zero);
  double outer = 0.0;
  for (int j = 0; j < g->n_angular(); ++j) outer = std::max(outer, std::abs(v.field[g->index(g->n_radial() - 1, j)]));
  EXPECT_LT(outer, 10 * g->dr() * g->dr() * v.c2_bound);
  EXPECT_FALSE(make_constant_potential(g, 1.0).boundary_zero);
}
