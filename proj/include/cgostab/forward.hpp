#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <vector>

#include "cgostab/errors.hpp"
#include "cgostab/field.hpp"
#include "cgostab/parallel.hpp"
#include "cgostab/potential.hpp"

namespace cgostab {

/// Discrete Dirichlet-to-Neumann operator on the boundary nodes.
///
/// matrix(z, zeta) maps nodal boundary values to nodal normal derivatives;
/// kernel(z, zeta) = matrix(z, zeta) / w_zeta is the continuum kernel estimate,
/// so (Phi f)(z) = sum_zeta kernel(z, zeta) f(zeta) w_zeta.
class DtnMatrix {
 public:
  DtnMatrix(GridPtr grid, std::vector<cplx> matrix)
      : grid_(std::move(grid)), n_(grid_->n_angular()), matrix_(std::move(matrix)) {
    if (matrix_.size() != static_cast<std::size_t>(n_) * n_) {
      throw std::invalid_argument("DtnMatrix: size does not match boundary node count");
    }
  }

  const DiskGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int size() const { return n_; }

  cplx matrix(int row, int col) const { return matrix_[static_cast<std::size_t>(row) * n_ + col]; }
  cplx kernel(int row, int col) const { return matrix(row, col) / grid_->boundary_weights()[col]; }
  const std::vector<cplx>& matrix_entries() const { return matrix_; }

  std::vector<cplx> apply(std::span<const cplx> f) const {
    if (f.size() != static_cast<std::size_t>(n_)) throw std::invalid_argument("DtnMatrix::apply: size");
    std::vector<cplx> out(n_);
    for (int i = 0; i < n_; ++i) {
      cplx acc = 0.0;
      for (int j = 0; j < n_; ++j) acc += matrix(i, j) * f[j];
      out[i] = acc;
    }
    return out;
  }

  friend DtnMatrix operator-(const DtnMatrix& a, const DtnMatrix& b) {
    if (!a.grid_->same_shape(*b.grid_)) throw GridMismatch();
    std::vector<cplx> d(a.matrix_.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = a.matrix_[k] - b.matrix_[k];
    DtnMatrix out(a.grid_, std::move(d));
    out.max_column_residual = std::max(a.max_column_residual, b.max_column_residual);
    return out;
  }

  // Largest relative linear-solve residual over the columns, and the columns
  // whose residual exceeded the solver tolerance.
  double max_column_residual = 0.0;
  std::vector<int> flagged_columns;

 private:
  GridPtr grid_;
  int n_;
  std::vector<cplx> matrix_;
};

struct DirichletSolution {
  GridFunction u;
  double residual = 0.0;  // relative, infinity norm
};

/// Factorized five-point-in-r, five-point-in-theta discretization of
/// -Delta + v with Dirichlet data on |z| = R.
///
/// Radial second derivatives use three-point Lagrange stencils: across the
/// origin on the innermost ring (n_angular is even, so theta + pi is a ray of
/// the grid) and nonuniform next to the boundary, which sits dr/2 outside the
/// outermost ring. Angular second derivatives are fourth-order.
class DirichletSolver {
 public:
  static constexpr double kConditionLimit = 1e12;
  static constexpr double kResidualTolerance = 1e-8;

  explicit DirichletSolver(const Potential& v) : grid_(v.grid_ptr()) {
    const DiskGrid& g = *grid_;
    const int nr = g.n_radial(), na = g.n_angular();
    const double R = g.radius();
    const double dth2 = g.dtheta() * g.dtheta();
    const std::size_t n = g.interior_size();

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(n * 9);
    auto pot = v.field.values();
    for (int i = 0; i < nr; ++i) {
      const double r = g.ring_radius(i);
      std::array<double, 3> x;
      if (i == 0) {
        x = {-r, r, g.ring_radius(1)};
      } else if (i < nr - 1) {
        x = {g.ring_radius(i - 1), r, g.ring_radius(i + 1)};
      } else {
        x = {g.ring_radius(i - 1), r, R};
      }
      const auto d2 = detail::second_derivative_weights(x);
      const auto d1 = detail::derivative_weights(x, r);
      std::array<double, 3> w;
      for (int k = 0; k < 3; ++k) w[k] = d2[k] + d1[k] / r;
      if (i == nr - 1) boundary_coupling_ = w[2];
      const double ang = 1.0 / (12.0 * dth2 * r * r);
      for (int j = 0; j < na; ++j) {
        const auto row = static_cast<Eigen::Index>(g.index(i, j));
        auto add = [&](int ring, int ray, double value) {
          entries.emplace_back(row, static_cast<Eigen::Index>(g.index(ring, (ray % na + na) % na)), value);
        };
        // -u_rr - u_r / r
        if (i == 0) {
          add(0, j + na / 2, -w[0]);
          add(0, j, -w[1]);
          add(1, j, -w[2]);
        } else if (i < nr - 1) {
          add(i - 1, j, -w[0]);
          add(i, j, -w[1]);
          add(i + 1, j, -w[2]);
        } else {
          add(i - 1, j, -w[0]);
          add(i, j, -w[1]);
        }
        // -(1/r^2) u_thth
        add(i, j - 2, ang);
        add(i, j - 1, -16.0 * ang);
        add(i, j, 30.0 * ang);
        add(i, j + 1, -16.0 * ang);
        add(i, j + 2, ang);
        add(i, j, pot[row].real());
      }
    }
    matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    matrix_.setFromTriplets(entries.begin(), entries.end());
    matrix_.makeCompressed();

    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->analyzePattern(matrix_);
    lu_->factorize(matrix_);
    if (lu_->info() != Eigen::Success) {
      throw DirichletEigenvalueProximity(std::numeric_limits<double>::infinity());
    }
    condition_ = estimate_condition();
    if (!(condition_ <= kConditionLimit)) throw DirichletEigenvalueProximity(condition_);
  }

  const DiskGrid& grid() const { return *grid_; }
  double condition_estimate() const { return condition_; }
  // Coefficient of the boundary value in the outermost-ring equation.
  double boundary_coupling() const { return boundary_coupling_; }

  /// u on interior and boundary nodes for boundary data f.
  DirichletSolution solve(std::span<const cplx> f) const {
    const DiskGrid& g = *grid_;
    if (f.size() != g.boundary_size()) throw std::invalid_argument("solve_dirichlet: boundary size");
    const int nr = g.n_radial(), na = g.n_angular();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.interior_size()), 2);
    for (int j = 0; j < na; ++j) {
      const auto row = static_cast<Eigen::Index>(g.index(nr - 1, j));
      rhs(row, 0) = boundary_coupling_ * f[j].real();
      rhs(row, 1) = boundary_coupling_ * f[j].imag();
    }
    Eigen::MatrixXd sol = lu_->solve(rhs);
    const double scale = std::max(rhs.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double residual = (matrix_ * sol - rhs).cwiseAbs().maxCoeff() / scale;
    std::vector<cplx> values(g.interior_size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = cplx(sol(static_cast<Eigen::Index>(k), 0), sol(static_cast<Eigen::Index>(k), 1));
    }
    GridFunction u(grid_, std::move(values), std::vector<cplx>(f.begin(), f.end()));
    u.require_finite("solve_dirichlet");
    return {std::move(u), residual};
  }

  // Real solutions for a block of unit boundary vectors e_col, col in cols.
  Eigen::MatrixXd solve_unit_columns(std::span<const int> cols) const {
    const DiskGrid& g = *grid_;
    const int nr = g.n_radial();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.interior_size()),
                                                static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      rhs(static_cast<Eigen::Index>(g.index(nr - 1, cols[c])), static_cast<Eigen::Index>(c)) = boundary_coupling_;
    }
    return lu_->solve(rhs);
  }

  double relative_residual(const Eigen::MatrixXd& sol, std::span<const int> cols) const {
    const DiskGrid& g = *grid_;
    Eigen::MatrixXd res = matrix_ * sol;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      res(static_cast<Eigen::Index>(g.index(g.n_radial() - 1, cols[c])), static_cast<Eigen::Index>(c)) -=
          boundary_coupling_;
    }
    return res.cwiseAbs().maxCoeff() / std::abs(boundary_coupling_);
  }

 private:
  // ||A||_1 ||A^{-1}||_1 with the inverse norm from Hager's estimator.
  double estimate_condition() const {
    const Eigen::Index n = matrix_.rows();
    double norm_a = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      double s = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, c); it; ++it) s += std::abs(it.value());
      norm_a = std::max(norm_a, s);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double estimate = 0.0;
    for (int iter = 0; iter < 5; ++iter) {
      Eigen::VectorXd y = lu_->solve(x);
      if (!y.allFinite()) return std::numeric_limits<double>::infinity();
      estimate = y.lpNorm<1>();
      Eigen::VectorXd xi = y.unaryExpr([](double t) { return t >= 0.0 ? 1.0 : -1.0; });
      Eigen::VectorXd z = lu_->transpose().solve(xi);
      Eigen::Index jmax;
      const double zmax = z.cwiseAbs().maxCoeff(&jmax);
      if (zmax <= z.dot(x)) break;
      x.setZero();
      x(jmax) = 1.0;
    }
    return norm_a * estimate;
  }

  GridPtr grid_;
  Eigen::SparseMatrix<double> matrix_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  double boundary_coupling_ = 0.0;
  double condition_ = 0.0;
};

/// Solution of -Delta u + v u = 0, u = f on the boundary.
inline DirichletSolution solve_dirichlet(const Potential& v, std::span<const cplx> f) {
  return DirichletSolver(v).solve(f);
}

/// Discrete DtN map: column j is the one-sided second-order normal derivative
/// of the solution with nodal boundary data e_j.
inline DtnMatrix dtn_map(const Potential& v, int threads = 1) {
  const DirichletSolver solver(v);
  const DiskGrid& g = solver.grid();
  const int nr = g.n_radial(), na = g.n_angular();
  const double R = g.radius();
  const auto dn = detail::derivative_weights({R, g.ring_radius(nr - 1), g.ring_radius(nr - 2)}, R);

  constexpr int kBlock = 32;
  const int blocks = (na + kBlock - 1) / kBlock;
  std::vector<cplx> matrix(static_cast<std::size_t>(na) * na);
  std::vector<double> residuals(na, 0.0);
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    std::vector<int> cols;
    for (int c = static_cast<int>(b) * kBlock; c < std::min(na, static_cast<int>(b + 1) * kBlock); ++c) {
      cols.push_back(c);
    }
    const Eigen::MatrixXd sol = solver.solve_unit_columns(cols);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const int col = cols[c];
      Eigen::MatrixXd one = sol.col(static_cast<Eigen::Index>(c));
      residuals[col] = solver.relative_residual(one, std::span<const int>(&cols[c], 1));
      for (int row = 0; row < na; ++row) {
        const double outer = sol(static_cast<Eigen::Index>(g.index(nr - 1, row)), static_cast<Eigen::Index>(c));
        const double inner = sol(static_cast<Eigen::Index>(g.index(nr - 2, row)), static_cast<Eigen::Index>(c));
        matrix[static_cast<std::size_t>(row) * na + col] = dn[0] * (row == col ? 1.0 : 0.0) + dn[1] * outer + dn[2] * inner;
      }
    }
  });
  DtnMatrix out(v.grid_ptr(), std::move(matrix));
  for (int c = 0; c < na; ++c) {
    out.max_column_residual = std::max(out.max_column_residual, residuals[c]);
    if (residuals[c] > DirichletSolver::kResidualTolerance) out.flagged_columns.push_back(c);
  }
  return out;
}

/// L^infinity -> L^infinity norm of the kernel operator: max_z sum_zeta |A| w.
inline double op_norm_inf(const DtnMatrix& a) {
  const auto& w = a.grid().boundary_weights();
  double best = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    double row = 0.0;
    for (int j = 0; j < a.size(); ++j) row += std::abs(a.kernel(i, j)) * w[j];
    best = std::max(best, row);
  }
  return best;
}

/// Distance used by the log-weighted kernel norm; the diagonal takes the
/// closest distinct-node distance.
inline double kernel_distance(const DiskGrid& g, int i, int j) {
  if (i == j) return g.boundary_min_spacing();
  return std::abs(g.boundary_nodes()[i] - g.boundary_nodes()[j]);
}

/// sup |A(x, y)| / log(3 + |x - y|^{-1}) over boundary node pairs.
inline double norm1(const DtnMatrix& a) {
  const DiskGrid& g = a.grid();
  double best = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) {
      best = std::max(best, std::abs(a.kernel(i, j)) / std::log(3.0 + 1.0 / kernel_distance(g, i, j)));
    }
  }
  return best;
}

/// max_x sum_y log(3 + |x - y|^{-1}) w_y: the constant relating op_norm_inf and norm1.
inline double norm1_to_inf_constant(const DiskGrid& g) {
  const auto& w = g.boundary_weights();
  double best = 0.0;
  const int n = g.n_angular();
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::log(3.0 + 1.0 / kernel_distance(g, i, j)) * w[j];
    best = std::max(best, row);
  }
  return best;
}

}  // namespace cgostab
