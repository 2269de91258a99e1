#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cgostab/field.hpp"

namespace cgostab {

/// v(z) = amplitude (1 - |z - center|^2 / rho^2)^power inside the support
/// disk, 0 outside. power >= 3 makes v C^2 across the support edge.
struct Bump {
  cplx center{0.0, 0.0};
  double rho = 0.5;
  double amplitude = 1.0;
  int power = 3;

  double operator()(cplx z) const {
    const double s = std::norm(z - center) / (rho * rho);
    return s < 1.0 ? amplitude * std::pow(1.0 - s, power) : 0.0;
  }

  // d v / d zbar = -amplitude power (1 - s)^(power - 1) (z - center) / rho^2
  cplx dbar(cplx z) const {
    const double s = std::norm(z - center) / (rho * rho);
    if (s >= 1.0) return 0.0;
    return -amplitude * power * std::pow(1.0 - s, power - 1) * (z - center) / (rho * rho);
  }

  double sup_abs() const { return std::abs(amplitude); }

  // sup |grad v|, attained at s = 1 / (2 power - 1).
  double sup_gradient() const {
    const double s = 1.0 / (2.0 * power - 1.0);
    return 2.0 * std::abs(amplitude) * power / rho * std::sqrt(s) * std::pow(1.0 - s, power - 1);
  }

  // sup of the Hessian's spectral norm. The tangential curvature peaks at the
  // centre; the radial one also has an interior extremum at s = 3/(2p - 1).
  double sup_hessian() const {
    const double base = 2.0 * std::abs(amplitude) * power / (rho * rho);
    double factor = 1.0;
    const double s = 3.0 / (2.0 * power - 1.0);
    if (s <= 1.0) {
      factor = std::max(factor, std::abs(std::pow(1.0 - s, power - 2) * (1.0 - (2.0 * power - 1.0) * s)));
    }
    return base * factor;
  }
};

/// A real potential assembled from bumps plus a constant, sampled on a grid.
struct Potential {
  GridFunction field;
  double c2_bound = 0.0;
  bool boundary_zero = true;
  bool normal_derivative_zero = true;
  // Construction metadata: v = constant + sum weight_k * bump_k.
  double constant = 0.0;
  std::vector<Bump> bumps;

  const DiskGrid& grid() const { return field.grid(); }
  const GridPtr& grid_ptr() const { return field.grid_ptr(); }

  double evaluate(cplx z) const {
    double v = constant;
    for (const auto& b : bumps) v += b(z);
    return v;
  }

  cplx evaluate_dbar(cplx z) const {
    cplx d = 0.0;
    for (const auto& b : bumps) d += b.dbar(z);
    return d;
  }

  bool is_zero() const { return field.sup_norm() == 0.0; }
};

namespace detail {

inline Potential assemble(GridPtr grid, double constant, std::vector<Bump> bumps) {
  Potential p{GridFunction(grid), 0.0, true, true, constant, std::move(bumps)};
  p.field = GridFunction::sample(grid, [&](cplx z) { return cplx(p.evaluate(z), 0.0); });
  double sup = std::abs(constant), grad = 0.0, hess = 0.0;
  for (const auto& b : p.bumps) {
    sup += b.sup_abs();
    grad += b.sup_gradient();
    hess += b.sup_hessian();
  }
  p.c2_bound = std::max({sup, grad, hess});
  const double R = grid->radius();
  bool inside = constant == 0.0;
  for (const auto& b : p.bumps) inside = inside && (std::abs(b.center) + b.rho < R);
  p.boundary_zero = inside;
  p.normal_derivative_zero = inside;
  return p;
}

}  // namespace detail

/// Compactly supported C^2 bump; rejects supports that reach the boundary.
inline Potential make_bump(GridPtr grid, cplx center, double rho, double amplitude, int power) {
  if (!(rho > 0.0)) throw std::invalid_argument("make_bump: rho must be positive");
  if (power < 3) throw std::invalid_argument("make_bump: power must be >= 3");
  if (!(std::abs(center) + rho < grid->radius())) {
    throw std::invalid_argument("make_bump: support must lie strictly inside the disk");
  }
  return detail::assemble(std::move(grid), 0.0, {Bump{center, rho, amplitude, power}});
}

/// v == c; not zero on the boundary unless c == 0.
inline Potential make_constant_potential(GridPtr grid, double c) {
  return detail::assemble(std::move(grid), c, {});
}

inline Potential make_zero_potential(GridPtr grid) { return make_constant_potential(std::move(grid), 0.0); }

/// a + t * b, with the c2 bound combined by the triangle inequality.
inline Potential add_scaled(const Potential& a, const Potential& b, double t) {
  a.field.require_same_grid(b.field);
  std::vector<Bump> bumps = a.bumps;
  for (auto bump : b.bumps) {
    bump.amplitude *= t;
    bumps.push_back(bump);
  }
  return detail::assemble(a.grid_ptr(), a.constant + t * b.constant, std::move(bumps));
}

/// Same potential resampled on another grid.
inline Potential resample(const Potential& v, GridPtr grid) {
  return detail::assemble(std::move(grid), v.constant, v.bumps);
}

}  // namespace cgostab
