#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cgostab/errors.hpp"
#include "cgostab/fft.hpp"
#include "cgostab/grid.hpp"

namespace cgostab {

/// Complex field sampled on the interior nodes of a DiskGrid, with optional
/// values on the boundary nodes.
class GridFunction {
 public:
  explicit GridFunction(GridPtr grid)
      : grid_(std::move(grid)), values_(grid_->interior_size()) {}

  GridFunction(GridPtr grid, std::vector<cplx> values,
               std::optional<std::vector<cplx>> boundary = std::nullopt)
      : grid_(std::move(grid)), values_(std::move(values)), boundary_(std::move(boundary)) {
    if (values_.size() != grid_->interior_size()) {
      throw std::invalid_argument("GridFunction: value count does not match grid");
    }
    if (boundary_ && boundary_->size() != grid_->boundary_size()) {
      throw std::invalid_argument("GridFunction: boundary count does not match grid");
    }
  }

  // Samples f(z) at every interior node and, when requested, every boundary node.
  template <class F>
  static GridFunction sample(GridPtr grid, F&& f, bool with_boundary = true) {
    std::vector<cplx> values(grid->interior_size());
    const auto& nodes = grid->interior_nodes();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = f(nodes[k]);
    std::optional<std::vector<cplx>> boundary;
    if (with_boundary) {
      boundary.emplace(grid->boundary_size());
      const auto& bnodes = grid->boundary_nodes();
      for (std::size_t k = 0; k < bnodes.size(); ++k) (*boundary)[k] = f(bnodes[k]);
    }
    return GridFunction(std::move(grid), std::move(values), std::move(boundary));
  }

  static GridFunction constant(GridPtr grid, cplx c, bool with_boundary = true) {
    return sample(std::move(grid), [c](cplx) { return c; }, with_boundary);
  }

  const DiskGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  std::span<const cplx> values() const { return values_; }
  std::span<cplx> values() { return values_; }
  cplx operator[](std::size_t k) const { return values_[k]; }
  cplx& operator[](std::size_t k) { return values_[k]; }
  cplx at(int ring, int ray) const { return values_[grid_->index(ring, ray)]; }

  bool has_boundary() const { return boundary_.has_value(); }
  std::span<const cplx> boundary_values() const {
    if (!boundary_) throw std::logic_error("GridFunction has no boundary values");
    return *boundary_;
  }
  std::span<cplx> boundary_values() {
    if (!boundary_) throw std::logic_error("GridFunction has no boundary values");
    return *boundary_;
  }
  void set_boundary(std::vector<cplx> b) {
    if (b.size() != grid_->boundary_size()) {
      throw std::invalid_argument("GridFunction: boundary count does not match grid");
    }
    boundary_ = std::move(b);
  }
  void drop_boundary() { boundary_.reset(); }

  bool same_grid(const GridFunction& other) const {
    return grid_ == other.grid_ || grid_->same_shape(*other.grid_);
  }
  void require_same_grid(const GridFunction& other) const {
    if (!same_grid(other)) throw GridMismatch();
  }

  bool all_finite() const {
    auto finite = [](cplx c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
    if (!std::all_of(values_.begin(), values_.end(), finite)) return false;
    return !boundary_ || std::all_of(boundary_->begin(), boundary_->end(), finite);
  }
  void require_finite(const std::string& where) const {
    if (!all_finite()) throw NonFiniteValue(where);
  }

  // Applies f to every sample (interior and boundary).
  template <class F>
  GridFunction map(F&& f) const {
    GridFunction out = *this;
    for (auto& c : out.values_) c = f(c);
    if (out.boundary_) {
      for (auto& c : *out.boundary_) c = f(c);
    }
    return out;
  }

  // Applies f(value, node) to every sample.
  template <class F>
  GridFunction map_with_nodes(F&& f) const {
    GridFunction out = *this;
    const auto& nodes = grid_->interior_nodes();
    for (std::size_t k = 0; k < out.values_.size(); ++k) out.values_[k] = f(out.values_[k], nodes[k]);
    if (out.boundary_) {
      const auto& bnodes = grid_->boundary_nodes();
      for (std::size_t k = 0; k < bnodes.size(); ++k) (*out.boundary_)[k] = f((*out.boundary_)[k], bnodes[k]);
    }
    return out;
  }

  GridFunction conj() const {
    return map([](cplx c) { return std::conj(c); });
  }

  GridFunction& operator+=(const GridFunction& o) { return combine(o, [](cplx a, cplx b) { return a + b; }); }
  GridFunction& operator-=(const GridFunction& o) { return combine(o, [](cplx a, cplx b) { return a - b; }); }
  GridFunction& operator*=(const GridFunction& o) { return combine(o, [](cplx a, cplx b) { return a * b; }); }
  GridFunction& operator*=(cplx s) {
    for (auto& c : values_) c *= s;
    if (boundary_) {
      for (auto& c : *boundary_) c *= s;
    }
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
  friend GridFunction operator*(GridFunction a, cplx s) { return a *= s; }
  friend GridFunction operator*(cplx s, GridFunction a) { return a *= s; }

  // Sup over interior nodes, and boundary nodes when present.
  double sup_norm() const {
    double m = 0.0;
    for (auto c : values_) m = std::max(m, std::abs(c));
    if (boundary_) {
      for (auto c : *boundary_) m = std::max(m, std::abs(c));
    }
    return m;
  }

 private:
  // Boundary values survive only when both operands carry them.
  template <class Op>
  GridFunction& combine(const GridFunction& o, Op op) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] = op(values_[k], o.values_[k]);
    if (boundary_ && o.boundary_) {
      for (std::size_t k = 0; k < boundary_->size(); ++k) (*boundary_)[k] = op((*boundary_)[k], (*o.boundary_)[k]);
    } else {
      boundary_.reset();
    }
    return *this;
  }

  GridPtr grid_;
  std::vector<cplx> values_;
  std::optional<std::vector<cplx>> boundary_;
};

namespace detail {

// Weights of the derivative at x0 of the quadratic through (x[k], f_k).
inline std::array<double, 3> derivative_weights(const std::array<double, 3>& x, double x0) {
  std::array<double, 3> w{};
  for (int k = 0; k < 3; ++k) {
    double denom = 1.0;
    for (int m = 0; m < 3; ++m) {
      if (m != k) denom *= x[k] - x[m];
    }
    double num = 0.0;
    for (int l = 0; l < 3; ++l) {
      if (l == k) continue;
      double prod = 1.0;
      for (int m = 0; m < 3; ++m) {
        if (m != k && m != l) prod *= x0 - x[m];
      }
      num += prod;
    }
    w[k] = num / denom;
  }
  return w;
}

// Second-derivative weights at x0 for the quadratic through (x[k], f_k).
inline std::array<double, 3> second_derivative_weights(const std::array<double, 3>& x) {
  std::array<double, 3> w{};
  for (int k = 0; k < 3; ++k) {
    double denom = 1.0;
    for (int m = 0; m < 3; ++m) {
      if (m != k) denom *= x[k] - x[m];
    }
    w[k] = 2.0 / denom;
  }
  return w;
}

struct PolarDerivatives {
  std::vector<cplx> dr, dtheta;
  std::optional<std::vector<cplx>> boundary_dr, boundary_dtheta;
};

// Spectral derivative in theta along each row of length n.
inline void angular_derivative(std::span<cplx> rows, int n) {
  rows_to_modes(rows, n);
  for (std::size_t off = 0; off < rows.size(); off += n) {
    for (int k = 0; k < n; ++k) {
      const int m = mode_of_slot(k, n);
      rows[off + k] *= (m == -n / 2) ? cplx(0.0) : cplx(0.0, m);
    }
  }
  modes_to_rows(rows, n);
}

// d/dr via centred differences (across the origin on the innermost ring),
// nonuniform three-point stencils next to r = R, and d/dtheta spectrally.
inline PolarDerivatives polar_derivatives(const GridFunction& u) {
  const DiskGrid& g = u.grid();
  const int nr = g.n_radial(), na = g.n_angular();
  const double h = g.dr(), R = g.radius();
  PolarDerivatives d;
  d.dr.resize(g.interior_size());
  auto val = u.values();

  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < na; ++j) {
      const std::size_t k = g.index(i, j);
      cplx du;
      if (i == 0) {
        const cplx across = val[g.index(0, (j + na / 2) % na)];
        du = (val[g.index(1, j)] - across) / (2.0 * h);
      } else if (i < nr - 1) {
        du = (val[g.index(i + 1, j)] - val[g.index(i - 1, j)]) / (2.0 * h);
      } else if (u.has_boundary()) {
        const double ri = g.ring_radius(i);
        const auto w = derivative_weights({g.ring_radius(i - 1), ri, R}, ri);
        du = w[0] * val[g.index(i - 1, j)] + w[1] * val[k] + w[2] * u.boundary_values()[j];
      } else {
        du = (3.0 * val[k] - 4.0 * val[g.index(i - 1, j)] + val[g.index(i - 2, j)]) / (2.0 * h);
      }
      d.dr[k] = du;
    }
  }
  d.dtheta.assign(val.begin(), val.end());
  angular_derivative(d.dtheta, na);

  if (u.has_boundary()) {
    auto b = u.boundary_values();
    const auto w = derivative_weights({R, g.ring_radius(nr - 1), g.ring_radius(nr - 2)}, R);
    d.boundary_dr.emplace(na);
    for (int j = 0; j < na; ++j) {
      (*d.boundary_dr)[j] = w[0] * b[j] + w[1] * val[g.index(nr - 1, j)] + w[2] * val[g.index(nr - 2, j)];
    }
    d.boundary_dtheta.emplace(b.begin(), b.end());
    angular_derivative(*d.boundary_dtheta, na);
  }
  return d;
}

// sign = +1: d/dzbar = (1/2) e^{i theta} (d_r + (i/r) d_theta)
// sign = -1: d/dz    = (1/2) e^{-i theta} (d_r - (i/r) d_theta)
inline GridFunction wirtinger(const GridFunction& u, int sign) {
  const DiskGrid& g = u.grid();
  const int nr = g.n_radial(), na = g.n_angular();
  PolarDerivatives d = polar_derivatives(u);
  const cplx I(0.0, sign);
  std::vector<cplx> out(g.interior_size());
  for (int i = 0; i < nr; ++i) {
    const double r = g.ring_radius(i);
    for (int j = 0; j < na; ++j) {
      const std::size_t k = g.index(i, j);
      const cplx e = sign > 0 ? g.unit(j) : std::conj(g.unit(j));
      out[k] = 0.5 * e * (d.dr[k] + I / r * d.dtheta[k]);
    }
  }
  std::optional<std::vector<cplx>> boundary;
  if (d.boundary_dr) {
    boundary.emplace(na);
    for (int j = 0; j < na; ++j) {
      const cplx e = sign > 0 ? g.unit(j) : std::conj(g.unit(j));
      (*boundary)[j] = 0.5 * e * ((*d.boundary_dr)[j] + I / g.radius() * (*d.boundary_dtheta)[j]);
    }
  }
  GridFunction result(u.grid_ptr(), std::move(out), std::move(boundary));
  result.require_finite(sign > 0 ? "dbar" : "dz");
  return result;
}

}  // namespace detail

/// Discrete d/dzbar: spectral in theta, second-order differences in r.
inline GridFunction dbar(const GridFunction& u) { return detail::wirtinger(u, +1); }

/// Discrete d/dz, the conjugate stencil of dbar.
inline GridFunction dz(const GridFunction& u) { return detail::wirtinger(u, -1); }

/// max(sup|u|, sup|du/dzbar|) over the nodes.
inline double c1zbar_norm(const GridFunction& u) {
  return std::max(u.sup_norm(), dbar(u).sup_norm());
}

// Same norm when the zbar-derivative is known from elsewhere.
inline double c1zbar_norm(const GridFunction& u, const GridFunction& dbar_u) {
  u.require_same_grid(dbar_u);
  return std::max(u.sup_norm(), dbar_u.sup_norm());
}

/// (sum |u|^p w)^{1/p} over the interior nodes.
inline double lp_norm(const GridFunction& u, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("lp_norm: p must be finite and > 1");
  }
  const DiskGrid& g = u.grid();
  auto v = u.values();
  double acc = 0.0;
  for (int i = 0; i < g.n_radial(); ++i) {
    double ring = 0.0;
    for (int j = 0; j < g.n_angular(); ++j) ring += std::pow(std::abs(v[g.index(i, j)]), p);
    acc += ring * g.ring_weight(i);
  }
  return std::pow(acc, 1.0 / p);
}

/// Area integral sum u w over the interior nodes.
inline cplx integrate(const GridFunction& u) {
  const DiskGrid& g = u.grid();
  auto v = u.values();
  cplx acc = 0.0;
  for (int i = 0; i < g.n_radial(); ++i) {
    cplx ring = 0.0;
    for (int j = 0; j < g.n_angular(); ++j) ring += v[g.index(i, j)];
    acc += ring * g.ring_weight(i);
  }
  return acc;
}

}  // namespace cgostab
