#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "cgostab/fft.hpp"
#include "cgostab/field.hpp"

namespace cgostab {

/// Solid Cauchy transform T u(z) = -(1/pi) int_D u(zeta) / (zeta - z) and,
/// optionally, the Beurling transform S u = d/dz (T u).
///
/// Works mode by mode in theta. For u = sum_m u_m(r) e^{i m theta},
///
///   (T u)_m(r) =  2 r^m int_0^r u_{m+1}(rho) rho^{-m} drho   (m < 0)
///   (T u)_m(r) = -2 r^m int_r^R u_{m+1}(rho) rho^{-m} drho   (m >= 0)
///   (S u)_{m-1}(r) = (m / r) (T u)_m(r) + u_{m+1}(r)
///
/// The radial integrals use product integration: u_{m+1} is piecewise linear
/// between the ring radii and the power weights are integrated exactly, so
/// T(1) = zbar holds to rounding. Values at r = R come from the boundary
/// samples when present, else by linear extrapolation. Results always carry
/// boundary values.
struct CauchyResult {
  GridFunction transform;
  std::optional<GridFunction> beurling;
};

namespace detail {

// modes: (n_radial + 1) rows of Fourier coefficients of u, last row at r = R.
// Returns the coefficient rows of T u (and S u) in the same layout.
inline void cauchy_modes(const DiskGrid& g, const std::vector<cplx>& modes,
                         std::vector<cplx>& t_modes, std::vector<cplx>* s_modes) {
  const int nr = g.n_radial(), na = g.n_angular();
  const double R = g.radius();
  const auto& r = g.ring_radii();
  t_modes.assign(modes.size(), cplx(0.0));
  auto in = [&](int row, int mode) -> cplx {
    // u_{mode}(x_row); row -1 is rho = 0 (parity), rows 0..nr-1 rings, nr is R.
    if (mode < -na / 2 + 1 || mode > na / 2 - 1) return 0.0;
    const int slot = slot_of_mode(mode, na);
    if (row < 0) return (mode % 2 == 0) ? modes[slot] : cplx(0.0);
    return modes[static_cast<std::size_t>(row) * na + slot];
  };
  auto x = [&](int row) { return row < 0 ? 0.0 : (row < nr ? r[row] : R); };

  // m < 0, p = -m: C(b) = int_0^b u_{m+1}(rho) (rho/b)^p drho, swept outward.
  const int pmax = na / 2;
  std::vector<cplx> acc(pmax + 1, cplx(0.0));
  for (int row = 0; row <= nr; ++row) {
    const double a = x(row - 1), b = x(row);
    const double q = a / b;
    const double width = b - a;
    double qp = 1.0;
    for (int p = 1; p <= pmax; ++p) {
      qp *= q;
      const int m = -p;
      const cplx fa = in(row - 1, m + 1), fb = in(row, m + 1);
      const cplx slope = (fb - fa) / width;
      const double M0 = (b - a * qp) / (p + 1);
      const double M1 = (b * b - a * a * qp) / (p + 2);
      acc[p] = acc[p] * qp + (fa - slope * a) * M0 + slope * M1;
      t_modes[static_cast<std::size_t>(row) * na + slot_of_mode(m, na)] = 2.0 * acc[p];
    }
  }

  // m >= 0: D(a) = int_a^R u_{m+1}(rho) (a/rho)^m drho, swept inward.
  const int mmax = na / 2 - 1;
  std::vector<cplx> dacc(mmax + 1, cplx(0.0));
  for (int row = nr - 1; row >= 0; --row) {
    const double a = x(row), b = x(row + 1);
    const double q = a / b;
    const double width = b - a;
    const double logba = std::log(b / a);
    double qm = 1.0;   // q^m
    double qm1 = 1.0 / q;  // q^(m-1)
    double qm2 = 1.0 / (q * q);  // q^(m-2)
    for (int m = 0; m <= mmax; ++m) {
      if (m > 0) {
        qm *= q;
        qm1 *= q;
        qm2 *= q;
      }
      const cplx fa = in(row, m + 1), fb = in(row + 1, m + 1);
      const cplx slope = (fb - fa) / width;
      double M0, M1;
      if (m == 0) {
        M0 = width;
        M1 = 0.5 * (b * b - a * a);
      } else if (m == 1) {
        M0 = a * logba;
        M1 = a * width;
      } else if (m == 2) {
        M0 = a * (1.0 - qm1);
        M1 = a * a * logba;
      } else {
        M0 = a * (1.0 - qm1) / (m - 1);
        M1 = a * a * (1.0 - qm2) / (m - 2);
      }
      dacc[m] = dacc[m] * qm + (fa - slope * a) * M0 + slope * M1;
      t_modes[static_cast<std::size_t>(row) * na + m] = -2.0 * dacc[m];
    }
  }

  if (s_modes != nullptr) {
    s_modes->assign(modes.size(), cplx(0.0));
    for (int row = 0; row <= nr; ++row) {
      const double rr = x(row);
      for (int m = -na / 2 + 1; m <= na / 2 - 1; ++m) {
        const int target = m - 1;
        if (target < -na / 2 + 1) continue;
        const cplx tm = t_modes[static_cast<std::size_t>(row) * na + slot_of_mode(m, na)];
        (*s_modes)[static_cast<std::size_t>(row) * na + slot_of_mode(target, na)] =
            (m / rr) * tm + in(row, m + 1);
      }
    }
  }
}

inline std::vector<cplx> extended_rows(const GridFunction& u) {
  const DiskGrid& g = u.grid();
  const int nr = g.n_radial(), na = g.n_angular();
  std::vector<cplx> rows(static_cast<std::size_t>(nr + 1) * na);
  auto v = u.values();
  std::copy(v.begin(), v.end(), rows.begin());
  cplx* outer = rows.data() + static_cast<std::size_t>(nr) * na;
  if (u.has_boundary()) {
    auto b = u.boundary_values();
    std::copy(b.begin(), b.end(), outer);
  } else {
    for (int j = 0; j < na; ++j) {
      const cplx last = v[g.index(nr - 1, j)], prev = v[g.index(nr - 2, j)];
      outer[j] = last + 0.5 * (last - prev);
    }
  }
  return rows;
}

inline GridFunction rows_to_function(const GridPtr& grid, std::vector<cplx>&& rows) {
  const std::size_t n = grid->interior_size();
  std::vector<cplx> boundary(rows.begin() + static_cast<std::ptrdiff_t>(n), rows.end());
  rows.resize(n);
  return GridFunction(grid, std::move(rows), std::move(boundary));
}

// Replaces extended value rows by the rows of T u; fills S u when asked.
inline void cauchy_rows(const DiskGrid& g, std::vector<cplx>& rows, std::vector<cplx>* beurling_rows) {
  const int na = g.n_angular();
  rows_to_modes(rows, na);
  std::vector<cplx> t_modes;
  cauchy_modes(g, rows, t_modes, beurling_rows);
  rows.swap(t_modes);
  t_modes = {};
  modes_to_rows(rows, na);
  if (beurling_rows != nullptr) modes_to_rows(*beurling_rows, na);
}

}  // namespace detail

inline CauchyResult cauchy_transform(const GridFunction& u, bool with_beurling) {
  std::vector<cplx> rows = detail::extended_rows(u);
  std::vector<cplx> s_rows;
  detail::cauchy_rows(u.grid(), rows, with_beurling ? &s_rows : nullptr);
  CauchyResult result{detail::rows_to_function(u.grid_ptr(), std::move(rows)), std::nullopt};
  result.transform.require_finite("cauchy_T");
  if (with_beurling) {
    result.beurling = detail::rows_to_function(u.grid_ptr(), std::move(s_rows));
    result.beurling->require_finite("beurling");
  }
  return result;
}

/// T u on interior and boundary nodes.
inline GridFunction cauchy_T(const GridFunction& u) {
  return cauchy_transform(u, false).transform;
}

/// -(1/pi) int_D u(zeta) / (conj(zeta) - conj(z)), i.e. conj(T(conj u)).
inline GridFunction conj_cauchy_T(const GridFunction& u) {
  return cauchy_T(u.conj()).conj();
}

}  // namespace cgostab
