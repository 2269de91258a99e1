#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cgostab/cauchy.hpp"
#include "cgostab/errors.hpp"
#include "cgostab/field.hpp"
#include "cgostab/potential.hpp"

namespace cgostab {

/// The pair (z0, lambda) and the unimodular phase
/// e_{lambda,z0}(z) = exp(lambda (z - z0)^2 - conj(lambda) (zbar - z0bar)^2).
class CgoParams {
 public:
  CgoParams(cplx z0, cplx lambda) : z0_(z0), lambda_(lambda) {
    if (!(std::abs(lambda) >= 1.0)) throw std::invalid_argument("CgoParams: |lambda| must be >= 1");
    if (!std::isfinite(std::abs(z0))) throw std::invalid_argument("CgoParams: z0 must be finite");
  }

  cplx z0() const { return z0_; }
  cplx lambda() const { return lambda_; }
  double abs_lambda() const { return std::abs(lambda_); }

  // phase angle 2 Im(lambda (z - z0)^2)
  double phase_angle(cplx z) const {
    const cplx w = z - z0_;
    return 2.0 * (lambda_ * w * w).imag();
  }
  cplx phase(cplx z) const { return std::polar(1.0, phase_angle(z)); }
  // exp(lambda (z - z0)^2), the holomorphic factor of psi.
  cplx holomorphic_factor(cplx z) const {
    const cplx w = z - z0_;
    return std::exp(lambda_ * w * w);
  }

  void require_inside(const DiskGrid& g) const {
    if (!(std::abs(z0_) < g.radius())) throw std::invalid_argument("CgoParams: z0 must lie inside the disk");
  }

 private:
  cplx z0_;
  cplx lambda_;
};

/// e_{lambda,z0} sampled on interior and boundary nodes.
inline GridFunction phase_field(const GridPtr& grid, const CgoParams& p) {
  return GridFunction::sample(grid, [&](cplx z) { return p.phase(z); });
}

/// Resolution of e_{lambda,z0} restricted to the disk |z - c| <= s.
///
/// The phase 2 Im(lambda (z - z0)^2) has gradient of size 4 |lambda| |z - z0|.
/// On ring r its angular bandwidth (highest Fourier mode) is at most
/// 4 |lambda| r d with d the largest |z - z0| over the part of the ring inside
/// the region. Integrals of the phase against smooth weights are exact on the
/// ring once n_angular exceeds the bandwidth; fields multiplied by the phase
/// and then transformed need n_angular / 2 above it. The grid must satisfy
/// n_angular >= factor * 1.1 * bandwidth + 32 on every such ring (factor 1 for
/// integrals, 2 for fields) and a radial phase increment 4 |lambda| d dr <= 2 rad.
struct PhaseResolution {
  double required_angular = 0.0;
  double radial_phase_step = 0.0;  // radians per radial cell
  bool ok = true;
};

enum class PhaseUse { integral, field };

inline PhaseResolution phase_resolution(const DiskGrid& g, const CgoParams& p, cplx c, double s,
                                        PhaseUse use = PhaseUse::integral) {
  const double factor = use == PhaseUse::field ? 2.0 : 1.0;
  PhaseResolution out;
  const double lam = p.abs_lambda();
  const double dc = std::abs(c - p.z0());
  double dmax = 0.0;
  for (int i = 0; i < g.n_radial(); ++i) {
    const double r = g.ring_radius(i);
    // ring meets the region iff | r - |c| | <= s
    if (std::abs(r - std::abs(c)) > s) continue;
    const double d = std::min(dc + s, r + std::abs(p.z0()));
    dmax = std::max(dmax, d);
    out.required_angular = std::max(out.required_angular, factor * 1.1 * 4.0 * lam * r * d + 32.0);
  }
  out.radial_phase_step = 4.0 * lam * dmax * g.dr();
  out.ok = g.n_angular() >= out.required_angular && out.radial_phase_step <= 2.0;
  return out;
}

// Requirement for tbar and g_apply, whose output spreads over the whole disk.
inline PhaseResolution phase_resolution(const DiskGrid& g, const CgoParams& p) {
  return phase_resolution(g, p, 0.0, g.radius(), PhaseUse::field);
}

inline void require_phase_resolution(const PhaseResolution& res, const DiskGrid& g, const CgoParams& p) {
  if (res.ok) return;
  std::ostringstream msg;
  msg << "|lambda| = " << p.abs_lambda() << " needs n_angular >= " << std::ceil(res.required_angular)
      << " (have " << g.n_angular() << ") and radial phase step <= 2 rad (have " << res.radial_phase_step << ")";
  throw UnderResolvedPhase(msg.str());
}

/// Smallest n >= n_min with no prime factor above 7; FFT sizes with large
/// prime factors are several times slower.
inline int next_smooth(int n_min) {
  for (int n = std::max(n_min, 1);; ++n) {
    int m = n;
    for (int f : {2, 3, 5, 7})
      while (m % f == 0) m /= f;
    if (m == 1) return n;
  }
}

/// Smallest grid (even, smooth n_angular) on which the full-disk phase
/// resolution check passes, never coarser than (n_radial_min, n_angular_min).
inline GridPtr phase_resolved_grid(double radius, const CgoParams& p, int n_radial_min = 0, int n_angular_min = 0,
                                   PhaseUse use = PhaseUse::field) {
  const double lam = p.abs_lambda();
  const double d = radius + std::abs(p.z0());
  const double factor = use == PhaseUse::field ? 2.0 : 1.0;
  const int nr = std::max(n_radial_min, static_cast<int>(std::ceil(2.0 * lam * d * radius)));
  int na = static_cast<int>(std::ceil(factor * 1.1 * 4.0 * lam * radius * d + 32.0));
  na = next_smooth(std::max(na, n_angular_min));
  while (na % 2 != 0) na = next_smooth(na + 1);
  auto g = build_disk_grid(radius, nr, na);
  require_phase_resolution(phase_resolution(*g, p, 0.0, radius, use), *g, p);
  return g;
}

namespace detail {

// Multiplies extended rows (rings, then r = R) in place by f(value, node).
template <class F>
void transform_rows(const DiskGrid& g, std::vector<cplx>& rows, F&& f) {
  const int nr = g.n_radial(), na = g.n_angular();
  for (int i = 0; i <= nr; ++i) {
    const double r = i < nr ? g.ring_radius(i) : g.radius();
    cplx* row = rows.data() + static_cast<std::size_t>(i) * na;
    for (int j = 0; j < na; ++j) row[j] = f(row[j], r * g.unit(j));
  }
}

// Rows of (1/4) T_{z0,lambda} u, or of its conjugated variant.
inline std::vector<cplx> quarter_tbar_rows(const GridFunction& u, const CgoParams& p, bool conjugated) {
  const DiskGrid& g = u.grid();
  p.require_inside(g);
  require_phase_resolution(phase_resolution(g, p), g, p);
  std::vector<cplx> rows = extended_rows(u);
  if (conjugated) {
    transform_rows(g, rows, [&](cplx c, cplx z) { return std::conj(p.phase(z)) * c; });
    cauchy_rows(g, rows, nullptr);
    transform_rows(g, rows, [&](cplx c, cplx z) { return 0.25 * p.phase(z) * c; });
  } else {
    transform_rows(g, rows, [&](cplx c, cplx z) { return std::conj(p.phase(z) * c); });
    cauchy_rows(g, rows, nullptr);
    transform_rows(g, rows, [&](cplx c, cplx z) { return 0.25 * std::conj(p.phase(z) * c); });
  }
  return rows;
}

inline void conj_rows(std::vector<cplx>& rows) {
  for (auto& c : rows) c = std::conj(c);
}

}  // namespace detail

/// T_{z0,lambda} u(z) = -(e^{-i phi(z)} / pi) int_D e^{i phi(zeta)} u(zeta) / (conj(zeta) - conj(z)),
/// e^{i phi} = e_{lambda,z0}. The conjugated variant uses the kernel
/// -(e^{i phi(z)} / pi) e^{-i phi(zeta)} / (zeta - z).
///
/// Both reduce to the solid Cauchy transform:
///   plain:      e^{-i phi} conj(T(e^{-i phi} conj u))
///   conjugated: e^{i phi} T(e^{-i phi} u)
inline GridFunction tbar(const GridFunction& u, const CgoParams& p, bool conjugated = false) {
  auto rows = detail::quarter_tbar_rows(u, p, conjugated);
  for (auto& c : rows) c *= 4.0;
  auto out = detail::rows_to_function(u.grid_ptr(), std::move(rows));
  out.require_finite("tbar");
  return out;
}

/// g u together with its exact Wirtinger derivatives.
struct GreenApplication {
  GridFunction value;
  GridFunction dbar;
  GridFunction dz;
};

/// g_{z0,lambda} u = (1/4) T(T_{z0,lambda} u). The conjugated variant, with
/// kernel conj(g), is (1/4) conj(T(conj(T^c u))) for the conjugated T^c.
///
/// dbar(g u) = (1/4) T_{z0,lambda} u exactly and dz(g u) = (1/4) S(T_{z0,lambda} u);
/// for the conjugated variant the two roles swap under conjugation.
inline GreenApplication g_apply_full(const GridFunction& u, const CgoParams& p, bool conjugated = false) {
  const GridPtr& grid = u.grid_ptr();
  std::vector<cplx> inner = detail::quarter_tbar_rows(u, p, conjugated);
  std::vector<cplx> work = inner;
  if (conjugated) detail::conj_rows(work);
  std::vector<cplx> s_rows;
  detail::cauchy_rows(*grid, work, &s_rows);
  if (conjugated) {
    detail::conj_rows(work);
    detail::conj_rows(s_rows);
  }
  GreenApplication out{detail::rows_to_function(grid, std::move(work)),
                       detail::rows_to_function(grid, std::move(conjugated ? s_rows : inner)),
                       detail::rows_to_function(grid, std::move(conjugated ? inner : s_rows))};
  out.value.require_finite("g_apply");
  out.dbar.require_finite("g_apply");
  out.dz.require_finite("g_apply");
  return out;
}

inline GridFunction g_apply(const GridFunction& u, const CgoParams& p, bool conjugated = false) {
  std::vector<cplx> rows = detail::quarter_tbar_rows(u, p, conjugated);
  if (conjugated) detail::conj_rows(rows);
  detail::cauchy_rows(u.grid(), rows, nullptr);
  if (conjugated) detail::conj_rows(rows);
  auto out = detail::rows_to_function(u.grid_ptr(), std::move(rows));
  out.require_finite("g_apply");
  return out;
}

/// Norms of g u without materialising the three output fields:
/// C^1_zbar pieces sup|g u|, sup|dbar g u| (interior and boundary) and the
/// L^p norm of dz g u over the interior.
struct GreenNorms {
  double sup_value = 0.0;
  double sup_dbar = 0.0;
  double lp_dz = 0.0;
  double c1zbar() const { return std::max(sup_value, sup_dbar); }
};

inline GreenNorms g_apply_norms(const GridFunction& u, const CgoParams& p, double lp = 4.0) {
  const DiskGrid& g = u.grid();
  GreenNorms out;
  std::vector<cplx> rows = detail::quarter_tbar_rows(u, p, false);
  auto sup = [](const std::vector<cplx>& v) {
    double m = 0.0;
    for (cplx c : v) m = std::max(m, std::abs(c));
    return m;
  };
  out.sup_dbar = sup(rows);
  std::vector<cplx> s_rows;
  detail::cauchy_rows(g, rows, &s_rows);
  out.sup_value = sup(rows);
  rows = {};
  double acc = 0.0;
  for (int i = 0; i < g.n_radial(); ++i) {
    double ring = 0.0;
    for (int j = 0; j < g.n_angular(); ++j) ring += std::pow(std::abs(s_rows[g.index(i, j)]), lp);
    acc += ring * g.ring_weight(i);
  }
  out.lp_dz = std::pow(acc, 1.0 / lp);
  if (!std::isfinite(out.sup_value) || !std::isfinite(out.sup_dbar) || !std::isfinite(out.lp_dz)) {
    throw NonFiniteValue("g_apply_norms");
  }
  return out;
}

/// g_{z0}(z, zeta, lambda) by direct quadrature of its defining area integral,
///   e^{i phi(zeta)} / (4 pi^2) int_D e^{-i phi(eta)} / ((z - eta)(conj(eta) - conj(zeta))),
/// on the nodes of `g`. Both poles are subtracted and integrated in closed form
/// with int_D 1/(z - eta) = pi conj(z) and int_D 1/(conj(eta) - conj(zeta)) = -pi zeta.
inline cplx g_kernel(const DiskGrid& g, cplx z, cplx zeta, const CgoParams& p) {
  if (std::abs(z - zeta) < 1e-14) throw std::invalid_argument("g_kernel: coincident arguments");
  if (std::abs(z) > g.radius() * (1 + 1e-12) || std::abs(zeta) > g.radius() * (1 + 1e-12)) {
    throw std::invalid_argument("g_kernel: arguments must lie in the closed disk");
  }
  const cplx fz = std::conj(p.phase(z));
  const cplx fzeta = std::conj(p.phase(zeta));
  const cplx a = fz / (std::conj(z) - std::conj(zeta));
  const cplx b = fzeta / (z - zeta);
  const auto& nodes = g.interior_nodes();
  cplx acc = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const cplx eta = nodes[k];
    const cplx d1 = z - eta, d2 = std::conj(eta) - std::conj(zeta);
    if (std::abs(d1) < 1e-14 || std::abs(d2) < 1e-14) continue;
    const cplx f = std::conj(p.phase(eta));
    acc += (f / (d1 * d2) - a / d1 - b / d2) * g.area_weight(k);
  }
  const double pi = std::numbers::pi;
  acc += a * pi * std::conj(z) - b * pi * zeta;
  return p.phase(zeta) / (4.0 * pi * pi) * acc;
}

struct CgoSolution {
  CgoParams params;
  GridFunction mu;
  GridFunction mu_dbar;     // dbar and dz of mu, summed from the exact
  GridFunction mu_dz;       // derivatives of the iterates
  int iterations = 0;
  double contraction = 0.0;  // largest successive ratio of C^1_zbar term norms
  double residual = 0.0;     // sup |mu - 1 - g(v mu)|
  bool conjugated = false;
  std::vector<double> term_norms;     // C^1_zbar norms of (g v)^j 1, j = 0..iterations
  std::vector<GridFunction> partial;       // mu^(k) for k < keep_partial
  std::vector<GridFunction> partial_dbar;  // dbar mu^(k)
  std::vector<GridFunction> terms;         // (g v)^j 1 and its dbar, j = 0..iterations,
  std::vector<GridFunction> term_dbars;    // when keep_terms is set
};

struct SolveOptions {
  double tol = 1e-10;
  int k_max = 64;
  bool conjugated = false;
  int keep_partial = 0;  // store mu^(0..keep_partial-1)
  bool keep_terms = false;
  double precheck_ratio = 0.9;
};

/// mu = sum_j (g_{z0,lambda} v)^j 1 by successive approximations.
///
/// Stops once the sup norm of the newest term drops below tol. Throws
/// NoContraction when |t_2| / |t_1| >= precheck_ratio or any later ratio of
/// C^1_zbar term norms reaches 1, and IterationLimit when k_max terms do not
/// reach tol.
inline CgoSolution solve_mu(const Potential& v, const CgoParams& p, const SolveOptions& opt = {}) {
  const GridPtr& grid = v.grid_ptr();
  GridFunction term = GridFunction::constant(grid, 1.0);
  GridFunction term_dbar = GridFunction::constant(grid, 0.0);
  CgoSolution sol{p, term, term_dbar, term_dbar, 0, 0.0, 0.0, opt.conjugated, {1.0}, {}, {}};
  auto keep = [&] {
    if (static_cast<int>(sol.partial.size()) >= opt.keep_partial) return;
    sol.partial.push_back(sol.mu);
    sol.partial_dbar.push_back(sol.mu_dbar);
  };
  keep();
  if (opt.keep_terms) {
    sol.terms.push_back(term);
    sol.term_dbars.push_back(term_dbar);
  }

  double increment = 0.0;
  for (int j = 1; j <= opt.k_max; ++j) {
    auto next = g_apply_full(v.field * term, p, opt.conjugated);
    term = std::move(next.value);
    term_dbar = std::move(next.dbar);
    sol.mu += term;
    sol.mu_dbar += term_dbar;
    sol.mu_dz += next.dz;
    sol.iterations = j;
    const double norm = std::max(term.sup_norm(), term_dbar.sup_norm());
    const double prev = sol.term_norms.back();
    sol.term_norms.push_back(norm);
    keep();
    if (opt.keep_terms) {
      sol.terms.push_back(term);
      sol.term_dbars.push_back(term_dbar);
    }
    if (prev > 0.0) {
      const double ratio = norm / prev;
      sol.contraction = std::max(sol.contraction, ratio);
      if ((j == 2 && ratio >= opt.precheck_ratio) || ratio >= 1.0) throw NoContraction(ratio);
    }
    increment = term.sup_norm();
    if (increment < opt.tol) break;
    if (j == opt.k_max) throw IterationLimit(j, increment);
  }
  sol.mu.require_finite("solve_mu");
  const GridFunction check = sol.mu - GridFunction::constant(grid, 1.0) - g_apply(v.field * sol.mu, p, opt.conjugated);
  sol.residual = check.sup_norm();
  return sol;
}

/// psi = e^{lambda (z - z0)^2} mu; for the conjugated solution the factor is
/// conjugated too, giving e^{conj(lambda) (zbar - z0bar)^2} mu.
inline GridFunction psi(const CgoSolution& sol) {
  const CgoParams& p = sol.params;
  return sol.mu.map_with_nodes([&](cplx m, cplx z) {
    const cplx f = p.holomorphic_factor(z);
    return (sol.conjugated ? std::conj(f) : f) * m;
  });
}

/// Sup of -4 (dz + 2 lambda (z - z0)) dbar(mu) + v mu relative to sup |v mu|.
/// dbar(mu) is the exact derivative carried by the solution; the outer dz is
/// a finite difference. The conjugated kernel is inverted by
/// 4 (dbar + 2 conj(lambda (z - z0))) dz instead.
inline double mu_equation_residual(const Potential& v, const CgoSolution& sol) {
  const CgoParams& p = sol.params;
  const GridFunction vm = v.field * sol.mu;
  GridFunction lhs(v.grid_ptr());
  if (!sol.conjugated) {
    lhs = dz(sol.mu_dbar) +
          sol.mu_dbar.map_with_nodes([&](cplx c, cplx z) { return 2.0 * p.lambda() * (z - p.z0()) * c; });
  } else {
    lhs = dbar(sol.mu_dz) +
          sol.mu_dz.map_with_nodes([&](cplx c, cplx z) { return 2.0 * std::conj(p.lambda() * (z - p.z0())) * c; });
  }
  return (vm - 4.0 * lhs).sup_norm() / vm.sup_norm();
}

/// Residual of -4 d^2 psi / dz dzbar + v psi, measured pointwise relative to
/// |e^{lambda (z - z0)^2}| and normalized by sup |v mu|. Since the exponential
/// factor is holomorphic, dbar psi = e^{lambda (z - z0)^2} dbar mu and the
/// weighted residual equals the mu-equation residual.
inline double psi_equation_residual(const Potential& v, const CgoSolution& sol) {
  return mu_equation_residual(v, sol);
}

}  // namespace cgostab
