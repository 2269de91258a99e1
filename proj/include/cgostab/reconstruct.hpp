#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cgostab/cgo.hpp"
#include "cgostab/forward.hpp"

namespace cgostab {

enum class MomentVariant { W, h0, h_full, h_k };

struct MomentResult {
  cplx z0;
  cplx lambda;
  cplx value;
  MomentVariant variant = MomentVariant::W;
  int k = 0;  // truncation order for h_k
};

/// Phase resolution for the integral of e_{lambda,z0} against w, taken over
/// the rings where w is nonzero and the largest |z - z0| found there.
inline PhaseResolution moment_resolution(const GridFunction& w, const CgoParams& p) {
  const DiskGrid& g = w.grid();
  PhaseResolution out;
  const double lam = p.abs_lambda();
  double dmax = 0.0;
  for (int i = 0; i < g.n_radial(); ++i) {
    double d = 0.0;
    bool any = false;
    for (int j = 0; j < g.n_angular(); ++j) {
      const std::size_t k = g.index(i, j);
      if (w[k] == cplx(0.0)) continue;
      any = true;
      d = std::max(d, std::abs(g.interior_nodes()[k] - p.z0()));
    }
    if (!any) continue;
    dmax = std::max(dmax, d);
    out.required_angular = std::max(out.required_angular, 1.1 * 4.0 * lam * g.ring_radius(i) * d + 32.0);
  }
  out.radial_phase_step = 4.0 * lam * dmax * g.dr();
  out.ok = g.n_angular() >= out.required_angular && out.radial_phase_step <= 2.0;
  return out;
}

/// W_{z0}(lambda) = int_D e_{lambda,z0}(z) w(z) dA(z) over the interior nodes.
inline cplx oscillatory_moment(const GridFunction& w, const CgoParams& p) {
  w.require_finite("oscillatory_moment");
  require_phase_resolution(moment_resolution(w, p), w.grid(), p);
  const DiskGrid& g = w.grid();
  const auto& nodes = g.interior_nodes();
  cplx acc = 0.0;
  for (int i = 0; i < g.n_radial(); ++i) {
    cplx ring = 0.0;
    for (int j = 0; j < g.n_angular(); ++j) {
      const std::size_t k = g.index(i, j);
      if (w[k] == cplx(0.0)) continue;
      ring += p.phase(nodes[k]) * w[k];
    }
    // Midpoint rule in r: the Euler-Maclaurin term at r = 0 is
    // -dr^2/24 * 2 pi (w e)(0), i.e. -1/12 of the innermost ring's sum.
    acc += ring * g.ring_weight(i) * (i == 0 ? 11.0 / 12.0 : 1.0);
  }
  return acc;
}

inline MomentResult moment_W(const GridFunction& w, const CgoParams& p) {
  return {p.z0(), p.lambda(), oscillatory_moment(w, p), MomentVariant::W, 0};
}

/// h^(0) = W with w = v.
inline MomentResult h0(const Potential& v, const CgoParams& p) {
  return {p.z0(), p.lambda(), oscillatory_moment(v.field, p), MomentVariant::h0, 0};
}

/// h = W with w = v mu.
inline MomentResult h_full(const Potential& v, const CgoSolution& sol) {
  if (sol.conjugated) throw std::invalid_argument("h_full: needs the plain CGO solution");
  v.field.require_same_grid(sol.mu);
  return {sol.params.z0(), sol.params.lambda(), oscillatory_moment(v.field * sol.mu, sol.params),
          MomentVariant::h_full, 0};
}

/// mu^(k) = sum_{j <= k} (g v)^j 1.
inline GridFunction mu_truncated(const Potential& v, const CgoParams& p, int k, bool conjugated = false) {
  if (k < 0) throw std::invalid_argument("mu_truncated: k must be >= 0");
  GridFunction term = GridFunction::constant(v.grid_ptr(), 1.0);
  GridFunction mu = term;
  for (int j = 1; j <= k; ++j) {
    term = g_apply(v.field * term, p, conjugated);
    mu += term;
  }
  return mu;
}

/// h^(k) = W with w = v mu^(k).
inline MomentResult h_k(const Potential& v, const CgoParams& p, int k) {
  return {p.z0(), p.lambda(), oscillatory_moment(v.field * mu_truncated(v, p, k), p), MomentVariant::h_k, k};
}

struct ReconstructionRow {
  cplx lambda;
  double abs_lambda = 0.0;
  cplx h0;
  double estimate = 0.0;  // (2/pi) |lambda| Re h0
  std::optional<double> error;
  double required_angular = 0.0;
  double radial_phase_step = 0.0;
};

struct ReconstructionTable {
  cplx z0;
  std::vector<ReconstructionRow> rows;
  std::vector<std::string> warnings;
};

/// (2/pi) |lambda| h^(0)_{z0}(lambda) along the schedule. The schedule is cut
/// at the first lambda the grid cannot resolve, with a warning recorded.
inline ReconstructionTable reconstruct_point(const Potential& v, cplx z0, const std::vector<cplx>& schedule,
                                             std::optional<double> truth = std::nullopt) {
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (std::abs(schedule[k]) < std::abs(schedule[k - 1])) {
      throw std::invalid_argument("reconstruct_point: schedule must be sorted by |lambda|");
    }
  }
  ReconstructionTable table{z0, {}, {}};
  for (cplx lambda : schedule) {
    const CgoParams p(z0, lambda);
    p.require_inside(v.grid());
    const PhaseResolution res = moment_resolution(v.field, p);
    if (!res.ok) {
      std::ostringstream msg;
      msg << "schedule truncated at |lambda| = " << std::abs(lambda) << ": needs n_angular >= "
          << std::ceil(res.required_angular) << ", radial phase step " << res.radial_phase_step;
      table.warnings.push_back(msg.str());
      break;
    }
    ReconstructionRow row;
    row.lambda = lambda;
    row.abs_lambda = std::abs(lambda);
    row.h0 = h0(v, p).value;
    row.estimate = 2.0 / std::numbers::pi * row.abs_lambda * row.h0.real();
    if (truth) row.error = std::abs(row.estimate - *truth);
    row.required_angular = res.required_angular;
    row.radial_phase_step = res.radial_phase_step;
    table.rows.push_back(row);
  }
  return table;
}

struct BoundaryPairing {
  cplx value;          // denoised sum
  cplx raw;            // plain double sum
  double noise_floor;  // median |E_mn|
  std::size_t kept;    // mode pairs above the threshold
};

/// sum_z sum_zeta a(z) A(z, zeta) b(zeta) w_zeta w_z for boundary data a, b
/// and a kernel difference A given as a DtnMatrix.
///
/// With CGO data the terms reach e^{2 |lambda| L^2} while the sum is O(1/|lambda|),
/// so the plain sum is lost to roundoff already at moderate |lambda|. The
/// denoised value works in the angular Fourier basis: with
/// E_mn = sum_ij e^{i m theta_i} M_ij e^{i n theta_j} and a, b expanded in
/// modes, the sum is w sum_mn a_m E_mn b_n. The kernel of a DtN difference is
/// smooth, so E decays geometrically until it reaches the roundoff floor of
/// the forward solves; entries below floor_factor times the median |E_mn|
/// carry no signal and are dropped.
inline BoundaryPairing boundary_pairing(std::span<const cplx> a, const DtnMatrix& diff, std::span<const cplx> b,
                                        double floor_factor = 100.0) {
  const DiskGrid& g = diff.grid();
  const int n = diff.size();
  if (a.size() != static_cast<std::size_t>(n) || b.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("boundary_pairing: boundary size");
  }
  const auto& w = g.boundary_weights();
  BoundaryPairing out{};
  {
    const auto db = diff.apply(b);
    for (int i = 0; i < n; ++i) out.raw += a[i] * db[i] * w[i];
  }
  // E = F M F^T with F_mi = e^{i m theta_i}: transform rows, transpose, transform rows.
  std::vector<cplx> e(diff.matrix_entries());
  detail::modes_to_rows(e, n);
  std::vector<cplx> t(e.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) t[static_cast<std::size_t>(j) * n + i] = e[static_cast<std::size_t>(i) * n + j];
  }
  detail::modes_to_rows(t, n);  // t[n_slot * n + m_slot] = E_mn
  std::vector<double> mags(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) mags[k] = std::abs(t[k]);
  auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  out.noise_floor = *mid;
  const double threshold = floor_factor * out.noise_floor;

  std::vector<cplx> am(a.begin(), a.end()), bm(b.begin(), b.end());
  detail::rows_to_modes(am, n);
  detail::rows_to_modes(bm, n);
  cplx acc = 0.0;
  for (int ns = 0; ns < n; ++ns) {
    for (int ms = 0; ms < n; ++ms) {
      const cplx entry = t[static_cast<std::size_t>(ns) * n + ms];
      if (std::abs(entry) <= threshold) continue;
      ++out.kept;
      acc += am[ms] * entry * bm[ns];
    }
  }
  out.value = acc * w[0];
  return out;
}

struct AlessandriniTerms {
  cplx I, I1, I2, I3, I4, J;
  cplx J_raw;                 // plain double boundary sum
  double kernel_noise_floor = 0.0;
  double relative_gap = 0.0;  // |I - J| / |I|
  bool flagged = false;       // relative_gap above the budget
  double contraction2 = 0.0;  // measured contraction of the mu_2 and conj(mu_1) solves
  double contraction1 = 0.0;
};

inline void require_same_boundary(const DiskGrid& a, const DiskGrid& b) {
  if (a.n_angular() != b.n_angular() || a.radius() != b.radius()) throw GridMismatch();
}

/// I = int e (v2 - v1) mu2 conj(mu1), its four-term split and the boundary
/// side J = sum_z sum_zeta psi1(z) (Phi2 - Phi1)(z, zeta) psi2(zeta) w_zeta w_z.
///
/// mu2 solves the plain equation at (z0, lambda); conj(mu1) solves the
/// conjugated equation at (z0, -lambda), so psi1 = e^{-conj(lambda) (zbar - z0bar)^2} conj(mu1).
inline AlessandriniTerms alessandrini_terms(const Potential& v1, const Potential& v2, const CgoParams& p,
                                            const DtnMatrix& dtn1, const DtnMatrix& dtn2,
                                            const SolveOptions& options = {}, double budget = 0.1) {
  v1.field.require_same_grid(v2.field);
  require_same_boundary(v1.grid(), dtn1.grid());
  require_same_boundary(v1.grid(), dtn2.grid());
  const DiskGrid& g = v1.grid();

  SolveOptions plain = options, conj = options;
  plain.conjugated = false;
  conj.conjugated = true;
  const CgoSolution s2 = solve_mu(v2, p, plain);
  const CgoSolution s1 = solve_mu(v1, CgoParams(p.z0(), -p.lambda()), conj);

  const GridFunction dv = v2.field - v1.field;
  const GridFunction one = GridFunction::constant(v1.grid_ptr(), 1.0);
  const GridFunction m2 = s2.mu - one, m1 = s1.mu - one;
  AlessandriniTerms t;
  t.I = oscillatory_moment(dv * s2.mu * s1.mu, p);
  t.I1 = oscillatory_moment(dv, p);
  const cplx cross = oscillatory_moment(dv * m2 * m1, p);
  t.I2 = -cross;
  t.I3 = cross + oscillatory_moment(dv * m2, p);
  t.I4 = cross + oscillatory_moment(dv * m1, p);

  const GridFunction psi1 = psi(s1), psi2 = psi(s2);
  const BoundaryPairing pairing = boundary_pairing(psi1.boundary_values(), dtn2 - dtn1, psi2.boundary_values());
  t.J = pairing.value;
  t.J_raw = pairing.raw;
  t.kernel_noise_floor = pairing.noise_floor;

  t.relative_gap = std::abs(t.I) > 0.0 ? std::abs(t.I - t.J) / std::abs(t.I) : std::abs(t.J);
  t.flagged = t.relative_gap > budget;
  t.contraction1 = s1.contraction;
  t.contraction2 = s2.contraction;
  return t;
}

/// (2/pi) |lambda| J(lambda): the data-side estimate of (v2 - v1)(z0).
inline cplx reconstruct_difference_from_dtn(const DtnMatrix& dtn1, const DtnMatrix& dtn2, const Potential& v1,
                                            const Potential& v2, cplx z0, cplx lambda,
                                            const SolveOptions& options = {}) {
  const CgoParams p(z0, lambda);
  const AlessandriniTerms t = alessandrini_terms(v1, v2, p, dtn1, dtn2, options);
  return 2.0 / std::numbers::pi * std::abs(lambda) * t.J;
}

}  // namespace cgostab
