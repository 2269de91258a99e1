#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cgostab {

using cplx = std::complex<double>;

/// Polar discretization of the disk |z| < radius.
///
/// Interior nodes sit on the midpoint-shifted rings r_i = (i + 1/2) dr,
/// i = 0..n_radial-1, at the angles theta_j = j dtheta shared with the
/// boundary nodes. Interior storage is ring-major: index = i * n_angular + j.
/// Area weights are r_i dr dtheta; boundary weights are radius * dtheta.
class DiskGrid {
 public:
  DiskGrid(double radius, int n_radial, int n_angular)
      : radius_(radius), n_radial_(n_radial), n_angular_(n_angular) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw std::invalid_argument("DiskGrid: radius must be positive");
    }
    if (n_radial < 8) {
      throw std::invalid_argument("DiskGrid: n_radial must be >= 8");
    }
    if (n_angular < 16 || n_angular % 2 != 0) {
      throw std::invalid_argument("DiskGrid: n_angular must be even and >= 16");
    }
    dr_ = radius / n_radial;
    dtheta_ = 2.0 * std::numbers::pi / n_angular;

    radii_.resize(n_radial);
    for (int i = 0; i < n_radial; ++i) radii_[i] = (i + 0.5) * dr_;

    unit_.resize(n_angular);
    for (int j = 0; j < n_angular; ++j) unit_[j] = std::polar(1.0, j * dtheta_);

    ring_weights_.resize(n_radial);
    nodes_.resize(interior_size());
    for (int i = 0; i < n_radial; ++i) {
      ring_weights_[i] = radii_[i] * dr_ * dtheta_;
      for (int j = 0; j < n_angular; ++j) nodes_[index(i, j)] = radii_[i] * unit_[j];
    }
    boundary_.resize(n_angular);
    boundary_weights_.assign(n_angular, radius * dtheta_);
    for (int j = 0; j < n_angular; ++j) boundary_[j] = radius * unit_[j];
  }

  double radius() const { return radius_; }
  int n_radial() const { return n_radial_; }
  int n_angular() const { return n_angular_; }
  double dr() const { return dr_; }
  double dtheta() const { return dtheta_; }

  std::size_t interior_size() const {
    return static_cast<std::size_t>(n_radial_) * n_angular_;
  }
  std::size_t boundary_size() const { return static_cast<std::size_t>(n_angular_); }
  std::size_t index(int ring, int ray) const {
    return static_cast<std::size_t>(ring) * n_angular_ + ray;
  }

  double ring_radius(int i) const { return radii_[i]; }
  const std::vector<double>& ring_radii() const { return radii_; }
  double theta(int j) const { return j * dtheta_; }
  // e^{i theta_j}
  cplx unit(int j) const { return unit_[j]; }

  const std::vector<cplx>& interior_nodes() const { return nodes_; }
  // Area weight shared by every node of ring i.
  double ring_weight(int i) const { return ring_weights_[i]; }
  double area_weight(std::size_t k) const { return ring_weights_[k / n_angular_]; }
  std::vector<double> area_weights() const {
    std::vector<double> w(interior_size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = area_weight(k);
    return w;
  }
  const std::vector<cplx>& boundary_nodes() const { return boundary_; }
  const std::vector<double>& boundary_weights() const { return boundary_weights_; }
  // On a disk the outward normal at R e^{i theta} is e^{i theta}.
  const std::vector<cplx>& outward_normals() const { return unit_; }

  // Closest distinct pair of boundary nodes.
  double boundary_min_spacing() const {
    return 2.0 * radius_ * std::sin(std::numbers::pi / n_angular_);
  }

  bool same_shape(const DiskGrid& other) const {
    return radius_ == other.radius_ && n_radial_ == other.n_radial_ &&
           n_angular_ == other.n_angular_;
  }

 private:
  double radius_;
  int n_radial_;
  int n_angular_;
  double dr_ = 0.0;
  double dtheta_ = 0.0;
  std::vector<double> radii_;
  std::vector<cplx> unit_;
  std::vector<double> ring_weights_;
  std::vector<cplx> nodes_;
  std::vector<cplx> boundary_;
  std::vector<double> boundary_weights_;
};

using GridPtr = std::shared_ptr<const DiskGrid>;

inline GridPtr build_disk_grid(double radius, int n_radial, int n_angular) {
  return std::make_shared<const DiskGrid>(radius, n_radial, n_angular);
}

}  // namespace cgostab
