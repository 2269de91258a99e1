#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace cgostab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (log x, log y).
inline LineFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_fit: need >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0) || !(y[k] > 0)) throw std::invalid_argument("loglog_fit: values must be positive");
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("loglog_fit: x values coincide");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

/// "value <= C shape" with C fitted once at an anchor and then held fixed.
class FrozenEnvelope {
 public:
  static FrozenEnvelope fit(double anchor_value, double anchor_shape) {
    if (!(anchor_shape > 0)) throw std::invalid_argument("FrozenEnvelope: shape must be positive");
    return FrozenEnvelope(anchor_value / anchor_shape);
  }
  explicit FrozenEnvelope(double constant) : constant_(constant) {}

  double constant() const { return constant_; }
  double bound(double shape) const { return constant_ * shape; }
  // The anchor itself must pass despite rounding in value / shape * shape.
  bool holds(double value, double shape) const { return value <= bound(shape) * (1.0 + 1e-12); }

 private:
  double constant_;
};

}  // namespace cgostab
