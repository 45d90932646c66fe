// fit.hpp
// Closed-form least squares for the angle scans: the model is
//   f(theta) = a + b * sin^2(2 theta)
// which is linear in (a, b) once x = sin^2(2 theta) is taken as the
// regressor, so the normal equations solve it exactly. Also the arm-phase
// inversion |phi| = 2 asin(sqrt(b)) and the two-point dip visibility.

#pragma once

#include <homsim/estimate.hpp>
#include <homsim/qcore.hpp>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace homsim {

struct ScanPoint {
  double theta_rad = 0.0;
  double f_est = 0.0;
  double f_err = 0.0;
};

struct Sin2Fit {
  double a = 0.0;
  double b = 0.0;
  double a_err = 0.0;
  double b_err = 0.0;
  double chi2 = 0.0;
  int n_points = 0;
};

/// Weighted (w = 1/err^2) or unit-weight linear least squares of
/// f = a + b x with x = sin^2(2 theta). Unit-weight parameter errors are
/// scaled by sqrt(chi2 / (n - 2)), the usual stand-in when no per-point
/// errors are trusted.
inline Sin2Fit fit_sin2(const std::vector<ScanPoint>& points, bool weighted) {
  if (points.size() < 3)
    throw std::domain_error("fit_sin2: need at least 3 points");

  double s = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  double x_min = 0.0, x_max = 0.0;
  bool first = true;
  for (const ScanPoint& pt : points) {
    if (!is_finite(pt.theta_rad) || !is_finite(pt.f_est) || !is_finite(pt.f_err))
      throw std::domain_error("fit_sin2: non-finite scan point");
    if (weighted && !(pt.f_err > 0.0))
      throw std::domain_error("fit_sin2: weighted fit needs positive errors");
    const double sin2 = std::sin(2.0 * pt.theta_rad);
    const double x = sin2 * sin2;
    const double w = weighted ? 1.0 / (pt.f_err * pt.f_err) : 1.0;
    s += w;
    sx += w * x;
    sxx += w * x * x;
    sy += w * pt.f_est;
    sxy += w * x * pt.f_est;
    x_min = first ? x : std::min(x_min, x);
    x_max = first ? x : std::max(x_max, x);
    first = false;
  }

  const double det = s * sxx - sx * sx;
  // All regressor values coincide (up to rounding): rank-deficient design.
  if (x_max - x_min < 1e-12 || !(det > 0.0))
    throw std::domain_error("fit_sin2: degenerate design, sin^2(2 theta) constant");

  Sin2Fit fit;
  fit.n_points = static_cast<int>(points.size());
  fit.a = (sxx * sy - sx * sxy) / det;
  fit.b = (s * sxy - sx * sy) / det;

  for (const ScanPoint& pt : points) {
    const double sin2 = std::sin(2.0 * pt.theta_rad);
    const double x = sin2 * sin2;
    const double w = weighted ? 1.0 / (pt.f_err * pt.f_err) : 1.0;
    const double r = pt.f_est - fit.a - fit.b * x;
    fit.chi2 += w * r * r;
  }

  fit.a_err = std::sqrt(sxx / det);
  fit.b_err = std::sqrt(s / det);
  if (!weighted && points.size() > 2) {
    const double scale = std::sqrt(fit.chi2 / (points.size() - 2));
    fit.a_err *= scale;
    fit.b_err *= scale;
  }
  return fit;
}

/// Invert b = sin^2(phi / 2) to |phi| in degrees with first-order error
/// propagation. The derivative 1 / (sqrt(b) sqrt(1 - b)) is evaluated as
/// written, so it blows up toward both endpoints; a zero b_err still maps
/// to a zero phi_err.
inline std::pair<double, double> phi_from_b(double b, double b_err) {
  if (!is_finite(b) || !is_finite(b_err) || b_err < 0.0)
    throw std::domain_error("phi_from_b: non-finite input");
  if (b <= 0.0)
    throw std::domain_error("phi_from_b: b <= 0, no phase resolvable");
  if (b > 1.0)
    throw std::domain_error("phi_from_b: b > 1 outside the model range");

  const double phi_rad = 2.0 * std::asin(std::sqrt(b));
  double err_rad = 0.0;
  if (b_err > 0.0)
    err_rad = b_err / (std::sqrt(b) * std::sqrt(1.0 - b));
  return {rad_to_deg(phi_rad), rad_to_deg(err_rad)};
}

/// Two-point visibility from dip and shoulder rates: V = 1 - c0 / c_shoulder,
/// with the errors of both rates propagated.
inline Estimate dip_visibility(double c0, double c_shoulder,
                               std::pair<double, double> errs) {
  if (!is_finite(c0) || !is_finite(c_shoulder))
    throw std::domain_error("dip_visibility: non-finite rates");
  if (!(c_shoulder > 0.0))
    throw std::domain_error("dip_visibility: shoulder rate must be positive");
  const auto [e0, es] = errs;
  if (!is_finite(e0) || !is_finite(es) || e0 < 0.0 || es < 0.0)
    throw std::domain_error("dip_visibility: bad rate errors");

  Estimate v;
  v.value = 1.0 - c0 / c_shoulder;
  v.std_error = std::hypot(e0 / c_shoulder, c0 * es / (c_shoulder * c_shoulder));
  v.method = ErrorMethod::PoissonPropagation;
  v.n_periods = 0;
  return v;
}

}  // namespace homsim
