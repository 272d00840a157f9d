#pragma once

// One-dimensional radial integrals for the constants that enter the bounds:
// the standard bump, its L^q norms, and the heat kernel W_1.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wns {

/// Unnormalized bump exp(-1 / (1 - r^2)) on r < 1.
inline double bump_profile(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

inline double radial_integral_unit_ball(auto f) {
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate([&](double r) { return 4.0 * std::numbers::pi * r * r * f(r); }, 0.0, 1.0);
}

inline double radial_integral_halfline(auto f) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double r) { return 4.0 * std::numbers::pi * r * r * f(r); });
}

/// Integral of the unnormalized bump over R^3.
inline double bump_mass() {
  static const double m = radial_integral_unit_ball(bump_profile);
  return m;
}

/// ||phi||_q for the unit-mass bump phi = bump_profile / bump_mass.
inline double bump_lq_norm(double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("bump_lq_norm: q must be >= 1");
  const double c = 1.0 / bump_mass();
  if (std::isinf(q)) return c * std::exp(-1.0);
  const double s = radial_integral_unit_ball([&](double r) { return std::pow(c * bump_profile(r), q); });
  return std::pow(s, 1.0 / q);
}

inline double heat_kernel_w1(double r) {
  return std::pow(4.0 * std::numbers::pi, -1.5) * std::exp(-r * r / 4.0);
}

/// ||grad W_1||_1 by quadrature; closed form 2 / sqrt(pi).
inline double heat_kernel_grad_l1() {
  static const double v = radial_integral_halfline([](double r) { return 0.5 * r * heat_kernel_w1(r); });
  return v;
}

/// ||W_1||_q by quadrature; closed form (4 pi)^{-3/2} (4 pi / q)^{3/(2q)}.
inline double heat_kernel_lq_norm(double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("heat_kernel_lq_norm: q must be >= 1");
  if (std::isinf(q)) return heat_kernel_w1(0.0);
  const double s = radial_integral_halfline([&](double r) { return std::pow(heat_kernel_w1(r), q); });
  return std::pow(s, 1.0 / q);
}

}  // namespace wns
