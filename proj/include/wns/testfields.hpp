#pragma once

// Divergence-free test data and random fields for property checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "wns/spectral.hpp"

namespace wns {

struct FieldParams {
  double amplitude = 1.0;
  double sigma = 1.0;      // Gaussian width / window width
  int mode = 1;            // Taylor-Green mode number (periodic kind)
  double wavenumber = 1.0; // Taylor-Green wavenumber (windowed kind)
  double decay = 0.6;      // heavy-tail exponent a in (1 + |x|)^{-a}
  int axis = 2;            // orientation e_j
  std::uint64_t seed = 1;  // random_bump only
};

namespace detail {

inline std::array<double, 3> unit(int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("test field: axis must be 0, 1 or 2");
  std::array<double, 3> e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  return e;
}

/// Smooth taper equal to 1 for |x|_inf <= 0.35 L and 0 at the box faces.
inline double box_taper(const Grid& g, const std::array<double, 3>& x) {
  double w = 1.0;
  const double a = 0.35 * g.length(), b = 0.5 * g.length();
  for (double c : x) {
    const double s = (std::abs(c) - a) / (b - a);
    if (s <= 0.0) continue;
    if (s >= 1.0) return 0.0;
    w *= 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0);
  }
  return w;
}

}  // namespace detail

/// u = grad psi x e with psi = a exp(-|x|^2 / (2 sigma^2)); ||u||_2^2 = a^2 pi^{3/2} sigma.
inline VectorField gaussian_bump(const Grid& g, const FieldParams& p) {
  if (!(p.sigma > 0.0)) throw std::invalid_argument("gaussian_bump: sigma must be positive");
  if (6.0 * p.sigma > 0.5 * g.length()) {
    throw std::invalid_argument("gaussian_bump: 6 sigma must fit in the box half-width");
  }
  const auto e = detail::unit(p.axis);
  VectorField u(g);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double psi = p.amplitude * std::exp(-r2 / (2.0 * p.sigma * p.sigma));
    std::array<double, 3> gp{};
    for (int j = 0; j < 3; ++j) gp[j] = -x[j] / (p.sigma * p.sigma) * psi;
    u.c[0][i] = gp[1] * e[2] - gp[2] * e[1];
    u.c[1][i] = gp[2] * e[0] - gp[0] * e[2];
    u.c[2][i] = gp[0] * e[1] - gp[1] * e[0];
  });
  return leray_project(u);
}

/// (sin kx cos ky, -cos kx sin ky, 0) with k = 2 pi mode / L, periodic on the box.
inline VectorField taylor_green(const Grid& g, const FieldParams& p) {
  if (p.mode < 1 || p.mode >= g.n() / 2) throw std::invalid_argument("taylor_green: bad mode");
  const double k = 2.0 * std::numbers::pi * p.mode / g.length();
  VectorField u(g);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    u.c[0][i] = p.amplitude * std::sin(k * x[0]) * std::cos(k * x[1]);
    u.c[1][i] = -p.amplitude * std::cos(k * x[0]) * std::sin(k * x[1]);
  });
  return u;
}

/// Curl of psi e_z with psi = a w(x) sin(kx) sin(ky) / k, w a Gaussian window.
inline VectorField taylor_green_windowed(const Grid& g, const FieldParams& p) {
  if (!(p.sigma > 0.0) || 6.0 * p.sigma > 0.5 * g.length()) {
    throw std::invalid_argument("taylor_green_windowed: window must fit in the box half-width");
  }
  const double k = p.wavenumber, s2 = p.sigma * p.sigma;
  VectorField u(g);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double w = std::exp(-r2 / (2.0 * s2));
    const double sx = std::sin(k * x[0]), sy = std::sin(k * x[1]);
    const double cx = std::cos(k * x[0]), cy = std::cos(k * x[1]);
    const double a = p.amplitude / k;
    // d psi / dy and d psi / dx
    const double py = a * (w * sx * k * cy - x[1] / s2 * w * sx * sy);
    const double px = a * (w * k * cx * sy - x[0] / s2 * w * sx * sy);
    u.c[0][i] = py;
    u.c[1][i] = -px;
  });
  return leray_project(u);
}

/// P(c (1 + |x|)^{-a} e_j), tapered to zero at the box faces.
inline VectorField heavy_tail(const Grid& g, const FieldParams& p) {
  if (!(p.decay > 0.0)) throw std::invalid_argument("heavy_tail: decay must be positive");
  const auto e = detail::unit(p.axis);
  VectorField u(g);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    const double v = p.amplitude * std::pow(1.0 + r, -p.decay) * detail::box_taper(g, x);
    for (int j = 0; j < 3; ++j) u.c[j][i] = v * e[j];
  });
  return leray_project(u);
}

/// Random real field with independent normal Fourier coefficients on
/// |m_i| <= band (no Nyquist content), zero mean unless `keep_mean`.
inline ScalarField random_band_limited(const Grid& g, std::mt19937_64& rng, int band,
                                       bool keep_mean = false) {
  if (band < 1 || band >= g.n() / 2) throw std::invalid_argument("random field: bad band");
  std::normal_distribution<double> nd(0.0, 1.0);
  Spectrum s(g);
  const std::size_t h = static_cast<std::size_t>(g.half());
  const std::size_t n = static_cast<std::size_t>(g.n());
  for (std::size_t kz = 0; kz < n; ++kz)
    for (std::size_t ky = 0; ky < n; ++ky)
      for (std::size_t kx = 0; kx < h; ++kx) {
        const std::size_t idx = kx + h * (ky + n * kz);
        const auto md = g.mode_of(idx);
        const double re = nd(rng), im = nd(rng);
        if (md[0] > band || std::abs(md[1]) > band || std::abs(md[2]) > band) continue;
        s.data[idx] = Complex(re, im);
      }
  if (!keep_mean) s.data[0] = Complex(0.0, 0.0);
  // Hermitian symmetry on the kx = 0 plane is restored by the real round trip.
  ScalarField f = inverse(s);
  Spectrum clean = forward(f);
  return inverse(clean);
}

/// curl of a random band-limited potential times a Gaussian window of width
/// sigma, scaled so that max |u| = amplitude. Deterministic in p.seed.
inline VectorField random_bump(const Grid& g, const FieldParams& p) {
  if (!(p.sigma > 0.0) || 6.0 * p.sigma > 0.5 * g.length()) {
    throw std::invalid_argument("random_bump: need 0 < 6 sigma <= box half-width");
  }
  std::mt19937_64 rng(p.seed);
  const int band = std::max(1, std::min(4, g.n() / 2 - 1));
  VectorField psi(g);
  for (int j = 0; j < 3; ++j) {
    ScalarField f = random_band_limited(g, rng, band, true);
    g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
      const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
      psi.c[j][i] = f[i] * std::exp(-r2 / (2.0 * p.sigma * p.sigma));
    });
  }
  VectorField u = leray_project(curl(psi));
  double peak = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) peak = std::max(peak, u.magnitude(i));
  if (peak == 0.0) return u;
  return (p.amplitude / peak) * u;
}

inline VectorField make_test_field(const std::string& kind, const Grid& g, const FieldParams& p) {
  if (kind == "gaussian_bump") return gaussian_bump(g, p);
  if (kind == "taylor_green") return taylor_green(g, p);
  if (kind == "taylor_green_windowed") return taylor_green_windowed(g, p);
  if (kind == "heavy_tail") return heavy_tail(g, p);
  if (kind == "random_bump") return random_bump(g, p);
  if (kind == "zero") return VectorField(g);
  throw std::invalid_argument("make_test_field: unknown kind '" + kind + "'");
}

inline VectorField random_vector_field(const Grid& g, std::mt19937_64& rng, int band) {
  VectorField u(g);
  for (int j = 0; j < 3; ++j) u.c[j] = random_band_limited(g, rng, band).data;
  return u;
}

/// Random band-limited field times a Gaussian envelope of width sigma.
inline VectorField random_localized_field(const Grid& g, std::mt19937_64& rng, int band,
                                          double sigma) {
  VectorField u = random_vector_field(g, rng, band);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double w = std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * sigma * sigma));
    for (int j = 0; j < 3; ++j) u.c[j][i] *= w;
  });
  return u;
}

}  // namespace wns
