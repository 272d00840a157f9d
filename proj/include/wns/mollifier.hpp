#pragma once

// phi_eps * (theta_alpha u): spatial cutoff followed by a compactly supported
// mollifier, applied in the transform domain.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "wns/quadrature.hpp"
#include "wns/spectral.hpp"

namespace wns {

/// Quintic smoothstep S(s) = 6s^5 - 15s^4 + 10s^3 on [0, 1].
inline double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// Plateau cutoff: 1 on |x| <= 1, 0 on |x| >= 2.
inline double theta_profile(double rho) { return 1.0 - smoothstep5(rho - 1.0); }

/// d theta / d rho.
inline double theta_profile_derivative(double rho) {
  if (rho <= 1.0 || rho >= 2.0) return 0.0;
  const double s = rho - 1.0;
  return -30.0 * s * s * (1.0 - s) * (1.0 - s);
}

struct MollifierSpec {
  Grid grid;
  double epsilon = 1.0;
  double alpha = 1.0;
  std::shared_ptr<const RealArray> phi_hat;  // real transform of phi_eps samples, half spectrum
  std::shared_ptr<const RealArray> theta;    // theta_alpha at every node
  double discrete_mass = 1.0;                // h^3 sum of the raw samples before normalization

  /// grad theta_alpha at x (analytic).
  std::array<double, 3> grad_theta(const std::array<double, 3>& x) const {
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    const double d = alpha * theta_profile_derivative(alpha * r) / r;
    return {d * x[0], d * x[1], d * x[2]};
  }
};

inline MollifierSpec make_mollifier(const Grid& g, double epsilon, double alpha) {
  if (!(epsilon > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("mollifier: epsilon and alpha must be positive");
  }
  if (2.0 / alpha + epsilon > 0.5 * g.length()) {
    throw std::invalid_argument("mollifier: cutoff support 2/alpha + epsilon = " +
                                std::to_string(2.0 / alpha + epsilon) +
                                " exceeds the box half-width " + std::to_string(0.5 * g.length()));
  }
  MollifierSpec m{g, epsilon, alpha, nullptr, nullptr, 1.0};
  const int n = g.n();
  const double h = g.spacing();
  const double c = 1.0 / bump_mass();
  RealArray samples(g.size(), 0.0);
  double sum = 0.0;
  // Offsets from the origin by minimum image, so the kernel is centred at 0.
  auto offset = [n, h](int i) { return (i <= n / 2 ? i : i - n) * h; };
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double x = offset(ix), y = offset(iy), z = offset(iz);
        const double r = std::sqrt(x * x + y * y + z * z) / epsilon;
        const double v = c * bump_profile(r) / (epsilon * epsilon * epsilon);
        samples[g.index(ix, iy, iz)] = v;
        sum += v;
      }
  m.discrete_mass = sum * g.cell_volume();
  for (double& v : samples) v /= m.discrete_mass;
  ComplexArray spec(g.spectral_size());
  g.forward(samples.data(), spec.data());
  auto hat = std::make_shared<RealArray>(g.spectral_size());
  for (std::size_t i = 0; i < spec.size(); ++i) (*hat)[i] = spec[i].real() * g.cell_volume();
  m.phi_hat = hat;
  auto th = std::make_shared<RealArray>(g.size());
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    (*th)[i] = theta_profile(alpha * std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  });
  m.theta = th;
  return m;
}

/// In-place: multiply a spectrum by the transform of phi_eps.
inline void apply_phi_hat(const MollifierSpec& m, ComplexArray& s) {
  const RealArray& ph = *m.phi_hat;
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= ph[i];
}

/// phi_eps * f, without the cutoff.
inline ScalarField convolve_phi(const ScalarField& f, const MollifierSpec& m) {
  require_same_grid(f.grid, m.grid, "convolve_phi");
  ComplexArray spec(f.grid.spectral_size()), scratch;
  f.grid.forward(f.data.data(), spec.data());
  apply_phi_hat(m, spec);
  ScalarField out(f.grid);
  inverse_into(f.grid, spec, scratch, out.data);
  return out;
}

inline ScalarField mollify(const ScalarField& f, const MollifierSpec& m) {
  require_same_grid(f.grid, m.grid, "mollify");
  const Grid& g = f.grid;
  RealArray tmp(g.size());
  const RealArray& th = *m.theta;
  for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = th[i] * f[i];
  ComplexArray spec(g.spectral_size()), scratch;
  g.forward(tmp.data(), spec.data());
  apply_phi_hat(m, spec);
  ScalarField out(g);
  inverse_into(g, spec, scratch, out.data);
  return out;
}

inline VectorField mollify(const VectorField& u, const MollifierSpec& m) {
  require_same_grid(u.grid, m.grid, "mollify");
  const Grid& g = u.grid;
  VectorField out(g);
  RealArray tmp(g.size());
  const RealArray& th = *m.theta;
  ComplexArray spec(g.spectral_size()), scratch;
  for (int j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = th[i] * u.c[j][i];
    g.forward(tmp.data(), spec.data());
    apply_phi_hat(m, spec);
    inverse_into(g, spec, scratch, out.c[j]);
  }
  return out;
}

/// Right-hand side of the sup bound for mollify(u):
/// ||phi||_{p'} eps^{-3/p} (1 + 2/alpha)^{gamma/p} ||u||_{L^p(Phi_gamma)}.
inline double mollifier_sup_bound(const MollifierSpec& m, double p, double gamma,
                                  double u_norm) {
  const double q = p / (p - 1.0);
  return bump_lq_norm(q) * std::pow(m.epsilon, -3.0 / p) *
         std::pow(1.0 + 2.0 / m.alpha, gamma / p) * u_norm;
}

}  // namespace wns
