#pragma once

// Weight family Phi_gamma(x) = (1 + |x|^2)^(-gamma/2) and the weighted norms
// built on it. Every integral is a midpoint sum over grid cells; the weight is
// sampled at box coordinates and never periodized.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wns/spectral.hpp"

namespace wns {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double weight_value(double gamma, const std::array<double, 3>& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  return std::pow(1.0 + r2, -0.5 * gamma);
}

/// Phi_gamma sampled at every node.
inline RealArray weight_samples(const Grid& g, double gamma) {
  RealArray w(g.size());
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    w[i] = weight_value(gamma, x);
  });
  return w;
}

enum class NormKind { lebesgue, sobolev };

inline const char* to_string(NormKind k) { return k == NormKind::lebesgue ? "lebesgue" : "sobolev"; }

struct NormReport {
  double value = 0.0;
  double p_or_s = 2.0;
  double gamma = 0.0;
  NormKind kind = NormKind::lebesgue;
};

namespace detail {

// |u|(x) is supplied as a callable so scalar, vector and tensor fields share
// one implementation. The sum is scaled by the sup to avoid overflow at large p.
template <class Mag>
double weighted_lp(const Grid& g, Mag&& mag, double p, double gamma) {
  if (!(p >= 1.0)) throw std::invalid_argument("weighted_lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    if (gamma != 0.0) throw std::invalid_argument("weighted_lp_norm: p = inf requires gamma = 0");
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, mag(i));
    return m;
  }
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, mag(i));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  if (gamma == 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(mag(i) / m, p);
  } else {
    g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
      const double a = mag(i);
      if (a != 0.0) s += std::pow(a / m, p) * weight_value(gamma, x);
    });
  }
  return m * std::pow(s * g.cell_volume(), 1.0 / p);
}

}  // namespace detail

inline NormReport weighted_lp_norm(const ScalarField& f, double p, double gamma) {
  const double v =
      detail::weighted_lp(f.grid, [&](std::size_t i) { return std::abs(f[i]); }, p, gamma);
  return {v, p, gamma, NormKind::lebesgue};
}

inline NormReport weighted_lp_norm(const VectorField& u, double p, double gamma) {
  const double v =
      detail::weighted_lp(u.grid, [&](std::size_t i) { return u.magnitude(i); }, p, gamma);
  return {v, p, gamma, NormKind::lebesgue};
}

inline NormReport weighted_lp_norm(const TensorField& t, double p, double gamma) {
  const double v =
      detail::weighted_lp(t.grid, [&](std::size_t i) { return t.magnitude(i); }, p, gamma);
  return {v, p, gamma, NormKind::lebesgue};
}

/// ||Phi^{gamma/2} u||_{H^s} with multiplier (1 + |k|^2)^{s/2}.
inline NormReport weighted_hs_norm(const VectorField& u, double s, double gamma) {
  if (std::abs(s) > 8.0) throw std::invalid_argument("weighted_hs_norm: |s| must be <= 8");
  const Grid& g = u.grid;
  const RealArray w = weight_samples(g, 0.5 * gamma);
  RealArray tmp(g.size());
  ComplexArray spec(g.spectral_size());
  double acc = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = w[i] * u.c[j][i];
    g.forward(tmp.data(), spec.data());
    g.for_each_mode([&](const Mode& m) {
      acc += m.weight * std::pow(1.0 + m.k2(), s) * std::norm(spec[m.index]);
    });
  }
  const double v = std::sqrt(acc * g.cell_volume() / static_cast<double>(g.size()));
  return {v, s, gamma, NormKind::sobolev};
}

inline NormReport weighted_hs_norm(const TensorField& t, double s, double gamma) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    VectorField row(t.grid);
    for (int j = 0; j < 3; ++j) row.c[j] = t.at(i, j);
    const double v = weighted_hs_norm(row, s, gamma).value;
    acc += v * v;
  }
  return {std::sqrt(acc), s, gamma, NormKind::sobolev};
}

/// Midpoint quadrature of the integral of f over the box.
inline double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data) s += v;
  return s * f.grid.cell_volume();
}

// ---- CSV ----------------------------------------------------------------------

inline void append_norm_csv(const std::filesystem::path& path, double time,
                            const NormReport& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.precision(17);
  if (fresh) out << "time,kind,p_or_s,gamma,value\n";
  out << time << ',' << to_string(r.kind) << ',' << r.p_or_s << ',' << r.gamma << ','
      << r.value << '\n';
}

// ---- kernel bound (convolution with (sqrt t + |z|)^-4) ----------------------

/// Cell-averaged kernel (sqrt(t) + |z|)^-4 at offset z; cells near the origin
/// are sub-sampled since the kernel varies on the scale sqrt(t) there.
inline double kernel_cell_average(double t, const std::array<double, 3>& z, double h) {
  const double st = std::sqrt(t);
  const double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
  auto k = [st](double rr) {
    const double d = st + rr;
    return 1.0 / (d * d * d * d);
  };
  if (r > 3.0 * h) return k(r);
  const int sub = 16;
  double s = 0.0;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b)
      for (int c = 0; c < sub; ++c) {
        const double dx = z[0] + h * ((a + 0.5) / sub - 0.5);
        const double dy = z[1] + h * ((b + 0.5) / sub - 0.5);
        const double dz = z[2] + h * ((c + 0.5) / sub - 0.5);
        s += k(std::sqrt(dx * dx + dy * dy + dz * dz));
      }
  return s / (sub * sub * sub);
}

/// g(x) = sum_y h^3 K_t(x - y) f(y), linear (non-periodic) convolution computed
/// with a zero-padded transform of twice the size.
inline ScalarField kernel_convolve(const ScalarField& f, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("kernel convolution: t must lie in (0, 1]");
  const Grid& g = f.grid;
  const int n = g.n();
  const int n2 = 2 * n;
  const double h = g.spacing();
  const Grid big(n2, 2.0 * g.length());
  RealArray fp(big.size(), 0.0), kp(big.size(), 0.0);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) fp[big.index(ix, iy, iz)] = f[g.index(ix, iy, iz)];
  auto offset = [n, n2](int i) { return i < n ? i : i - n2; };
  for (int iz = 0; iz < n2; ++iz)
    for (int iy = 0; iy < n2; ++iy)
      for (int ix = 0; ix < n2; ++ix) {
        if (ix == n || iy == n || iz == n) continue;
        const std::array<double, 3> z{offset(ix) * h, offset(iy) * h, offset(iz) * h};
        kp[big.index(ix, iy, iz)] = kernel_cell_average(t, z, h);
      }
  ComplexArray fs(big.spectral_size()), ks(big.spectral_size());
  big.forward(fp.data(), fs.data());
  big.forward(kp.data(), ks.data());
  for (std::size_t i = 0; i < fs.size(); ++i) fs[i] *= ks[i];
  RealArray gp(big.size());
  big.backward(fs.data(), gp.data());
  const double scale = g.cell_volume() / static_cast<double>(big.size());
  ScalarField out(g);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) out[g.index(ix, iy, iz)] = gp[big.index(ix, iy, iz)] * scale;
  return out;
}

/// Random nonnegative test density: a few Gaussian blobs centred in the inner
/// half of the box.
inline ScalarField random_blobs(const Grid& g, std::mt19937_64& rng, int blobs = 4) {
  const double q = 0.25 * g.length();
  std::uniform_real_distribution<double> centre(-q, q), width(0.5, 2.0), amp(0.1, 1.0);
  ScalarField f(g);
  for (int b = 0; b < blobs; ++b) {
    const std::array<double, 3> c{centre(rng), centre(rng), centre(rng)};
    const double w = width(rng), a = amp(rng);
    g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
      const double d2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) +
                        (x[2] - c[2]) * (x[2] - c[2]);
      f[i] += a * std::exp(-d2 / (2.0 * w * w));
    });
  }
  return f;
}

struct KernelBoundReport {
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

/// max over trials of sqrt(t) ||K_t * f||_{L^p(Phi_gamma)} / ||f||_{L^p(Phi_gamma)}.
inline KernelBoundReport kernel_bound_check(const Grid& g, double t, double p, double gamma,
                                            int trials, std::uint64_t seed) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("kernel_bound_check: t must lie in (0, 1]");
  if (gamma < 0.0 || gamma > 4.0) throw std::invalid_argument("kernel_bound_check: gamma must lie in [0, 4]");
  if (trials < 1) throw std::invalid_argument("kernel_bound_check: trials must be positive");
  std::mt19937_64 rng(seed);
  KernelBoundReport rep;
  for (int k = 0; k < trials; ++k) {
    const ScalarField f = random_blobs(g, rng);
    const double nf = weighted_lp_norm(f, p, gamma).value;
    double ratio = 0.0;
    if (nf > 0.0) {
      const ScalarField conv = kernel_convolve(f, t);
      ratio = std::sqrt(t) * weighted_lp_norm(conv, p, gamma).value / nf;
    }
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

}  // namespace wns
