#pragma once

// Pseudo-spectral operators on the periodic box.
//
// Conventions:
//  * First-order symbols (derivative, divergence, Riesz) use the wavevector
//    with Nyquist components zeroed; a sampled Nyquist cosine has zero
//    derivative at every node.
//  * The Leray projection and the Riesz transforms discard modes that touch a
//    Nyquist plane, and treat the mean mode as identity (Leray) or zero
//    (Riesz).
//  * The heat semigroup uses the exact symbol exp(-|k|^2 t) on every mode.
//  * Products of fields are truncated to |m_i| <= N/3 (2/3 rule) before any
//    derivative is taken.

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "wns/field.hpp"

namespace wns {

// ---- transforms -------------------------------------------------------------

inline Spectrum forward(const ScalarField& f) {
  Spectrum s(f.grid);
  f.grid.forward(f.data.data(), s.data.data());
  return s;
}

inline void forward_into(const Grid& g, const RealArray& in, ComplexArray& out) {
  out.resize(g.spectral_size());
  g.forward(in.data(), out.data());
}

/// Normalized inverse transform; `scratch` is overwritten.
inline void inverse_into(const Grid& g, const ComplexArray& in, ComplexArray& scratch,
                         RealArray& out) {
  scratch = in;
  out.resize(g.size());
  g.backward(scratch.data(), out.data());
  const double scale = 1.0 / static_cast<double>(g.size());
  for (double& v : out) v *= scale;
}

inline ScalarField inverse(const Spectrum& s) {
  ScalarField f(s.grid);
  ComplexArray scratch;
  inverse_into(s.grid, s.data, scratch, f.data);
  return f;
}

inline VectorSpectrum forward(const VectorField& u) {
  VectorSpectrum s(u.grid);
  for (int j = 0; j < 3; ++j) u.grid.forward(u.c[j].data(), s.c[j].data());
  return s;
}

inline VectorField inverse(const VectorSpectrum& s) {
  VectorField u(s.grid);
  ComplexArray scratch;
  for (int j = 0; j < 3; ++j) inverse_into(s.grid, s.c[j], scratch, u.c[j]);
  return u;
}

// ---- spectral multipliers (in place) ---------------------------------------

inline void dealias(const Grid& g, ComplexArray& s) {
  const int cut = g.dealias_cutoff();
  const std::size_t h = static_cast<std::size_t>(g.half());
  const std::size_t n = static_cast<std::size_t>(g.n());
  std::size_t idx = 0;
  for (std::size_t kz = 0; kz < n; ++kz) {
    const int mz = g.mode_number(static_cast<int>(kz));
    for (std::size_t ky = 0; ky < n; ++ky) {
      const int my = g.mode_number(static_cast<int>(ky));
      for (std::size_t kx = 0; kx < h; ++kx, ++idx) {
        if (static_cast<int>(kx) > cut || std::abs(my) > cut || std::abs(mz) > cut) {
          s[idx] = Complex(0.0, 0.0);
        }
      }
    }
  }
}

inline void dealias(Spectrum& s) { dealias(s.grid, s.data); }
inline void dealias(VectorSpectrum& s) {
  for (auto& c : s.c) dealias(s.grid, c);
}

inline void heat_in_place(VectorSpectrum& s, double t) {
  if (t < 0.0) throw std::invalid_argument("heat semigroup: negative time");
  s.grid.for_each_mode([&](const Mode& m) {
    const double f = std::exp(-m.k2() * t);
    for (auto& c : s.c) c[m.index] *= f;
  });
}

inline void leray_in_place(VectorSpectrum& s) {
  s.grid.for_each_mode([&](const Mode& m) {
    const std::size_t i = m.index;
    if (m.nyquist) {
      for (auto& c : s.c) c[i] = Complex(0.0, 0.0);
      return;
    }
    const double k2 = m.k2();
    if (k2 == 0.0) return;
    const Complex kdotu = m.k[0] * s.c[0][i] + m.k[1] * s.c[1][i] + m.k[2] * s.c[2][i];
    for (int j = 0; j < 3; ++j) s.c[j][i] -= m.k[j] * kdotu / k2;
  });
}

// ---- public operators -------------------------------------------------------

/// Spectral partial derivative along axis 0, 1 or 2.
inline ScalarField derivative(const ScalarField& f, int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("derivative: axis must be 0, 1 or 2");
  Spectrum s = forward(f);
  f.grid.for_each_mode([&](const Mode& m) { s.data[m.index] *= Complex(0.0, m.k_eff[axis]); });
  return inverse(s);
}

inline ScalarField divergence_field(const VectorField& u) {
  VectorSpectrum s = forward(u);
  Spectrum d(u.grid);
  u.grid.for_each_mode([&](const Mode& m) {
    const std::size_t i = m.index;
    d.data[i] = Complex(0.0, 1.0) *
                (m.k_eff[0] * s.c[0][i] + m.k_eff[1] * s.c[1][i] + m.k_eff[2] * s.c[2][i]);
  });
  return inverse(d);
}

inline VectorField gradient(const ScalarField& f) {
  const Spectrum s = forward(f);
  VectorSpectrum g(f.grid);
  f.grid.for_each_mode([&](const Mode& m) {
    for (int j = 0; j < 3; ++j) g.c[j][m.index] = Complex(0.0, m.k_eff[j]) * s.data[m.index];
  });
  return inverse(g);
}

/// (grad (x) u)_{ij} = d_i u_j.
inline TensorField gradient_tensor(const VectorField& u) {
  const VectorSpectrum s = forward(u);
  TensorField t(u.grid);
  ComplexArray buf(u.grid.spectral_size());
  ComplexArray scratch;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      u.grid.for_each_mode(
          [&](const Mode& m) { buf[m.index] = Complex(0.0, m.k_eff[i]) * s.c[j][m.index]; });
      inverse_into(u.grid, buf, scratch, t.at(i, j));
    }
  }
  return t;
}

inline ScalarField laplacian(const ScalarField& f) {
  Spectrum s = forward(f);
  f.grid.for_each_mode([&](const Mode& m) { s.data[m.index] *= -m.k2(); });
  return inverse(s);
}

inline VectorField heat_semigroup(const VectorField& u, double t) {
  if (t < 0.0) throw std::invalid_argument("heat semigroup: negative time");
  if (t == 0.0) return u;
  VectorSpectrum s = forward(u);
  heat_in_place(s, t);
  return inverse(s);
}

inline ScalarField heat_semigroup(const ScalarField& f, double t) {
  if (t < 0.0) throw std::invalid_argument("heat semigroup: negative time");
  if (t == 0.0) return f;
  Spectrum s = forward(f);
  f.grid.for_each_mode([&](const Mode& m) { s.data[m.index] *= std::exp(-m.k2() * t); });
  return inverse(s);
}

inline VectorField leray_project(const VectorField& u) {
  VectorSpectrum s = forward(u);
  leray_in_place(s);
  return inverse(s);
}

/// Riesz transform, symbol i k_axis / |k|.
inline ScalarField riesz(const ScalarField& f, int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("riesz: axis must be 0, 1 or 2");
  Spectrum s = forward(f);
  f.grid.for_each_mode([&](const Mode& m) {
    const double k2 = m.k2();
    if (m.nyquist || k2 == 0.0) {
      s.data[m.index] = Complex(0.0, 0.0);
      return;
    }
    s.data[m.index] *= Complex(0.0, m.k[axis] / std::sqrt(k2));
  });
  return inverse(s);
}

/// Spectrum of (Div F)_j = sum_i d_i F_{ij}; F is truncated first when
/// `truncate_products` is set.
inline VectorSpectrum divergence_of_tensor_spectrum(const TensorField& F,
                                                    bool truncate_products = true) {
  const Grid& g = F.grid;
  VectorSpectrum out(g);
  ComplexArray buf(g.spectral_size());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      g.forward(F.at(i, j).data(), buf.data());
      if (truncate_products) dealias(g, buf);
      g.for_each_mode(
          [&](const Mode& m) { out.c[j][m.index] += Complex(0.0, m.k_eff[i]) * buf[m.index]; });
    }
  }
  return out;
}

inline VectorField divergence_of_tensor(const TensorField& F, bool truncate_products = true) {
  return inverse(divergence_of_tensor_spectrum(F, truncate_products));
}

/// e^{t Laplacian} P Div F.
inline VectorField oseen_apply(const TensorField& F, double t) {
  if (t < 0.0) throw std::invalid_argument("oseen_apply: negative time");
  VectorSpectrum s = divergence_of_tensor_spectrum(F);
  leray_in_place(s);
  heat_in_place(s, t);
  return inverse(s);
}

inline VectorField curl(const VectorField& u) {
  const VectorSpectrum s = forward(u);
  VectorSpectrum w(u.grid);
  u.grid.for_each_mode([&](const Mode& m) {
    const std::size_t i = m.index;
    const Complex I(0.0, 1.0);
    w.c[0][i] = I * (m.k_eff[1] * s.c[2][i] - m.k_eff[2] * s.c[1][i]);
    w.c[1][i] = I * (m.k_eff[2] * s.c[0][i] - m.k_eff[0] * s.c[2][i]);
    w.c[2][i] = I * (m.k_eff[0] * s.c[1][i] - m.k_eff[1] * s.c[0][i]);
  });
  return inverse(w);
}

// ---- unweighted box norms ---------------------------------------------------

inline double l2_norm(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data) s += v * v;
  return std::sqrt(s * f.grid.cell_volume());
}

inline double l2_norm(const VectorField& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u.magnitude2(i);
  return std::sqrt(s * u.grid.cell_volume());
}

/// Box L2 norm computed from a half spectrum (Parseval).
inline double l2_norm(const VectorSpectrum& s) {
  double acc = 0.0;
  s.grid.for_each_mode([&](const Mode& m) {
    for (const auto& c : s.c) acc += m.weight * std::norm(c[m.index]);
  });
  const double n3 = static_cast<double>(s.grid.size());
  return std::sqrt(acc * s.grid.cell_volume() / n3);
}

/// ||div u||_2 / ||u||_2 (0 for the zero field).
inline double divergence_residual(const VectorField& u) {
  const double nu = l2_norm(u);
  if (nu == 0.0) return 0.0;
  return l2_norm(divergence_field(u)) / nu;
}

}  // namespace wns
