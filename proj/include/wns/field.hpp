#pragma once

// Real scalar, vector and tensor fields sampled on a Grid, and their half
// spectra. All containers are plain values; arithmetic helpers allocate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "wns/grid.hpp"

namespace wns {

struct ScalarField {
  Grid grid;
  RealArray data;

  explicit ScalarField(const Grid& g) : grid(g), data(g.size(), 0.0) {}
  ScalarField(const Grid& g, RealArray d) : grid(g), data(std::move(d)) {
    if (data.size() != grid.size()) throw std::invalid_argument("scalar field: size mismatch");
  }

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

struct VectorField {
  Grid grid;
  std::array<RealArray, 3> c;

  explicit VectorField(const Grid& g)
      : grid(g), c{RealArray(g.size(), 0.0), RealArray(g.size(), 0.0), RealArray(g.size(), 0.0)} {}

  std::size_t size() const { return grid.size(); }

  double magnitude2(std::size_t i) const {
    return c[0][i] * c[0][i] + c[1][i] * c[1][i] + c[2][i] * c[2][i];
  }
  double magnitude(std::size_t i) const { return std::sqrt(magnitude2(i)); }

  ScalarField component(int j) const { return ScalarField(grid, c[j]); }
  void set_component(int j, const ScalarField& s) {
    require_same_grid(grid, s.grid, "set_component");
    c[j] = s.data;
  }
};

/// Row i, column j stored at 3 * i + j.
struct TensorField {
  Grid grid;
  std::array<RealArray, 9> c;

  explicit TensorField(const Grid& g) : grid(g) {
    for (auto& a : c) a.assign(g.size(), 0.0);
  }
  RealArray& at(int i, int j) { return c[3 * i + j]; }
  const RealArray& at(int i, int j) const { return c[3 * i + j]; }

  double magnitude2(std::size_t idx) const {
    double s = 0.0;
    for (const auto& a : c) s += a[idx] * a[idx];
    return s;
  }
  double magnitude(std::size_t idx) const { return std::sqrt(magnitude2(idx)); }
};

struct Spectrum {
  Grid grid;
  ComplexArray data;

  explicit Spectrum(const Grid& g) : grid(g), data(g.spectral_size(), Complex(0.0, 0.0)) {}
};

struct VectorSpectrum {
  Grid grid;
  std::array<ComplexArray, 3> c;

  explicit VectorSpectrum(const Grid& g) : grid(g) {
    for (auto& a : c) a.assign(g.spectral_size(), Complex(0.0, 0.0));
  }
};

// ---- elementwise helpers ---------------------------------------------------

inline VectorField operator+(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "vector add");
  VectorField r(a.grid);
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < a.size(); ++i) r.c[j][i] = a.c[j][i] + b.c[j][i];
  return r;
}

inline VectorField operator-(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "vector subtract");
  VectorField r(a.grid);
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < a.size(); ++i) r.c[j][i] = a.c[j][i] - b.c[j][i];
  return r;
}

inline VectorField operator*(double s, const VectorField& a) {
  VectorField r(a.grid);
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < a.size(); ++i) r.c[j][i] = s * a.c[j][i];
  return r;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "scalar subtract");
  ScalarField r(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "scalar add");
  ScalarField r(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline ScalarField operator*(double s, const ScalarField& a) {
  ScalarField r(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

/// a += s * b
inline void axpy(double s, const VectorField& b, VectorField& a) {
  require_same_grid(a.grid, b.grid, "axpy");
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < a.size(); ++i) a.c[j][i] += s * b.c[j][i];
}

inline bool all_finite(const VectorField& u) {
  for (const auto& a : u.c)
    for (double v : a)
      if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const ScalarField& u) {
  return std::all_of(u.data.begin(), u.data.end(), [](double v) { return std::isfinite(v); });
}

/// Pointwise |u|^2 as a scalar field.
inline ScalarField magnitude2_field(const VectorField& u) {
  ScalarField r(u.grid);
  for (std::size_t i = 0; i < u.size(); ++i) r[i] = u.magnitude2(i);
  return r;
}

/// Pointwise product s * u.
inline VectorField multiply(const ScalarField& s, const VectorField& u) {
  require_same_grid(s.grid, u.grid, "multiply");
  VectorField r(u.grid);
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < u.size(); ++i) r.c[j][i] = s[i] * u.c[j][i];
  return r;
}

/// Outer product a (x) b, entry (i, j) = a_i b_j.
inline TensorField outer(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "outer");
  TensorField t(a.grid);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      auto& dst = t.at(i, j);
      for (std::size_t n = 0; n < a.size(); ++n) dst[n] = a.c[i][n] * b.c[j][n];
    }
  return t;
}

/// Sup over nodes and components of |a - b|.
inline double max_abs_difference(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "max_abs_difference");
  double d = 0.0;
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.c[j][i] - b.c[j][i]));
  return d;
}

}  // namespace wns
