#pragma once

// Periodic box [-L/2, L/2)^3 sampled on N^3 nodes, plus the FFTW plans used by
// every spectral operator. Real arrays are stored x-fastest:
//   index = ix + N * (iy + N * iz)
// and the r2c half spectrum is laid out as
//   index = kx + (N/2 + 1) * (ky + N * kz),   0 <= kx <= N/2.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace wns {

template <typename T>
class FftwAllocator {
 public:
  using value_type = T;

  FftwAllocator() = default;
  template <class U>
  constexpr FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using Complex = std::complex<double>;
using RealArray = std::vector<double, FftwAllocator<double>>;
using ComplexArray = std::vector<Complex, FftwAllocator<Complex>>;

namespace detail {

// The FFTW planner is not thread-safe; plan execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct GridTables {
  int n = 0;
  double length = 0.0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<int> mode;          // signed mode number per full-axis index
  std::vector<double> k;          // 2 pi m / L
  std::vector<double> k_eff;      // same, Nyquist zeroed (first-order symbols)

  GridTables(int n_, double length_) : n(n_), length(length_) {
    mode.resize(n);
    k.resize(n);
    k_eff.resize(n);
    for (int i = 0; i < n; ++i) {
      const int m = (i <= n / 2) ? i : i - n;
      mode[i] = (i == n / 2) ? -n / 2 : m;
      k[i] = 2.0 * std::numbers::pi * mode[i] / length;
      k_eff[i] = (i == n / 2) ? 0.0 : k[i];
    }
    const std::size_t real_size = static_cast<std::size_t>(n) * n * n;
    const std::size_t spec_size = static_cast<std::size_t>(n) * n * (n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* in = static_cast<double*>(fftw_malloc(real_size * sizeof(double)));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(spec_size * sizeof(fftw_complex)));
    // FFTW_ESTIMATE keeps the chosen algorithm, and thus the bits, independent
    // of machine timing.
    forward = fftw_plan_dft_r2c_3d(n, n, n, in, out, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_3d(n, n, n, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (forward == nullptr || backward == nullptr) {
      throw std::runtime_error("FFTW plan creation failed for N=" + std::to_string(n));
    }
  }

  GridTables(const GridTables&) = delete;
  GridTables& operator=(const GridTables&) = delete;

  ~GridTables() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

}  // namespace detail

/// One spectral mode of the half spectrum, as visited by Grid::for_each_mode.
struct Mode {
  std::size_t index;
  std::array<double, 3> k;      // true wavevector
  std::array<double, 3> k_eff;  // wavevector with Nyquist components zeroed
  bool nyquist;                 // any component sits on the Nyquist plane
  double weight;                // multiplicity in the full spectrum (1 or 2)

  double k2() const { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }
  double k_eff2() const {
    return k_eff[0] * k_eff[0] + k_eff[1] * k_eff[1] + k_eff[2] * k_eff[2];
  }
};

class Grid {
 public:
  Grid(int n, double box_length) {
    if (n < 8 || n % 2 != 0) {
      throw std::invalid_argument("grid: N must be even and >= 8, got " + std::to_string(n));
    }
    if (!(box_length > 0.0) || !std::isfinite(box_length)) {
      throw std::invalid_argument("grid: box length must be positive and finite");
    }
    tables_ = std::make_shared<const detail::GridTables>(n, box_length);
  }

  int n() const { return tables_->n; }
  double length() const { return tables_->length; }
  double spacing() const { return tables_->length / tables_->n; }
  double cell_volume() const {
    const double h = spacing();
    return h * h * h;
  }
  int half() const { return n() / 2 + 1; }
  std::size_t size() const {
    const std::size_t m = static_cast<std::size_t>(n());
    return m * m * m;
  }
  std::size_t spectral_size() const {
    const std::size_t m = static_cast<std::size_t>(n());
    return m * m * static_cast<std::size_t>(half());
  }

  double coord(int i) const { return -0.5 * length() + i * spacing(); }
  std::size_t index(int ix, int iy, int iz) const {
    const std::size_t m = static_cast<std::size_t>(n());
    return static_cast<std::size_t>(ix) + m * (static_cast<std::size_t>(iy) + m * iz);
  }
  std::array<double, 3> position(int ix, int iy, int iz) const {
    return {coord(ix), coord(iy), coord(iz)};
  }

  int mode_number(int i) const { return tables_->mode[i]; }
  double wavenumber(int i) const { return tables_->k[i]; }
  /// Largest retained |mode| under the 2/3 rule.
  int dealias_cutoff() const { return n() / 3; }

  /// Calls f(ix, iy, iz, idx, x) for every node, x-fastest.
  template <class F>
  void for_each_node(F&& f) const {
    const int m = n();
    std::size_t idx = 0;
    for (int iz = 0; iz < m; ++iz) {
      const double z = coord(iz);
      for (int iy = 0; iy < m; ++iy) {
        const double y = coord(iy);
        for (int ix = 0; ix < m; ++ix, ++idx) {
          f(ix, iy, iz, idx, std::array<double, 3>{coord(ix), y, z});
        }
      }
    }
  }

  /// Calls f(const Mode&) for every entry of the half spectrum.
  template <class F>
  void for_each_mode(F&& f) const {
    const int m = n();
    const int h = half();
    const auto& t = *tables_;
    Mode md{};
    std::size_t idx = 0;
    for (int kz = 0; kz < m; ++kz) {
      for (int ky = 0; ky < m; ++ky) {
        for (int kx = 0; kx < h; ++kx, ++idx) {
          md.index = idx;
          md.k = {2.0 * std::numbers::pi * kx / t.length, t.k[ky], t.k[kz]};
          if (kx == m / 2) md.k[0] = -md.k[0];
          md.k_eff = {kx == m / 2 ? 0.0 : md.k[0], t.k_eff[ky], t.k_eff[kz]};
          md.nyquist = (kx == m / 2) || (ky == m / 2) || (kz == m / 2);
          md.weight = (kx == 0 || kx == m / 2) ? 1.0 : 2.0;
          f(static_cast<const Mode&>(md));
        }
      }
    }
  }

  /// |mode number| along each axis for a half-spectrum index.
  std::array<int, 3> mode_of(std::size_t idx) const {
    const std::size_t h = static_cast<std::size_t>(half());
    const std::size_t m = static_cast<std::size_t>(n());
    const int kx = static_cast<int>(idx % h);
    const int ky = static_cast<int>((idx / h) % m);
    const int kz = static_cast<int>(idx / (h * m));
    return {kx, tables_->mode[ky], tables_->mode[kz]};
  }

  /// Unnormalized forward r2c transform. `in` is preserved.
  void forward(const double* in, Complex* out) const {
    fftw_execute_dft_r2c(tables_->forward, const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
  }
  /// Unnormalized backward c2r transform. Destroys `in`.
  void backward(Complex* in, double* out) const {
    fftw_execute_dft_c2r(tables_->backward, reinterpret_cast<fftw_complex*>(in), out);
  }

  bool operator==(const Grid& o) const { return n() == o.n() && length() == o.length(); }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  std::shared_ptr<const detail::GridTables> tables_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (a != b) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

}  // namespace wns
