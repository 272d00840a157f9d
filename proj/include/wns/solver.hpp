#pragma once

// Integrating-factor RK4 for
//   d_t u = Lap u - P Div( (phi_eps * (theta_alpha u)) (x) u ),
// with the diffusion applied exactly, plus the a posteriori Duhamel checks.
//
// With E(s) = exp(s Lap) and F(u) = -N(u, u), one step of size dt is
//   k1 = F(u)
//   k2 = F(E(dt/2) (u + dt/2 k1))
//   k3 = F(E(dt/2) u + dt/2 k2)
//   k4 = F(E(dt) u + dt E(dt/2) k3)
//   u+ = E(dt) u + dt/6 (E(dt) k1 + 2 E(dt/2) (k2 + k3) + k4).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wns/mollifier.hpp"
#include "wns/weighted.hpp"

namespace wns {

struct SolverConfig {
  Grid grid;
  MollifierSpec mollifier;
  double dt = 1e-3;
  double t_end = 0.1;
  int snapshot_stride = 1;
  bool dealias = true;
  bool nonlinear = true;
  /// When > 0, snapshots also record the star-norm components for this r.
  double star_r = 0.0;

  static SolverConfig make(const Grid& g, double epsilon, double alpha, double dt, double t_end,
                           int stride = 1) {
    return SolverConfig{g, make_mollifier(g, epsilon, alpha), dt, t_end, stride, true, true, 0.0};
  }

  /// 0.9 h^2 / 6.
  double stability_limit() const { return 0.9 * grid.spacing() * grid.spacing() / 6.0; }

  void validate() const {
    require_same_grid(grid, mollifier.grid, "solver config");
    if (!(dt > 0.0)) throw std::invalid_argument("solver: dt must be positive");
    if (dt > stability_limit()) {
      throw std::invalid_argument("solver: dt = " + std::to_string(dt) +
                                  " exceeds the stability limit " + std::to_string(stability_limit()));
    }
    if (!(t_end >= 0.0)) throw std::invalid_argument("solver: t_end must be nonnegative");
    if (snapshot_stride < 1) throw std::invalid_argument("solver: snapshot_stride must be >= 1");
  }
};

struct TimedNorm {
  double time;
  NormReport norm;
};

struct StarSample {
  double time;
  double lr;        // ||b||_r
  double grad;      // sqrt(t) ||grad (x) b||_r
  double sup;       // t^{3/(2r)} ||b||_inf
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorField> snapshots;
  std::vector<TimedNorm> diagnostics;
  std::vector<double> divergence;  // ||div u||_2 / ||u||_2 per snapshot
  std::vector<StarSample> star;
  double star_r = 0.0;
  bool nonlinear = true;
  bool blew_up = false;
  double last_valid_time = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double dt = 0.0;

  std::size_t size() const { return times.size(); }
};

// ---- nonlinear term -----------------------------------------------------------

namespace detail {

/// Reusable buffers for N(a, w) = P Div T(mollify(a) (x) w).
struct NonlinearWorkspace {
  explicit NonlinearWorkspace(const Grid& g)
      : tmp(g.size()), moll{RealArray(g.size()), RealArray(g.size()), RealArray(g.size())},
        spec(g.spectral_size()), scratch(g.spectral_size()) {}
  RealArray tmp;
  std::array<RealArray, 3> moll;
  ComplexArray spec;
  ComplexArray scratch;
};

inline void mollify_into(const VectorField& a, const MollifierSpec& m, NonlinearWorkspace& ws) {
  const Grid& g = a.grid;
  const RealArray& th = *m.theta;
  for (int j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < g.size(); ++i) ws.tmp[i] = th[i] * a.c[j][i];
    g.forward(ws.tmp.data(), ws.spec.data());
    apply_phi_hat(m, ws.spec);
    inverse_into(g, ws.spec, ws.scratch, ws.moll[j]);
  }
}

/// Adds s * P Div T(ma (x) w) into `out`, where ma is the mollified field
/// held in ws.moll.
inline void accumulate_div(const VectorField& w, bool dealias_products, NonlinearWorkspace& ws,
                           VectorSpectrum& out) {
  const Grid& g = w.grid;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const RealArray& a = ws.moll[i];
      const RealArray& b = w.c[j];
      for (std::size_t n = 0; n < g.size(); ++n) ws.tmp[n] = a[n] * b[n];
      g.forward(ws.tmp.data(), ws.spec.data());
      if (dealias_products) dealias(g, ws.spec);
      ComplexArray& dst = out.c[j];
      g.for_each_mode(
          [&](const Mode& md) { dst[md.index] += Complex(0.0, md.k_eff[i]) * ws.spec[md.index]; });
    }
  }
}

}  // namespace detail

/// Spectrum of P Div T(mollify(v) (x) w).
inline VectorSpectrum nonlinear_spectrum(const VectorField& v, const VectorField& w,
                                         const MollifierSpec& m, bool dealias_products = true) {
  require_same_grid(v.grid, w.grid, "nonlinear_term");
  detail::NonlinearWorkspace ws(v.grid);
  detail::mollify_into(v, m, ws);
  VectorSpectrum out(v.grid);
  detail::accumulate_div(w, dealias_products, ws, out);
  leray_in_place(out);
  return out;
}

inline VectorField nonlinear_term(const VectorField& v, const VectorField& w,
                                  const MollifierSpec& m, bool dealias_products = true) {
  return inverse(nonlinear_spectrum(v, w, m, dealias_products));
}

// ---- time stepper ------------------------------------------------------------

class LawsonRK4 {
 public:
  LawsonRK4(const SolverConfig& cfg, double dt)
      : cfg_(cfg), dt_(dt), ws_(cfg.grid), field_(cfg.grid), e_half_(cfg.grid.spectral_size()),
        e_full_(cfg.grid.spectral_size()) {
    cfg.grid.for_each_mode([&](const Mode& m) {
      e_half_[m.index] = std::exp(-m.k2() * 0.5 * dt);
      e_full_[m.index] = std::exp(-m.k2() * dt);
    });
  }

  /// F(u) = -N(u, u) in spectral form.
  void rhs(const VectorSpectrum& uh, VectorSpectrum& out) {
    for (auto& c : out.c) std::fill(c.begin(), c.end(), Complex(0.0, 0.0));
    if (!cfg_.nonlinear) return;
    const Grid& g = cfg_.grid;
    for (int j = 0; j < 3; ++j) inverse_into(g, uh.c[j], ws_.scratch, field_.c[j]);
    detail::mollify_into(field_, cfg_.mollifier, ws_);
    detail::accumulate_div(field_, cfg_.dealias, ws_, out);
    leray_in_place(out);
    for (auto& c : out.c)
      for (auto& z : c) z = -z;
  }

  void step(VectorSpectrum& u) {
    const Grid& g = cfg_.grid;
    const std::size_t ns = g.spectral_size();
    VectorSpectrum k1(g), k2(g), k3(g), k4(g), tmp(g);
    const double dt = dt_;
    rhs(u, k1);
    if (!cfg_.nonlinear) {
      for (int j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < ns; ++i) u.c[j][i] *= e_full_[i];
      return;
    }
    for (int j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < ns; ++i)
        tmp.c[j][i] = e_half_[i] * (u.c[j][i] + 0.5 * dt * k1.c[j][i]);
    rhs(tmp, k2);
    for (int j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < ns; ++i)
        tmp.c[j][i] = e_half_[i] * u.c[j][i] + 0.5 * dt * k2.c[j][i];
    rhs(tmp, k3);
    for (int j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < ns; ++i)
        tmp.c[j][i] = e_full_[i] * u.c[j][i] + dt * e_half_[i] * k3.c[j][i];
    rhs(tmp, k4);
    for (int j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < ns; ++i) {
        u.c[j][i] = e_full_[i] * u.c[j][i] +
                    dt / 6.0 *
                        (e_full_[i] * k1.c[j][i] + 2.0 * e_half_[i] * (k2.c[j][i] + k3.c[j][i]) +
                         k4.c[j][i]);
      }
  }

 private:
  const SolverConfig& cfg_;
  double dt_;
  detail::NonlinearWorkspace ws_;
  VectorField field_;
  RealArray e_half_, e_full_;
};

/// One step of size dt from u (physical in, physical out).
inline VectorField step(const VectorField& u, const SolverConfig& cfg, double dt) {
  SolverConfig c = cfg;
  c.dt = dt;
  c.validate();
  VectorSpectrum uh = forward(u);
  LawsonRK4 rk(c, dt);
  rk.step(uh);
  return inverse(uh);
}

/// ||one step of dt - two steps of dt/2||_{L^2(Phi_4)}.
inline double step_error_estimate(const VectorField& u, const SolverConfig& cfg) {
  const VectorField a = step(u, cfg, cfg.dt);
  const VectorField b = step(step(u, cfg, 0.5 * cfg.dt), cfg, 0.5 * cfg.dt);
  return weighted_lp_norm(a - b, 2.0, 4.0).value;
}

namespace detail {

inline bool spectrum_finite(const VectorSpectrum& s) {
  for (const auto& c : s.c)
    for (const auto& z : c)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

inline void record_snapshot(Trajectory& tr, double t, const VectorField& u) {
  tr.times.push_back(t);
  tr.snapshots.push_back(u);
  tr.diagnostics.push_back({t, weighted_lp_norm(u, 2.0, 0.0)});
  tr.diagnostics.push_back({t, weighted_lp_norm(u, 2.0, 2.0)});
  tr.diagnostics.push_back({t, weighted_lp_norm(u, 2.0, 3.5)});
  tr.diagnostics.push_back({t, weighted_lp_norm(u, 2.0, 4.0)});
  tr.diagnostics.push_back({t, weighted_lp_norm(u, kInf, 0.0)});
  tr.divergence.push_back(divergence_residual(u));
  if (tr.star_r > 0.0) {
    const double r = tr.star_r;
    const double lr = weighted_lp_norm(u, r, 0.0).value;
    const double gr = weighted_lp_norm(gradient_tensor(u), r, 0.0).value;
    const double sup = weighted_lp_norm(u, kInf, 0.0).value;
    tr.star.push_back({t, lr, std::sqrt(t) * gr, std::pow(t, 1.5 / r) * sup});
  }
}

}  // namespace detail

/// Integrates from u0 without any divergence precondition.
inline Trajectory integrate(const VectorField& u0, const SolverConfig& cfg) {
  cfg.validate();
  require_same_grid(u0.grid, cfg.grid, "integrate");
  if (!all_finite(u0)) throw std::invalid_argument("integrate: u0 has non-finite entries");
  Trajectory tr;
  tr.star_r = cfg.star_r;
  tr.nonlinear = cfg.nonlinear;
  tr.epsilon = cfg.mollifier.epsilon;
  tr.alpha = cfg.mollifier.alpha;
  tr.dt = cfg.dt;

  long long nsteps = std::llround(cfg.t_end / cfg.dt);
  double last_dt = cfg.dt;
  if (std::abs(static_cast<double>(nsteps) * cfg.dt - cfg.t_end) > 1e-9 * std::max(cfg.t_end, cfg.dt)) {
    nsteps = static_cast<long long>(std::ceil(cfg.t_end / cfg.dt));
    last_dt = cfg.t_end - static_cast<double>(nsteps - 1) * cfg.dt;
  }
  VectorSpectrum uh = forward(u0);
  const double initial = l2_norm(uh);
  detail::record_snapshot(tr, 0.0, u0);
  LawsonRK4 rk(cfg, cfg.dt);
  std::optional<LawsonRK4> rk_last;
  if (last_dt != cfg.dt) rk_last.emplace(cfg, last_dt);
  for (long long s = 1; s <= nsteps; ++s) {
    const bool last = (s == nsteps);
    if (last && rk_last) {
      rk_last->step(uh);
    } else {
      rk.step(uh);
    }
    const double t = last ? cfg.t_end : static_cast<double>(s) * cfg.dt;
    const double norm = l2_norm(uh);
    if (!detail::spectrum_finite(uh) || !std::isfinite(norm) ||
        (initial > 0.0 && norm > 1e8 * initial)) {
      tr.blew_up = true;
      return tr;
    }
    tr.last_valid_time = t;
    if (s % cfg.snapshot_stride == 0 || last) detail::record_snapshot(tr, t, inverse(uh));
  }
  return tr;
}

inline Trajectory solve_mollified(const VectorField& u0, const SolverConfig& cfg) {
  const double nu = l2_norm(u0);
  if (nu > 0.0 && divergence_residual(u0) > 1e-8) {
    throw std::invalid_argument("solve_mollified: u0 is not divergence-free");
  }
  return integrate(u0, cfg);
}

/// Same machinery for the small L^r part; records star-norm components for r.
inline Trajectory solve_b(const VectorField& b0, const SolverConfig& cfg, double r) {
  if (!(r > 3.0)) throw std::invalid_argument("solve_b: r must exceed 3");
  SolverConfig c = cfg;
  c.star_r = r;
  return solve_mollified(b0, c);
}

// ---- Duhamel residuals -------------------------------------------------------

struct DuhamelReport {
  double relative = 0.0;                 // max_t ||R|| / max_t ||u||
  std::vector<double> residual_norms;    // ||R(t_n)||_{L^2(Phi_gamma)}
  std::vector<double> field_norms;       // ||u(t_n)||_{L^2(Phi_gamma)}
};

/// R(t_n) = u(t_n) - E(t_n) u(0) + I_n with the recursive trapezoid
///   I_n = E(ds) I_{n-1} + ds/2 (E(ds) N_{n-1} + N_n),
/// where N_n is the spectrum of the integrand at t_n.
inline DuhamelReport duhamel_series(
    const std::vector<double>& times, const std::vector<VectorField>& fields,
    const std::function<VectorSpectrum(std::size_t)>& integrand, double gamma) {
  DuhamelReport rep;
  if (times.empty()) return rep;
  const Grid& g = fields.front().grid;
  const VectorSpectrum f0 = forward(fields.front());
  VectorSpectrum acc(g);
  VectorSpectrum prev = integrand(0);
  double max_r = 0.0, max_u = 0.0;
  for (std::size_t n = 0; n < times.size(); ++n) {
    if (n > 0) {
      const double ds = times[n] - times[n - 1];
      if (!(ds > 0.0)) throw std::invalid_argument("duhamel: times must be increasing");
      VectorSpectrum cur = integrand(n);
      g.for_each_mode([&](const Mode& m) {
        const double e = std::exp(-m.k2() * ds);
        for (int j = 0; j < 3; ++j) {
          acc.c[j][m.index] = e * acc.c[j][m.index] +
                              0.5 * ds * (e * prev.c[j][m.index] + cur.c[j][m.index]);
        }
      });
      prev = std::move(cur);
    }
    VectorSpectrum r = forward(fields[n]);
    const double t = times[n] - times.front();
    g.for_each_mode([&](const Mode& m) {
      const double e = std::exp(-m.k2() * t);
      for (int j = 0; j < 3; ++j)
        r.c[j][m.index] += -e * f0.c[j][m.index] + acc.c[j][m.index];
    });
    const double rn = weighted_lp_norm(inverse(r), 2.0, gamma).value;
    const double un = weighted_lp_norm(fields[n], 2.0, gamma).value;
    rep.residual_norms.push_back(rn);
    rep.field_norms.push_back(un);
    max_r = std::max(max_r, rn);
    max_u = std::max(max_u, un);
  }
  rep.relative = max_u > 0.0 ? max_r / max_u : 0.0;
  return rep;
}

inline DuhamelReport duhamel_report(const Trajectory& tr, const MollifierSpec& m, double gamma = 4.0,
                                    std::size_t stride = 1) {
  std::vector<double> times;
  std::vector<VectorField> fields;
  for (std::size_t n = 0; n < tr.size(); n += stride) {
    times.push_back(tr.times[n]);
    fields.push_back(tr.snapshots[n]);
  }
  const bool nl = tr.nonlinear;
  return duhamel_series(
      times, fields,
      [&](std::size_t n) {
        if (!nl) return VectorSpectrum(m.grid);
        return nonlinear_spectrum(fields[n], fields[n], m);
      },
      gamma);
}

/// Relative Duhamel residual in L^2(Phi_gamma); the trajectory must start at u0.
inline double duhamel_residual(const Trajectory& tr, const VectorField& u0, const MollifierSpec& m,
                               double gamma = 4.0) {
  if (tr.size() == 0) return 0.0;
  if (max_abs_difference(tr.snapshots.front(), u0) != 0.0) {
    throw std::invalid_argument("duhamel_residual: trajectory does not start at u0");
  }
  return duhamel_report(tr, m, gamma).relative;
}

/// Richardson estimate of the trapezoid error in duhamel_residual: the
/// residual with every other snapshot minus the full one, divided by 3.
inline double duhamel_quadrature_error_estimate(const Trajectory& tr, const MollifierSpec& m,
                                                double gamma = 4.0) {
  if (tr.size() < 3) return 0.0;
  const DuhamelReport fine = duhamel_report(tr, m, gamma, 1);
  const DuhamelReport coarse = duhamel_report(tr, m, gamma, 2);
  double max_u = 0.0, est = 0.0;
  for (double v : fine.field_norms) max_u = std::max(max_u, v);
  for (std::size_t k = 0; k < coarse.residual_norms.size(); ++k) {
    est = std::max(est, std::abs(coarse.residual_norms[k] - fine.residual_norms[2 * k]) / 3.0);
  }
  return max_u > 0.0 ? est / max_u : 0.0;
}

inline void require_same_axis(const Trajectory& a, const Trajectory& b, const char* where) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(where) + ": time axes differ");
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (std::abs(a.times[n] - b.times[n]) > 1e-12 * std::max(1.0, std::abs(a.times[n]))) {
      throw std::invalid_argument(std::string(where) + ": time axes differ");
    }
  }
  if (a.size() > 0) require_same_grid(a.snapshots[0].grid, b.snapshots[0].grid, where);
}

/// v = u - b snapshotwise, with the time axis and flags of u.
inline Trajectory difference_trajectory(const Trajectory& u, const Trajectory& b) {
  require_same_axis(u, b, "difference_trajectory");
  Trajectory v;
  v.nonlinear = u.nonlinear;
  v.epsilon = u.epsilon;
  v.alpha = u.alpha;
  v.dt = u.dt;
  v.blew_up = u.blew_up || b.blew_up;
  v.last_valid_time = std::min(u.last_valid_time, b.last_valid_time);
  for (std::size_t n = 0; n < u.size(); ++n) {
    v.times.push_back(u.times[n]);
    v.snapshots.push_back(u.snapshots[n] - b.snapshots[n]);
  }
  return v;
}

/// Duhamel residual of v = u - b against
///   v = E(t) v0 - B(b, v) - B(v, b) - B(v, v), in L^2(Phi_gamma).
inline double v_residual(const Trajectory& u_traj, const Trajectory& b_traj, const MollifierSpec& m,
                         double gamma = 2.0) {
  const Trajectory v = difference_trajectory(u_traj, b_traj);
  const bool nl = u_traj.nonlinear;
  return duhamel_series(
             v.times, v.snapshots,
             [&](std::size_t n) {
               VectorSpectrum s(m.grid);
               if (!nl) return s;
               const VectorField& vv = v.snapshots[n];
               const VectorField& bb = b_traj.snapshots[n];
               s = nonlinear_spectrum(bb, vv, m);
               const VectorSpectrum s2 = nonlinear_spectrum(vv, bb, m);
               const VectorSpectrum s3 = nonlinear_spectrum(vv, vv, m);
               for (int j = 0; j < 3; ++j)
                 for (std::size_t i = 0; i < s.c[j].size(); ++i) s.c[j][i] += s2.c[j][i] + s3.c[j][i];
               return s;
             },
             gamma)
      .relative;
}

}  // namespace wns
