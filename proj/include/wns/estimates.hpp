#pragma once

// A priori quantities for the mollified flow: star norms of the small part,
// the weighted energy budget of v = u - b, existence-time bounds, constant
// calibration, and the parabolic rescaling u -> (1/l) u(t/l^2, x/l).

#include <algorithm>
#include <cmath>
#include <optional>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wns/calderon.hpp"
#include "wns/quadrature.hpp"
#include "wns/solver.hpp"

namespace wns {

// ---- star norms ----------------------------------------------------------------

struct StarNormReport {
  double sup_r = 0.0;
  double sup_grad = 0.0;
  double sup_inf = 0.0;
  double w1_grad_l1 = 0.0;
  double w1_dual_norm = 0.0;
  double eta = 0.0;
  bool flag_r = true;
  bool flag_grad = true;
  bool flag_inf = true;
  std::vector<StarSample> series;

  bool all_pass() const { return flag_r && flag_grad && flag_inf; }
  double bound_r() const { return 2.0 * eta; }
  double bound_grad() const { return 2.0 * w1_grad_l1 * eta; }
  double bound_inf() const { return 2.0 * w1_dual_norm * eta; }
};

inline StarSample star_sample(const VectorField& b, double t, double r) {
  const double lr = weighted_lp_norm(b, r, 0.0).value;
  const double gr = t > 0.0 ? weighted_lp_norm(gradient_tensor(b), r, 0.0).value : 0.0;
  const double sup = weighted_lp_norm(b, kInf, 0.0).value;
  return {t, lr, std::sqrt(t) * gr, std::pow(t, 1.5 / r) * sup};
}

/// Sups over snapshots with t <= t_max, compared against 2 eta,
/// 2 ||grad W_1||_1 eta and 2 ||W_1||_{r/(r-1)} eta.
inline StarNormReport star_norms(const Trajectory& b, double r, double eta,
                                 double t_max = kInf) {
  if (!(r > 3.0)) throw std::invalid_argument("star_norms: r must exceed 3");
  StarNormReport rep;
  rep.eta = eta;
  rep.w1_grad_l1 = heat_kernel_grad_l1();
  rep.w1_dual_norm = heat_kernel_lq_norm(r / (r - 1.0));
  for (std::size_t n = 0; n < b.size(); ++n) {
    if (b.times[n] > t_max * (1.0 + 1e-12)) break;
    const StarSample s = star_sample(b.snapshots[n], b.times[n], r);
    rep.series.push_back(s);
    rep.sup_r = std::max(rep.sup_r, s.lr);
    rep.sup_grad = std::max(rep.sup_grad, s.grad);
    rep.sup_inf = std::max(rep.sup_inf, s.sup);
  }
  rep.flag_r = rep.sup_r <= rep.bound_r();
  rep.flag_grad = rep.sup_grad <= rep.bound_grad();
  rep.flag_inf = rep.sup_inf <= rep.bound_inf();
  return rep;
}

// ---- pressure ------------------------------------------------------------------

/// q = sum_ij R_i R_j (a_i v_j); R_i R_j has symbol -k_i k_j / |k|^2.
inline ScalarField pressure_from_factors(const VectorField& a, const VectorField& v) {
  require_same_grid(a.grid, v.grid, "pressure");
  const Grid& g = v.grid;
  Spectrum q(g);
  RealArray tmp(g.size());
  ComplexArray spec(g.spectral_size());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (std::size_t n = 0; n < g.size(); ++n) tmp[n] = a.c[i][n] * v.c[j][n];
      g.forward(tmp.data(), spec.data());
      dealias(g, spec);
      g.for_each_mode([&](const Mode& md) {
        const double k2 = md.k2();
        if (md.nyquist || k2 == 0.0) return;
        q.data[md.index] += -md.k[i] * md.k[j] / k2 * spec[md.index];
      });
    }
  return inverse(q);
}

/// q with the mollified factor a = mollify(v).
inline ScalarField pressure_q(const VectorField& v, const MollifierSpec& m) {
  return pressure_from_factors(mollify(v, m), v);
}

// ---- energy budget -------------------------------------------------------------

struct EnergyBudget {
  std::vector<double> times;  // interior snapshot times
  std::array<std::vector<double>, 6> A;
  std::vector<double> lhs_rate;
  std::vector<double> grad_term;
  std::vector<double> residual;
  std::vector<double> bound_side;  // ||v||^2 (1 + eta^2 t^{-3/r})
  std::vector<double> all_times;
  std::vector<double> norm2;  // ||v||^2_{L^2(Phi_2)} at every snapshot
  double a1_constant = 0.0;   // max |A1| / ||v||^2

  double relative_residual() const {
    double r = 0.0, l = 0.0;
    for (double x : residual) r = std::max(r, std::abs(x));
    for (double x : lhs_rate) l = std::max(l, std::abs(x));
    return l > 0.0 ? r / l : (r > 0.0 ? kInf : 0.0);
  }
};

/// The six budget terms at one instant. With m = mollify(v) and the fields
/// vanishing near the box boundary:
///   A1 =   int |v|^2 Lap(Phi^2)
///   A2 = -2 int Phi^2 v . P Div(m (x) b)
///   A3 = -2 int Phi^2 v . P Div(mollify(b) (x) v)
///   A4 = -int Phi^2 div(|v|^2 m)     =  int |v|^2 m . grad Phi^2
///   A5 = -2 int Phi^2 div(q v)       = 2 int q v . grad Phi^2
///   A6 = -int Phi^2 |v|^2 phi_eps * (v . grad theta_alpha)
inline std::array<double, 6> budget_terms(const VectorField& v, const VectorField& b,
                                          const MollifierSpec& m, bool nonlinear) {
  const Grid& g = v.grid;
  const double dv = g.cell_volume();
  std::array<double, 6> A{};
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double lap = (2.0 * r2 - 6.0) / std::pow(1.0 + r2, 3);
    A[0] += v.magnitude2(i) * lap;
  });
  A[0] *= dv;
  if (!nonlinear) return A;

  const VectorField n_vb = nonlinear_term(v, b, m);
  const VectorField n_bv = nonlinear_term(b, v, m);
  const VectorField mv = mollify(v, m);
  const ScalarField q = pressure_q(v, m);
  ScalarField vgt(g);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const auto gt = m.grad_theta(x);
    vgt[i] = v.c[0][i] * gt[0] + v.c[1][i] * gt[1] + v.c[2][i] * gt[2];
  });
  const ScalarField div_m = convolve_phi(vgt, m);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double w = 1.0 / (1.0 + r2);
    const double gw = -2.0 * w * w;  // grad Phi^2 = gw * x
    const double v2 = v.magnitude2(i);
    double vn_vb = 0.0, vn_bv = 0.0, mdx = 0.0, vdx = 0.0;
    for (int j = 0; j < 3; ++j) {
      vn_vb += v.c[j][i] * n_vb.c[j][i];
      vn_bv += v.c[j][i] * n_bv.c[j][i];
      mdx += mv.c[j][i] * x[j];
      vdx += v.c[j][i] * x[j];
    }
    A[1] += -2.0 * w * vn_vb;
    A[2] += -2.0 * w * vn_bv;
    A[3] += v2 * gw * mdx;
    A[4] += 2.0 * q[i] * gw * vdx;
    A[5] += -w * v2 * div_m[i];
  });
  for (int k = 1; k < 6; ++k) A[k] *= dv;
  return A;
}

/// Second-order centred derivative on a possibly nonuniform axis.
inline double centred_derivative(double tm, double t0, double tp, double fm, double f0, double fp) {
  const double hm = t0 - tm, hp = tp - t0;
  return (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hm * hp * (hm + hp));
}

inline EnergyBudget energy_budget(const Trajectory& v_traj, const Trajectory& b_traj,
                                  const MollifierSpec& m, double eta = 0.0, double r = 6.0) {
  require_same_axis(v_traj, b_traj, "energy_budget");
  EnergyBudget eb;
  const std::size_t n = v_traj.size();
  std::vector<std::array<double, 6>> terms(n);
  std::vector<double> grad(n);
  for (std::size_t k = 0; k < n; ++k) {
    const VectorField& v = v_traj.snapshots[k];
    const double q = weighted_lp_norm(v, 2.0, 2.0).value;
    eb.all_times.push_back(v_traj.times[k]);
    eb.norm2.push_back(q * q);
    const double gn = weighted_lp_norm(gradient_tensor(v), 2.0, 2.0).value;
    grad[k] = 2.0 * gn * gn;
    terms[k] = budget_terms(v, b_traj.snapshots[k], m, v_traj.nonlinear);
    if (q > 0.0) eb.a1_constant = std::max(eb.a1_constant, std::abs(terms[k][0]) / (q * q));
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double t = v_traj.times[k];
    eb.times.push_back(t);
    const double rate = centred_derivative(v_traj.times[k - 1], t, v_traj.times[k + 1],
                                           eb.norm2[k - 1], eb.norm2[k], eb.norm2[k + 1]);
    eb.lhs_rate.push_back(rate);
    eb.grad_term.push_back(grad[k]);
    double sum = 0.0;
    for (int j = 0; j < 6; ++j) {
      eb.A[j].push_back(terms[k][j]);
      sum += terms[k][j];
    }
    eb.residual.push_back(rate + grad[k] - sum);
    eb.bound_side.push_back(eb.norm2[k] * (1.0 + eta * eta * std::pow(t, -3.0 / r)));
  }
  return eb;
}

// ---- existence bounds ----------------------------------------------------------

struct BoundInputs {
  double u0_norm = 1.0;  // ||u0||_{L^p(Phi_gamma)}
  double b0_norm = 0.0;  // ||b0||_r
  double v0_norm = 0.0;  // ||v0||_{L^2(Phi_2)}
  double epsilon = 1.0;
  double alpha = 1.0;
  double r = 6.0;
  double eta = 0.1;
  double C0 = 1.0, C1 = 1.0, C2 = 1.0;
};

struct ExistenceBounds {
  double C0 = 1.0, C1 = 1.0, C2 = 1.0;
  double T_eps_alpha = 0.0;
  double T_eta = 0.0;
  double T_eta_eps_alpha = 0.0;
  double T_global = 0.0;  // lower bound on T_{eps,alpha} from ||b0||_r and ||v0||
  double lambda_T = 0.0;  // 0 when not computed
  double alpha_T = 0.0;
};

inline double t_eps_alpha(double epsilon, double alpha, double u0_norm, double C0) {
  const double num = std::pow(epsilon, 3) * std::pow(alpha, 4);
  const double den = C0 * u0_norm * u0_norm * std::pow(2.0 + alpha, 4);
  if (den == 0.0) return 1.0;
  return std::min(1.0, num / den);
}

/// T with T^{1/2 - 3/(2r)} = 1 / (C1 eta).
inline double t_eta(double eta, double r, double C1) {
  return std::pow(C1 * eta, -2.0 * r / (r - 3.0));
}

/// eta_T = 1 / (C1 (C2 T)^{(r-3)/(2r)}).
inline double eta_for_horizon(double T, double r, double C1, double C2) {
  return 1.0 / (C1 * std::pow(C2 * T, (r - 3.0) / (2.0 * r)));
}

inline double v_window(double alpha, double v0_norm, double C2) {
  const double a6 = std::pow(std::max(1.0, alpha), 6);
  return 1.0 / (C2 * (1.0 + a6 * std::pow(v0_norm, 4)));
}

inline ExistenceBounds existence_bounds(const BoundInputs& in) {
  if (!(in.C0 > 0.0 && in.C1 > 0.0 && in.C2 > 0.0)) {
    throw std::invalid_argument("existence_bounds: constants must be positive");
  }
  if (!(in.r > 3.0)) throw std::invalid_argument("existence_bounds: r must exceed 3");
  ExistenceBounds eb;
  eb.C0 = in.C0;
  eb.C1 = in.C1;
  eb.C2 = in.C2;
  eb.T_eps_alpha = t_eps_alpha(in.epsilon, in.alpha, in.u0_norm, in.C0);
  eb.T_eta = t_eta(in.eta, in.r, in.C1);
  eb.T_eta_eps_alpha =
      std::min({eb.T_eps_alpha, eb.T_eta / in.C2, v_window(in.alpha, in.v0_norm, in.C2)});
  const double tb = in.b0_norm > 0.0 ? t_eta(in.b0_norm, in.r, in.C1) / in.C2 : kInf;
  eb.T_global = std::min(tb, v_window(in.alpha, in.v0_norm, in.C2));
  return eb;
}

// ---- calibration ---------------------------------------------------------------

struct FitResult {
  double constant = 0.0;
  double rms_log_residual = 0.0;
  std::vector<double> log_residuals;
};

class DegenerateSweepError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct HorizonSample {
  double epsilon = 1.0;
  double alpha = 1.0;
  double eta = 0.0;
  double u0_norm = 1.0;
  double v0_norm = 0.0;
  double horizon = 0.0;  // observed stable time
};

namespace detail {

inline std::size_t distinct(const std::vector<double>& xs) {
  std::set<double> s(xs.begin(), xs.end());
  return s.size();
}

/// Least squares in log space for horizon = form / C.
inline FitResult fit_inverse_constant(const std::vector<double>& form, const std::vector<double>& horizon) {
  FitResult fr;
  double s = 0.0;
  for (std::size_t i = 0; i < form.size(); ++i) {
    if (!(form[i] > 0.0) || !(horizon[i] > 0.0)) {
      throw std::invalid_argument("calibration: forms and horizons must be positive");
    }
    s += std::log(form[i]) - std::log(horizon[i]);
  }
  const double logc = s / static_cast<double>(form.size());
  fr.constant = std::exp(logc);
  double ss = 0.0;
  for (std::size_t i = 0; i < form.size(); ++i) {
    const double res = std::log(horizon[i]) - (std::log(form[i]) - logc);
    fr.log_residuals.push_back(res);
    ss += res * res;
  }
  fr.rms_log_residual = std::sqrt(ss / static_cast<double>(form.size()));
  return fr;
}

}  // namespace detail

/// horizon = eps^3 alpha^4 / (C0 ||u0||^2 (2 + alpha)^4).
inline FitResult fit_c0(const std::vector<HorizonSample>& s) {
  std::vector<double> eps, al, form, hz;
  for (const auto& x : s) {
    eps.push_back(x.epsilon);
    al.push_back(x.alpha);
    form.push_back(std::pow(x.epsilon, 3) * std::pow(x.alpha, 4) /
                   (x.u0_norm * x.u0_norm * std::pow(2.0 + x.alpha, 4)));
    hz.push_back(x.horizon);
  }
  if (s.size() < 3 || (detail::distinct(eps) < 3 && detail::distinct(al) < 3)) {
    throw DegenerateSweepError("fit_c0: need >= 3 runs with >= 3 distinct epsilon or alpha values");
  }
  return detail::fit_inverse_constant(form, hz);
}

/// horizon = (C1 eta)^{-2r/(r-3)}, fitted as C1^{-2r/(r-3)} = horizon / eta^{-2r/(r-3)}.
inline FitResult fit_c1(const std::vector<HorizonSample>& s, double r) {
  std::vector<double> etas, form, hz;
  const double e = -2.0 * r / (r - 3.0);
  for (const auto& x : s) {
    etas.push_back(x.eta);
    form.push_back(std::pow(x.eta, e));
    hz.push_back(x.horizon);
  }
  if (s.size() < 3 || detail::distinct(etas) < 3) {
    throw DegenerateSweepError("fit_c1: need >= 3 runs with >= 3 distinct eta values");
  }
  FitResult fr = detail::fit_inverse_constant(form, hz);
  fr.constant = std::pow(fr.constant, 1.0 / -e);
  return fr;
}

/// horizon = 1 / (C2 (1 + max(1, alpha)^6 ||v0||^4)).
inline FitResult fit_c2(const std::vector<HorizonSample>& s) {
  std::vector<double> vs, form, hz;
  for (const auto& x : s) {
    vs.push_back(x.v0_norm * std::pow(std::max(1.0, x.alpha), 1.5));
    form.push_back(v_window(x.alpha, x.v0_norm, 1.0));
    hz.push_back(x.horizon);
  }
  if (s.size() < 3 || detail::distinct(vs) < 3) {
    throw DegenerateSweepError("fit_c2: need >= 3 runs with >= 3 distinct ||v0|| max(1,alpha)^{3/2} values");
  }
  return detail::fit_inverse_constant(form, hz);
}

struct Calibration {
  std::optional<FitResult> c0, c1, c2;
};

/// Fits every constant the sweep supports; throws if none can be fitted.
inline Calibration calibrate_constants(const std::vector<HorizonSample>& s, double r) {
  Calibration c;
  try { c.c0 = fit_c0(s); } catch (const DegenerateSweepError&) {}
  try { c.c1 = fit_c1(s, r); } catch (const DegenerateSweepError&) {}
  try { c.c2 = fit_c2(s); } catch (const DegenerateSweepError&) {}
  if (!c.c0 && !c.c1 && !c.c2) throw DegenerateSweepError("calibrate_constants: degenerate sweep");
  return c;
}

/// C1 from one run: the first snapshot time t* at which a star flag fails (or
/// the final time) is taken as T_[eta], so C1 = 1 / (eta t*^{(r-3)/(2r)}).
inline double calibrate_c1_from_run(const StarNormReport& rep, double r) {
  if (rep.series.empty()) throw std::invalid_argument("calibrate_c1_from_run: empty series");
  double t_star = rep.series.back().time;
  for (const auto& s : rep.series) {
    if (s.lr > rep.bound_r() || s.grad > rep.bound_grad() || s.sup > rep.bound_inf()) {
      t_star = s.time;
      break;
    }
  }
  if (!(t_star > 0.0)) throw std::invalid_argument("calibrate_c1_from_run: flags fail at t = 0");
  return 1.0 / (rep.eta * std::pow(t_star, (r - 3.0) / (2.0 * r)));
}

/// Smallest C2 >= 1 for which sup ||v||_{L^2(Phi_2)} <= 2 ||v0|| holds on
/// [0, T_{eta,eps,alpha}(C2)] of the given run. `t_eps_alpha_obs` is the observed
/// stable horizon of u.
inline double calibrate_c2_from_run(const std::vector<double>& times, const std::vector<double>& v_norms,
                                    double t_eps_alpha_obs, double T_eta, double alpha) {
  if (times.empty() || times.size() != v_norms.size()) {
    throw std::invalid_argument("calibrate_c2_from_run: bad series");
  }
  const double v0 = v_norms.front();
  double t_v = kInf;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (v_norms[k] > 2.0 * v0) {
      t_v = times[k];
      break;
    }
  }
  if (std::isinf(t_v) || t_eps_alpha_obs < t_v) return 1.0;
  double t_prev = 0.0;
  for (double t : times)
    if (t < t_v) t_prev = t;
  // The window scales like 1/C2; shrink it until it ends at the last good snapshot.
  const double w1 = std::min(T_eta, v_window(alpha, v0, 1.0));
  if (!(t_prev > 0.0)) return kInf;
  return std::max(1.0, w1 / t_prev);
}

// ---- rescaling -----------------------------------------------------------------

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Row i holds the trigonometric-interpolation weights that evaluate a grid
/// function at y_i = coord(i) / lambda; rows for y outside the box are zero and
/// rows for y on a node are exact unit vectors.
inline std::vector<double> rescale_matrix(const Grid& g, double lambda, bool periodic = false) {
  const int n = g.n();
  const double L = g.length(), h = g.spacing();
  std::vector<double> M(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double y = g.coord(i) / lambda;
    if (periodic) y -= L * std::floor(y / L + 0.5);
    if (y < -0.5 * L || y >= 0.5 * L) continue;
    const double s = (y + 0.5 * L) / h;
    const double sr = std::round(s);
    if (std::abs(s - sr) < 1e-9) {
      M[static_cast<std::size_t>(i) * n + static_cast<int>(sr) % n] = 1.0;
      continue;
    }
    for (int j = 0; j < n; ++j) {
      const double d = y - g.coord(j);
      double w = 0.0;
      for (int mm = -n / 2 + 1; mm < n / 2; ++mm) w += std::cos(2.0 * std::numbers::pi * mm * d / L);
      w += std::cos(std::numbers::pi * n * d / L);
      M[static_cast<std::size_t>(i) * n + j] = w / n;
    }
  }
  return M;
}

inline void apply_axis(const Grid& g, const std::vector<double>& M, int axis, const RealArray& in,
                       RealArray& out) {
  const int n = g.n();
  out.assign(g.size(), 0.0);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const int i = axis == 0 ? ix : (axis == 1 ? iy : iz);
        double s = 0.0;
        const double* row = &M[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) {
          if (row[j] == 0.0) continue;
          const std::size_t src = axis == 0 ? g.index(j, iy, iz)
                                            : (axis == 1 ? g.index(ix, j, iz) : g.index(ix, iy, j));
          s += row[j] * in[src];
        }
        out[g.index(ix, iy, iz)] = s;
      }
}

}  // namespace detail

inline constexpr double kRescaleFaceTolerance = 1e-2;

/// u_lambda(x) = (1/lambda) u(x / lambda); points whose preimage leaves the box
/// are set to zero.
inline VectorField rescale_field(const VectorField& u, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("rescale_field: lambda must lie in (0, 1]");
  }
  if (lambda == 1.0) return u;
  const Grid& g = u.grid;
  // Zero extension beyond the box is only faithful if u vanishes on the faces.
  double face = 0.0, peak = 0.0;
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < g.size(); ++i) peak = std::max(peak, std::abs(u.c[j][i]));
  for (int a = 0; a < g.n(); ++a)
    for (int b = 0; b < g.n(); ++b)
      for (int j = 0; j < 3; ++j) {
        face = std::max({face, std::abs(u.c[j][g.index(0, a, b)]), std::abs(u.c[j][g.index(a, 0, b)]),
                         std::abs(u.c[j][g.index(a, b, 0)])});
      }
  if (face > kRescaleFaceTolerance * peak) {
    throw ResolutionError("rescale_field: field does not vanish on the box faces (support overflow)");
  }
  const std::vector<double> M = detail::rescale_matrix(g, lambda);
  VectorField out(g);
  RealArray a, b;
  for (int j = 0; j < 3; ++j) {
    detail::apply_axis(g, M, 0, u.c[j], a);
    detail::apply_axis(g, M, 1, a, b);
    detail::apply_axis(g, M, 2, b, a);
    for (std::size_t i = 0; i < g.size(); ++i) out.c[j][i] = a[i] / lambda;
  }
  return out;
}

/// u(x / lambda) / lambda for a box-periodic u (no zero extension, no face check).
inline VectorField rescale_field_periodic(const VectorField& u, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("rescale_field_periodic: lambda must lie in (0, 1]");
  }
  const Grid& g = u.grid;
  const std::vector<double> M = detail::rescale_matrix(g, lambda, true);
  VectorField out(g);
  RealArray a, b;
  for (int j = 0; j < 3; ++j) {
    detail::apply_axis(g, M, 0, u.c[j], a);
    detail::apply_axis(g, M, 1, a, b);
    detail::apply_axis(g, M, 2, b, a);
    for (std::size_t i = 0; i < g.size(); ++i) out.c[j][i] = a[i] / lambda;
  }
  return out;
}

struct LambdaSearch {
  double lambda_T = 0.0;
  double alpha_T = 0.0;
  std::vector<std::pair<double, double>> trace;  // (lambda, lambda^2 (1 + ||v_lambda||^4))
  bool trace_decreasing = true;
};

/// lambda = 2^{-j}, j = 1, 2, ..., until lambda^2 (1 + ||v_lambda||^4) < 1/(C2 T).
inline LambdaSearch choose_lambda(const VectorField& v0, double T, double C2) {
  if (!(T > 0.0) || !(C2 > 0.0)) throw std::invalid_argument("choose_lambda: T and C2 must be positive");
  if (!all_finite(v0)) throw std::invalid_argument("choose_lambda: v0 has non-finite entries");
  const double target = 1.0 / (C2 * T);
  LambdaSearch ls;
  for (int j = 1;; ++j) {
    const double lambda = std::ldexp(1.0, -j);
    if (v0.grid.n() * lambda < 8.0) {
      throw ResolutionError("choose_lambda: lambda = " + std::to_string(lambda) +
                            " is below the grid resolution before the inequality holds");
    }
    const double nv = weighted_lp_norm(rescale_field(v0, lambda), 2.0, 2.0).value;
    const double Q = lambda * lambda * (1.0 + std::pow(nv, 4));
    if (!ls.trace.empty() && !(Q < ls.trace.back().second)) ls.trace_decreasing = false;
    ls.trace.emplace_back(lambda, Q);
    if (Q < target) {
      ls.lambda_T = lambda;
      ls.alpha_T = 1.0 / lambda;
      return ls;
    }
  }
}

struct RescaleReport {
  double discrepancy = 0.0;
  std::vector<double> times;  // times of run (b)
  std::vector<double> per_time;
};

/// Runs (a) with (eps, alpha) from u0 and (b) with (lambda eps, alpha/lambda)
/// from rescale_field(u0, lambda) at dt_b = lambda^2 dt_a, and compares (b)
/// with the rescaled (a) in relative L^2(Phi_4).
inline RescaleReport rescale_consistency(const VectorField& u0, const SolverConfig& cfg, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("rescale_consistency: lambda must lie in (0, 1]");
  }
  SolverConfig cb = cfg;
  cb.mollifier = make_mollifier(cfg.grid, lambda * cfg.mollifier.epsilon, cfg.mollifier.alpha / lambda);
  cb.dt = lambda * lambda * cfg.dt;
  cb.t_end = lambda * lambda * cfg.t_end;
  const Trajectory ta = integrate(u0, cfg);
  const Trajectory tb = integrate(rescale_field(u0, lambda), cb);
  if (ta.size() != tb.size()) throw std::runtime_error("rescale_consistency: snapshot counts differ");
  RescaleReport rep;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    const VectorField ra = rescale_field(ta.snapshots[k], lambda);
    const double nb = weighted_lp_norm(tb.snapshots[k], 2.0, 4.0).value;
    const double d = weighted_lp_norm(ra - tb.snapshots[k], 2.0, 4.0).value;
    const double rel = nb > 0.0 ? d / nb : d;
    rep.times.push_back(tb.times[k]);
    rep.per_time.push_back(rel);
    rep.discrepancy = std::max(rep.discrepancy, rel);
  }
  return rep;
}

}  // namespace wns
