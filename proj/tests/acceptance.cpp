// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "wns/wns.hpp"

using namespace wns;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

VectorField bump(const Grid& g, double amplitude) {
  FieldParams p;
  p.amplitude = amplitude;
  return gaussian_bump(g, p);
}

double rel_l2(const VectorField& a, const VectorField& b) { return l2_norm(a - b) / l2_norm(b); }

// 1. Spectral identities on 100 random fields at N = 32.
Outcome spectral_correctness() {
  constexpr double tol = 1e-10, time_limit = 10.0;
  const auto t0 = std::chrono::steady_clock::now();
  const Grid g(32, 16.0);
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> mode(-10, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double leray = 0.0, grad = 0.0, rsum = 0.0, heat = 0.0;
  for (int k = 0; k < 100; ++k) {
    const VectorField u = random_vector_field(g, rng, 10);
    const VectorField pu = leray_project(u);
    leray = std::max(leray, rel_l2(leray_project(pu), pu));
    const ScalarField f = random_band_limited(g, rng, 10);
    const VectorField gf = gradient(f);
    grad = std::max(grad, l2_norm(leray_project(gf)) / l2_norm(gf));
    ScalarField s(g);
    for (int j = 0; j < 3; ++j) s = s + riesz(riesz(f, j), j);
    rsum = std::max(rsum, l2_norm(s + f) / l2_norm(f));
    // heat on a random eigenmode a sin(k.x + phase)
    const std::array<int, 3> m{mode(rng), mode(rng), mode(rng)};
    double k2 = 0.0;
    std::array<double, 3> kv{};
    for (int j = 0; j < 3; ++j) {
      kv[j] = 2.0 * kPi * m[j] / g.length();
      k2 += kv[j] * kv[j];
    }
    // keep the decay factor above e^-10 so the decayed mode stays above roundoff
    const double phase = 2.0 * kPi * unit(rng), t = unit(rng) * std::min(1.0, 10.0 / std::max(k2, 1e-300));
    ScalarField e(g);
    g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
      e[i] = std::sin(kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2] + phase);
    });
    const ScalarField he = heat_semigroup(e, t);
    if (l2_norm(e) > 0.0) heat = std::max(heat, l2_norm(he - std::exp(-k2 * t) * e) / (std::exp(-k2 * t) * l2_norm(e)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = leray <= tol && grad <= tol && rsum <= tol && heat <= tol && secs < time_limit;
  return {ok, fmt("leray %.1e grad %.1e riesz %.1e heat %.1e (tol %.0e), %.1f s (limit %.0f s)", leray, grad,
                  rsum, heat, tol, secs, time_limit)};
}

// 2. ||1||^2_{L^2(Phi_4)} -> pi^2, Richardson on L = 32, 64.
Outcome weighted_norm_oracle() {
  constexpr double tol = 1e-2;
  auto I = [](int n, double L) {
    const Grid g(n, L);
    ScalarField one(g);
    for (auto& x : one.data) x = 1.0;
    const double v = weighted_lp_norm(one, 2.0, 4.0).value;
    return v * v;
  };
  const double i32 = I(64, 32.0), i64 = I(128, 64.0);
  const double rich = 2.0 * i64 - i32;
  const double err = std::abs(rich - kPi * kPi) / (kPi * kPi);
  return {err <= tol, fmt("I(32)=%.6f I(64)=%.6f Richardson %.6f vs pi^2 %.6f, rel err %.2e (tol %.0e)", i32, i64,
                          rich, kPi * kPi, err, tol)};
}

// 3. sqrt(t) ||K_t * f|| / ||f|| in L^2(Phi_4) across t in {1, 1/4, 1/16}:
// the spread over t of the operator-norm estimate max_f ratio, and of each
// field's own ratio.
Outcome kernel_uniformity() {
  constexpr double limit = 2.0;
  const Grid g(32, 16.0);
  std::vector<KernelBoundReport> reps;
  for (double t : {1.0, 0.25, 0.0625}) reps.push_back(kernel_bound_check(g, t, 2.0, 4.0, 20, 303));
  double clo = kInf, chi = 0.0, field_spread = 0.0;
  for (const auto& r : reps) {
    clo = std::min(clo, r.max_ratio);
    chi = std::max(chi, r.max_ratio);
  }
  for (std::size_t k = 0; k < reps[0].ratios.size(); ++k) {
    double lo = kInf, hi = 0.0;
    for (const auto& r : reps) {
      lo = std::min(lo, r.ratios[k]);
      hi = std::max(hi, r.ratios[k]);
    }
    field_spread = std::max(field_spread, hi / lo);
  }
  return {chi / clo < limit && field_spread < limit,
          fmt("max_f ratio %.4f / %.4f / %.4f at t = 1 / 1/4 / 1/16, spread %.3f; worst per-field spread %.3f "
              "(limit %.1f)",
              reps[0].max_ratio, reps[1].max_ratio, reps[2].max_ratio, chi / clo, field_spread, limit)};
}

// 4. sup bound for the mollified field, 100 random fields x 4 parameter pairs.
Outcome mollifier_sup_bound_check() {
  const Grid g(64, 20.0);
  std::mt19937_64 rng(404);
  int violations = 0, checks = 0;
  double worst = 0.0;
  std::vector<MollifierSpec> ms;
  for (double e : {0.25, 0.5})
    for (double a : {0.25, 0.5}) ms.push_back(make_mollifier(g, e, a));
  for (int k = 0; k < 100; ++k) {
    const VectorField u = random_vector_field(g, rng, 12);
    const double nu = weighted_lp_norm(u, 4.0, 1.0).value;
    for (const auto& m : ms) {
      const double lhs = weighted_lp_norm(mollify(u, m), kInf, 0.0).value;
      const double rhs = mollifier_sup_bound(m, 4.0, 1.0, nu);
      worst = std::max(worst, lhs / rhs);
      ++checks;
      if (lhs > rhs) ++violations;
    }
  }
  return {violations == 0, fmt("%d violations in %d checks, max lhs/rhs %.3e", violations, checks, worst)};
}

// 5. Split of the heavy-tailed field.
Outcome calderon_split_check() {
  const Grid g(32, 16.0);
  FieldParams p;
  p.decay = 0.6;
  const VectorField u0 = heavy_tail(g, p);
  bool ok = true;
  double prev = 0.0;
  std::string d;
  for (double eta : {0.2, 0.1, 0.05}) {
    const SplitResult s = calderon_split(u0, SplitConfig{4.0, 1.0, 6.0, eta});
    const double part = l2_norm(s.v0 + s.b0 - u0) / l2_norm(u0);
    const double dv = divergence_residual(s.v0), db = divergence_residual(s.b0);
    const bool row = s.achieved_b_norm < eta && part <= 1e-12 && dv <= 1e-10 && db <= 1e-10 &&
                     std::isfinite(s.achieved_v_norm) && s.achieved_v_norm >= prev;
    ok = ok && row;
    prev = s.achieved_v_norm;
    d += fmt("[eta %.2f: b %.4f v %.4f part %.1e div %.1e/%.1e] ", eta, s.achieved_b_norm, s.achieved_v_norm, part,
             dv, db);
  }
  return {ok, d};
}

// 6. Duhamel residual of the Gaussian-bump run.
Outcome duhamel_check() {
  constexpr double tol = 1e-4, min_rate = 1.9;
  const Grid g(32, 16.0);
  const VectorField u0 = bump(g, 5.0);
  std::vector<double> res;
  for (double dt : {1e-3, 5e-4, 2.5e-4}) {
    const SolverConfig c = SolverConfig::make(g, 1.0, 0.5, dt, 0.05);
    res.push_back(duhamel_residual(solve_mollified(u0, c), u0, c.mollifier));
  }
  const double r1 = std::log2(res[0] / res[1]), r2 = std::log2(res[1] / res[2]);
  const bool ok = res[0] <= tol && r1 >= min_rate && r2 >= min_rate;
  return {ok, fmt("residual %.2e / %.2e / %.2e at dt 1e-3 / 5e-4 / 2.5e-4 (tol %.0e), rates %.2f %.2f (min %.1f)",
                  res[0], res[1], res[2], tol, r1, r2, min_rate)};
}

EnergyBudget split_budget(int n, double dt) {
  const Grid g(n, 16.0);
  const VectorField u0 = bump(g, 5.0);
  const SplitConfig sc{4.0, 1.0, 6.0, 0.1};
  const SplitResult sp = calderon_split(u0, sc);
  const SolverConfig c = SolverConfig::make(g, 1.0, 0.5, dt, 0.05);
  const Trajectory tu = solve_mollified(u0, c);
  const Trajectory tb = solve_b(sp.b0, c, sc.r);
  return energy_budget(difference_trajectory(tu, tb), tb, c.mollifier, sc.eta, sc.r);
}

// 7. Energy identity for v at N = 48, dt = 5e-4, against a coarser run.
Outcome energy_identity_check() {
  constexpr double tol = 1e-2;
  const double coarse = split_budget(32, 1e-3).relative_residual();
  const double fine = split_budget(48, 5e-4).relative_residual();
  return {fine < tol && fine < coarse,
          fmt("relative residual %.2e (N=32, dt=1e-3) -> %.2e (N=48, dt=5e-4), tol %.0e", coarse, fine, tol)};
}

struct BRun {
  Trajectory tb;
  double b0 = 0.0;
};

BRun b_run(double eta, double dt, double t_end, int stride) {
  const Grid g(32, 16.0);
  const SplitResult sp = calderon_split(bump(g, 5.0), SplitConfig{4.0, 1.0, 6.0, eta});
  const SolverConfig c = SolverConfig::make(g, 1.0, 0.5, dt, t_end, stride);
  return {solve_b(sp.b0, c, 6.0), sp.achieved_b_norm};
}

double calibrated_c1() {
  const BRun cal = b_run(0.2, 2e-5, 2e-4, 1);
  return calibrate_c1_from_run(star_norms(cal.tb, 6.0, 0.2), 6.0);
}

// 8. Star-norm flags on held-out runs up to T_[eta](C1).
Outcome star_bound_check() {
  const double C1 = calibrated_c1();
  bool ok = true;
  std::string d = fmt("C1 = %.4f; ", C1);
  for (double eta : {0.1, 0.05, 0.025}) {
    const double T = t_eta(eta, 6.0, C1);
    const BRun run = b_run(eta, 1e-3 * std::min(1.0, T / 0.05), T, 10);
    const StarNormReport rep = star_norms(run.tb, 6.0, eta, T);
    ok = ok && rep.all_pass() && !run.tb.blew_up && rep.series.size() >= 3;
    d += fmt("[eta %.3f T %.4f: r %.3e/%.3e grad %.3e/%.3e inf %.3e/%.3e, %zu samples] ", eta, T, rep.sup_r,
             rep.bound_r(), rep.sup_grad, rep.bound_grad(), rep.sup_inf, rep.bound_inf(), rep.series.size());
  }
  return {ok, d};
}

// 9. sup ||v|| <= 2 ||v0|| on [0, T_{eta,eps,alpha}] with calibrated C2.
Outcome v_bound_check() {
  const double C1 = calibrated_c1();
  const Grid g(32, 16.0);
  // The windows are O(1e-4) here, so the runs use a fine step over a short horizon.
  const double alpha = 0.5, t_end = 2e-3;
  struct Run {
    double eta, t_ea, v0;
    std::vector<double> times, norms;
  };
  std::vector<Run> runs;
  for (double eta : {0.2, 0.1, 0.05}) {
    const VectorField u0 = bump(g, 5.0);
    const SplitResult sp = calderon_split(u0, SplitConfig{4.0, 1.0, 6.0, eta});
    const SolverConfig c = SolverConfig::make(g, 1.0, alpha, 2e-5, t_end, 2);
    const Trajectory tu = solve_mollified(u0, c);
    const Trajectory tb = solve_b(sp.b0, c, 6.0);
    const Trajectory tv = difference_trajectory(tu, tb);
    Run r{eta, tu.blew_up ? tu.last_valid_time : t_end, sp.achieved_v_norm, tv.times, {}};
    for (const auto& v : tv.snapshots) r.norms.push_back(weighted_lp_norm(v, 2.0, 2.0).value);
    runs.push_back(std::move(r));
  }
  const double C2 = calibrate_c2_from_run(runs[0].times, runs[0].norms, runs[0].t_ea, t_eta(runs[0].eta, 6.0, C1), alpha);
  bool ok = std::isfinite(C2);
  std::string d = fmt("C1 = %.4f C2 = %.4f; ", C1, C2);
  for (const auto& r : runs) {
    const double window = std::min({r.t_ea, t_eta(r.eta, 6.0, C1) / C2, v_window(alpha, r.v0, C2)});
    double sup = 0.0;
    int samples = 0;
    for (std::size_t k = 0; k < r.times.size(); ++k)
      if (r.times[k] <= window * (1.0 + 1e-12)) sup = std::max(sup, r.norms[k]), ++samples;
    ok = ok && sup <= 2.0 * r.norms[0] && samples >= 3;
    d += fmt("[eta %.2f window %.2e: sup %.4f vs 2||v0|| %.4f, %d samples] ", r.eta, window, sup, 2.0 * r.norms[0],
             samples);
  }
  return {ok, d};
}

// 10. Rescaling discrepancy at lambda = 1/2 over N = 32, 48, 64.
Outcome rescale_check() {
  constexpr double tol = 1e-3;
  std::vector<double> d;
  for (int n : {32, 48, 64}) {
    const Grid g(n, 16.0);
    const SolverConfig c = SolverConfig::make(g, 2.0, 0.5, 2e-3, 0.1, 5);
    d.push_back(rescale_consistency(bump(g, 0.5), c, 0.5).discrepancy);
  }
  return {d[1] < d[0] && d[2] < d[1] && d[2] <= tol,
          fmt("discrepancy %.2e / %.2e / %.2e at N = 32 / 48 / 64 (tol %.0e)", d[0], d[1], d[2], tol)};
}

// 11. Four halving levels of (eps, alpha).
Outcome convergence_check() {
  constexpr double min_factor = 4.0;
  RunConfig c;
  c.n = 32;
  c.box_length = 16.0;
  c.epsilon = 2.0;
  c.alpha = 2.1;
  c.dt = 5e-3;
  c.t_end = 0.5;
  c.snapshot_stride = 2;
  const ConvergenceReport r = convergence_study(c, bump(c.grid(), 5.0), 4, worker_count());
  const double factor = r.nse_residual.front() / r.nse_residual.back();
  return {r.consecutive_decreasing && factor >= min_factor,
          fmt("d(n,n+1) = %.3e %.3e %.3e; NSE residual %.3e -> %.3e, factor %.1f (min %.0f)", r.consecutive[0],
              r.consecutive[1], r.consecutive[2], r.nse_residual.front(), r.nse_residual.back(), factor, min_factor)};
}

// 12. Divergence: zero stays zero, nonzero follows the heat flow.
Outcome divergence_check() {
  constexpr double tol = 1e-8;
  const Grid g(32, 16.0);
  const SolverConfig c = SolverConfig::make(g, 1.0, 0.5, 1e-3, 0.05, 5);
  const Trajectory t0 = solve_mollified(bump(g, 5.0), c);
  double zero = 0.0;
  for (double x : t0.divergence) zero = std::max(zero, x);
  VectorField u0 = bump(g, 5.0);
  g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    u0.c[0][i] += x[0] * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  });
  const ScalarField d0 = divergence_field(u0);
  const Trajectory t1 = integrate(u0, c);
  double nonzero = 0.0;
  for (std::size_t k = 0; k < t1.size(); ++k) {
    nonzero = std::max(nonzero, l2_norm(divergence_field(t1.snapshots[k]) - heat_semigroup(d0, t1.times[k])) /
                                    l2_norm(d0));
  }
  return {zero <= tol && nonzero <= tol, fmt("zero branch %.1e, nonzero branch %.1e (tol %.0e)", zero, nonzero, tol)};
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments select criteria by number
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> crits = {
      {"spectral correctness", spectral_correctness},
      {"weighted-norm oracle", weighted_norm_oracle},
      {"kernel uniformity", kernel_uniformity},
      {"mollifier sup bound", mollifier_sup_bound_check},
      {"Calderon split", calderon_split_check},
      {"Duhamel residual", duhamel_check},
      {"energy identity", energy_identity_check},
      {"star-norm bound", star_bound_check},
      {"v energy bound", v_bound_check},
      {"scaling identity", rescale_check},
      {"convergence", convergence_check},
      {"divergence propagation", divergence_check},
  };
  int failed = 0, ran = 0;
  for (std::size_t k = 0; k < crits.size(); ++k) {
    if (!only.empty() && !only.count(k + 1)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = crits[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, crits[k].first, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
