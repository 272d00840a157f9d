#pragma once

// Run configuration, the end-to-end pipeline (split, solve u and b, diagnose)
// and the convergence study over a halving sequence of (eps, alpha).

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <vector>

#include "wns/calderon.hpp"
#include "wns/estimates.hpp"
#include "wns/io.hpp"
#include "wns/testfields.hpp"

namespace wns {

struct RunConfig {
  int n = 32;
  double box_length = 16.0;
  double epsilon = 1.0;
  double alpha = 0.5;
  double dt = 1e-3;
  double t_end = 0.1;
  int snapshot_stride = 1;
  bool nonlinear = true;
  // split
  double p = 4.0;
  double gamma = 1.0;
  double r = 6.0;
  double eta = 0.1;
  // constants and horizon
  double C0 = 1.0, C1 = 1.0, C2 = 1.0;
  double T = 1.0;
  // studies
  int levels = 4;
  double lambda = 0.5;
  // generated initial data
  std::string field = "gaussian_bump";
  FieldParams field_params{};
  // tolerances
  double tol_divergence = 1e-8;
  double tol_duhamel = 1e-4;
  double tol_energy = 1e-2;
  double tol_rescale = 1e-3;

  Grid grid() const { return Grid(n, box_length); }
  SplitConfig split() const { return SplitConfig{p, gamma, r, eta}; }
  SolverConfig solver() const {
    SolverConfig c = SolverConfig::make(grid(), epsilon, alpha, dt, t_end, snapshot_stride);
    c.nonlinear = nonlinear;
    return c;
  }

  ParamMap to_map() const {
    ParamMap m;
    m["n"] = std::to_string(n);
    m["box_length"] = format_double(box_length);
    m["epsilon"] = format_double(epsilon);
    m["alpha"] = format_double(alpha);
    m["dt"] = format_double(dt);
    m["t_end"] = format_double(t_end);
    m["snapshot_stride"] = std::to_string(snapshot_stride);
    m["seed"] = std::to_string(field_params.seed);
    m["nonlinear"] = nonlinear ? "1" : "0";
    m["p"] = format_double(p);
    m["gamma"] = format_double(gamma);
    m["r"] = format_double(r);
    m["eta"] = format_double(eta);
    m["C0"] = format_double(C0);
    m["C1"] = format_double(C1);
    m["C2"] = format_double(C2);
    m["T"] = format_double(T);
    m["levels"] = std::to_string(levels);
    m["lambda"] = format_double(lambda);
    m["field"] = field;
    m["amplitude"] = format_double(field_params.amplitude);
    m["sigma"] = format_double(field_params.sigma);
    m["mode"] = std::to_string(field_params.mode);
    m["wavenumber"] = format_double(field_params.wavenumber);
    m["decay"] = format_double(field_params.decay);
    m["axis"] = std::to_string(field_params.axis);
    m["tol_divergence"] = format_double(tol_divergence);
    m["tol_duhamel"] = format_double(tol_duhamel);
    m["tol_energy"] = format_double(tol_energy);
    m["tol_rescale"] = format_double(tol_rescale);
    return m;
  }

  static RunConfig from_map(const ParamMap& m) {
    RunConfig c;
    auto num = [&](const std::string& k, const std::string& v) {
      try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(k);
        return d;
      } catch (const std::exception&) {
        throw ConfigError("config: key '" + k + "' expects a number, got '" + v + "'");
      }
    };
    auto integer = [&](const std::string& k, const std::string& v) {
      const double d = num(k, v);
      if (d != std::floor(d)) throw ConfigError("config: key '" + k + "' expects an integer");
      return static_cast<long long>(d);
    };
    for (const auto& [k, v] : m) {
      if (k == "n") c.n = static_cast<int>(integer(k, v));
      else if (k == "box_length") c.box_length = num(k, v);
      else if (k == "epsilon") c.epsilon = num(k, v);
      else if (k == "alpha") c.alpha = num(k, v);
      else if (k == "dt") c.dt = num(k, v);
      else if (k == "t_end") c.t_end = num(k, v);
      else if (k == "snapshot_stride") c.snapshot_stride = static_cast<int>(integer(k, v));
      else if (k == "seed") c.field_params.seed = static_cast<std::uint64_t>(integer(k, v));
      else if (k == "nonlinear") c.nonlinear = integer(k, v) != 0;
      else if (k == "p") c.p = num(k, v);
      else if (k == "gamma") c.gamma = num(k, v);
      else if (k == "r") c.r = num(k, v);
      else if (k == "eta") c.eta = num(k, v);
      else if (k == "C0") c.C0 = num(k, v);
      else if (k == "C1") c.C1 = num(k, v);
      else if (k == "C2") c.C2 = num(k, v);
      else if (k == "T") c.T = num(k, v);
      else if (k == "levels") c.levels = static_cast<int>(integer(k, v));
      else if (k == "lambda") c.lambda = num(k, v);
      else if (k == "field") c.field = v;
      else if (k == "amplitude") c.field_params.amplitude = num(k, v);
      else if (k == "sigma") c.field_params.sigma = num(k, v);
      else if (k == "mode") c.field_params.mode = static_cast<int>(integer(k, v));
      else if (k == "wavenumber") c.field_params.wavenumber = num(k, v);
      else if (k == "decay") c.field_params.decay = num(k, v);
      else if (k == "axis") c.field_params.axis = static_cast<int>(integer(k, v));
      else if (k == "tol_divergence") c.tol_divergence = num(k, v);
      else if (k == "tol_duhamel") c.tol_duhamel = num(k, v);
      else if (k == "tol_energy") c.tol_energy = num(k, v);
      else if (k == "tol_rescale") c.tol_rescale = num(k, v);
      else throw ConfigError("config: unknown key '" + k + "'");
    }
    return c;
  }

  static RunConfig load(const std::filesystem::path& p) { return from_map(read_key_values(p)); }
};

inline void write_config(const std::filesystem::path& p, const RunConfig& c) {
  std::ofstream out(p, std::ios::trunc);
  for (const auto& [k, v] : c.to_map()) out << k << "=" << v << "\n";
}

inline void write_budget_csv(const std::filesystem::path& p, const EnergyBudget& eb) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << "time,lhs_rate,grad_term,A1,A2,A3,A4,A5,A6,residual,bound_side\n";
  for (std::size_t k = 0; k < eb.times.size(); ++k) {
    out << format_double(eb.times[k]) << ',' << format_double(eb.lhs_rate[k]) << ','
        << format_double(eb.grad_term[k]);
    for (int j = 0; j < 6; ++j) out << ',' << format_double(eb.A[j][k]);
    out << ',' << format_double(eb.residual[k]) << ',' << format_double(eb.bound_side[k]) << '\n';
  }
}

inline void write_star_csv(const std::filesystem::path& p, const StarNormReport& s) {
  std::ofstream out(p, std::ios::trunc);
  out << "time,lr,sqrt_t_grad_lr,t_pow_sup\n";
  for (const auto& x : s.series) {
    out << format_double(x.time) << ',' << format_double(x.lr) << ',' << format_double(x.grad)
        << ',' << format_double(x.sup) << '\n';
  }
}

// ---- pipeline ------------------------------------------------------------------

struct PipelineResult {
  RunManifest manifest;
  bool ok = true;
  std::vector<std::pair<std::string, std::string>> checks;  // (name, PASS/FAIL detail)
};

/// Runs every stage in order; a failed stage is recorded and the remaining
/// stages are skipped. `u0_in` overrides the generated field when given.
inline PipelineResult pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir,
                               const VectorField* u0_in = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  PipelineResult res;
  RunManifest& man = res.manifest;
  man.config = cfg.to_map();
  man.workers = worker_count();
  write_config(out_dir / "config.txt", cfg);

  auto add_out = [&](const std::string& rel) { man.outputs.emplace_back(rel, file_digest(out_dir / rel)); };
  auto result = [&](const std::string& k, double v) { man.results.emplace_back(k, format_double(v)); };
  auto check = [&](const std::string& name, bool pass, const std::string& detail) {
    res.checks.emplace_back(name, std::string(pass ? "PASS " : "FAIL ") + detail);
    man.results.emplace_back("check." + name, pass ? "pass" : "fail");
    if (!pass) res.ok = false;
  };

  const Grid g = cfg.grid();
  std::optional<VectorField> u0;
  std::optional<SplitResult> split;
  std::optional<SolverConfig> sc;
  std::optional<Trajectory> tu, tb, tv;
  bool failed = false;

  auto stage = [&](const std::string& name, auto&& body) {
    if (failed) {
      man.stages.emplace_back(name, "skipped");
      return;
    }
    try {
      body();
      man.stages.emplace_back(name, "ok");
    } catch (const std::exception& e) {
      failed = true;
      res.ok = false;
      man.stages.emplace_back(name, std::string("failed: ") + e.what());
    }
  };

  stage("field", [&] {
    u0 = u0_in ? *u0_in : make_test_field(cfg.field, g, cfg.field_params);
    save_field(out_dir / "u0.wnsf", *u0, {{"field", u0_in ? "input" : cfg.field}});
    add_out("u0.wnsf");
    result("u0_divergence_residual", divergence_residual(*u0));
  });
  stage("split", [&] {
    split = calderon_split(*u0, cfg.split());
    save_field(out_dir / "v0.wnsf", split->v0, {{"part", "v0"}});
    save_field(out_dir / "b0.wnsf", split->b0, {{"part", "b0"}});
    {
      std::ofstream s(out_dir / "split.txt", std::ios::trunc);
      s << "A=" << format_double(split->threshold_A) << "\nmu=" << format_double(split->mu)
        << "\neta=" << format_double(cfg.eta) << "\nb0_lr=" << format_double(split->achieved_b_norm)
        << "\nv0_l2_phi2=" << format_double(split->achieved_v_norm) << "\n";
    }
    add_out("v0.wnsf");
    add_out("b0.wnsf");
    add_out("split.txt");
    result("split.A", split->threshold_A);
    result("split.b0_lr", split->achieved_b_norm);
    result("split.v0_l2_phi2", split->achieved_v_norm);
    check("split_eta", split->achieved_b_norm < cfg.eta || l2_norm(*u0) == 0.0,
          "||b0||_r = " + format_double(split->achieved_b_norm));
  });
  stage("solve_u", [&] {
    sc = cfg.solver();
    tu = solve_mollified(*u0, *sc);
    for (const auto& [k, v] : save_trajectory(out_dir / "traj_u", *tu, man.config)) man.outputs.emplace_back("traj_u/" + k, v);
    result("u.blew_up", tu->blew_up ? 1.0 : 0.0);
    result("u.last_valid_time", tu->last_valid_time);
    double d = 0.0;
    for (double x : tu->divergence) d = std::max(d, x);
    check("u_divergence", d <= cfg.tol_divergence, format_double(d));
  });
  stage("solve_b", [&] {
    tb = solve_b(split->b0, *sc, cfg.r);
    for (const auto& [k, v] : save_trajectory(out_dir / "traj_b", *tb, man.config)) man.outputs.emplace_back("traj_b/" + k, v);
    result("b.blew_up", tb->blew_up ? 1.0 : 0.0);
  });
  stage("derive_v", [&] {
    if (tu->size() != tb->size()) throw std::runtime_error("u and b trajectories have different lengths");
    tv = difference_trajectory(*tu, *tb);
  });
  stage("star_norms", [&] {
    const StarNormReport s = star_norms(*tb, cfg.r, cfg.eta);
    write_star_csv(out_dir / "star.csv", s);
    add_out("star.csv");
    result("star.sup_r", s.sup_r);
    result("star.sup_grad", s.sup_grad);
    result("star.sup_inf", s.sup_inf);
    result("star.w1_grad_l1", s.w1_grad_l1);
    result("star.w1_dual_norm", s.w1_dual_norm);
    check("star_flags", s.all_pass(), "sup_r=" + format_double(s.sup_r));
  });
  stage("energy_budget", [&] {
    const EnergyBudget eb = energy_budget(*tv, *tb, sc->mollifier, cfg.eta, cfg.r);
    write_budget_csv(out_dir / "budget.csv", eb);
    add_out("budget.csv");
    result("energy.relative_residual", eb.relative_residual());
    result("energy.a1_constant", eb.a1_constant);
    if (!eb.times.empty()) {
      check("energy_identity", eb.relative_residual() <= cfg.tol_energy,
            format_double(eb.relative_residual()));
    }
  });
  stage("duhamel", [&] {
    const double d = duhamel_residual(*tu, *u0, sc->mollifier);
    result("duhamel.relative", d);
    result("duhamel.quadrature_estimate", duhamel_quadrature_error_estimate(*tu, sc->mollifier));
    check("duhamel", d <= cfg.tol_duhamel, format_double(d));
  });
  stage("v_residual", [&] {
    const double d = v_residual(*tu, *tb, sc->mollifier);
    result("v_residual.relative", d);
    check("v_residual", d <= cfg.tol_duhamel, format_double(d));
  });
  stage("bounds", [&] {
    BoundInputs in;
    in.u0_norm = weighted_lp_norm(*u0, cfg.p, cfg.gamma).value;
    in.b0_norm = split->achieved_b_norm;
    in.v0_norm = split->achieved_v_norm;
    in.epsilon = cfg.epsilon;
    in.alpha = cfg.alpha;
    in.r = cfg.r;
    in.eta = cfg.eta;
    in.C0 = cfg.C0;
    in.C1 = cfg.C1;
    in.C2 = cfg.C2;
    ExistenceBounds eb = existence_bounds(in);
    try {
      const LambdaSearch ls = choose_lambda(split->v0, cfg.T, cfg.C2);
      eb.lambda_T = ls.lambda_T;
      eb.alpha_T = ls.alpha_T;
    } catch (const ResolutionError& e) {
      man.results.emplace_back("bounds.lambda_error", e.what());
    }
    std::ofstream b(out_dir / "bounds.txt", std::ios::trunc);
    b << "T_eps_alpha=" << format_double(eb.T_eps_alpha) << "\nT_eta=" << format_double(eb.T_eta)
      << "\nT_eta_eps_alpha=" << format_double(eb.T_eta_eps_alpha)
      << "\nT_global=" << format_double(eb.T_global) << "\nlambda_T=" << format_double(eb.lambda_T)
      << "\nalpha_T=" << format_double(eb.alpha_T) << "\n";
    b.close();
    add_out("bounds.txt");
    result("bounds.T_eta_eps_alpha", eb.T_eta_eps_alpha);
  });

  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out_dir / "manifest.txt", man);
  return res;
}

// ---- convergence study ---------------------------------------------------------

struct ConvergenceReport {
  std::vector<double> epsilons, alphas;
  std::vector<std::vector<double>> distance;  // d(m, n) in L^2((0,T), L^2(Phi_4))
  std::vector<double> tail_max;               // max_{m,n >= k} d(m, n)
  bool cauchy = false;                        // tail_max strictly decreasing
  std::vector<double> consecutive;            // d(n, n+1)
  bool consecutive_decreasing = false;
  std::vector<double> nse_residual;           // per level, H^{-4}(Phi_8) in L^2 over time
  bool triangle_ok = true;
};

/// ||d_t u - Lap u + P Div(u (x) u)||_{H^{-4}(Phi_8)} in L^2 over the interior
/// snapshots, with d_t by centred differences.
inline double nse_residual(const Trajectory& tr) {
  if (tr.size() < 3) return 0.0;
  std::vector<double> ts, vals;
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    const VectorField& u = tr.snapshots[k];
    const Grid& g = u.grid;
    VectorSpectrum um = forward(tr.snapshots[k - 1]), u0 = forward(u), up = forward(tr.snapshots[k + 1]);
    const double tm = tr.times[k - 1], t0 = tr.times[k], tp = tr.times[k + 1];
    VectorSpectrum res = divergence_of_tensor_spectrum(outer(u, u));
    leray_in_place(res);
    g.for_each_mode([&](const Mode& m) {
      for (int j = 0; j < 3; ++j) {
        const std::size_t i = m.index;
        const Complex dtu = (std::pow(t0 - tm, 2) * up.c[j][i] - std::pow(tp - t0, 2) * um.c[j][i] +
                             (std::pow(tp - t0, 2) - std::pow(t0 - tm, 2)) * u0.c[j][i]) /
                            ((t0 - tm) * (tp - t0) * (tp - tm));
        res.c[j][i] += dtu + m.k2() * u0.c[j][i];
      }
    });
    ts.push_back(t0);
    vals.push_back(weighted_hs_norm(inverse(res), -4.0, 8.0).value);
  }
  double acc = 0.0;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    acc += 0.5 * (ts[k] - ts[k - 1]) * (vals[k] * vals[k] + vals[k - 1] * vals[k - 1]);
  }
  if (ts.size() == 1) acc = vals[0] * vals[0];
  return std::sqrt(acc);
}

/// sqrt( int_0^T ||a - b||^2_{L^2(Phi_4)} dt ) by the trapezoid rule.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  require_same_axis(a, b, "trajectory_distance");
  std::vector<double> d2;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = weighted_lp_norm(a.snapshots[k] - b.snapshots[k], 2.0, 4.0).value;
    d2.push_back(d * d);
  }
  double acc = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) acc += 0.5 * (a.times[k] - a.times[k - 1]) * (d2[k] + d2[k - 1]);
  return std::sqrt(acc);
}

/// Levels n = 0..levels-1 with (eps_n, alpha_n) = (eps_0 2^-n, alpha_0 2^-n),
/// or eps frozen at eps_0 when `freeze_epsilon`. Levels run concurrently on
/// `workers` threads; the report is assembled on the calling thread.
inline ConvergenceReport convergence_study(const RunConfig& cfg, const VectorField& u0, int levels,
                                           int workers = 1, bool freeze_epsilon = false) {
  if (levels < 3) throw std::invalid_argument("convergence_study: need at least 3 levels");
  const Grid g = cfg.grid();
  const double a_last = cfg.alpha * std::ldexp(1.0, -(levels - 1));
  const double e_last = freeze_epsilon ? cfg.epsilon : cfg.epsilon * std::ldexp(1.0, -(levels - 1));
  make_mollifier(g, e_last, a_last);  // finest level must fit the box
  ConvergenceReport rep;
  std::vector<Trajectory> trajs(levels);
  auto run_level = [&](int n) {
    SolverConfig sc = SolverConfig::make(g, freeze_epsilon ? cfg.epsilon : cfg.epsilon * std::ldexp(1.0, -n),
                                         cfg.alpha * std::ldexp(1.0, -n), cfg.dt, cfg.t_end, cfg.snapshot_stride);
    sc.nonlinear = cfg.nonlinear;
    return solve_mollified(u0, sc);
  };
  for (int n = 0; n < levels; n += std::max(1, workers)) {
    std::vector<std::future<Trajectory>> fut;
    for (int k = n; k < std::min(levels, n + std::max(1, workers)); ++k) {
      fut.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run_level, k));
    }
    for (std::size_t k = 0; k < fut.size(); ++k) trajs[n + k] = fut[k].get();
  }
  for (int n = 0; n < levels; ++n) {
    rep.epsilons.push_back(freeze_epsilon ? cfg.epsilon : cfg.epsilon * std::ldexp(1.0, -n));
    rep.alphas.push_back(cfg.alpha * std::ldexp(1.0, -n));
    if (trajs[n].blew_up) throw std::runtime_error("convergence_study: level " + std::to_string(n) + " blew up");
  }
  rep.distance.assign(levels, std::vector<double>(levels, 0.0));
  for (int m = 0; m < levels; ++m)
    for (int n = m + 1; n < levels; ++n) {
      rep.distance[m][n] = rep.distance[n][m] = trajectory_distance(trajs[m], trajs[n]);
    }
  for (int k = 0; k + 1 < levels; ++k) {
    double mx = 0.0;
    for (int m = k; m < levels; ++m)
      for (int n = m + 1; n < levels; ++n) mx = std::max(mx, rep.distance[m][n]);
    rep.tail_max.push_back(mx);
    rep.consecutive.push_back(rep.distance[k][k + 1]);
  }
  rep.cauchy = true;
  for (std::size_t k = 1; k < rep.tail_max.size(); ++k)
    if (!(rep.tail_max[k] < rep.tail_max[k - 1])) rep.cauchy = false;
  rep.consecutive_decreasing = true;
  for (std::size_t k = 1; k < rep.consecutive.size(); ++k)
    if (!(rep.consecutive[k] < rep.consecutive[k - 1])) rep.consecutive_decreasing = false;
  for (int a = 0; a < levels; ++a)
    for (int b = 0; b < levels; ++b)
      for (int c = 0; c < levels; ++c)
        if (rep.distance[a][c] > rep.distance[a][b] + rep.distance[b][c] + 1e-10) rep.triangle_ok = false;
  for (int n = 0; n < levels; ++n) rep.nse_residual.push_back(nse_residual(trajs[n]));
  return rep;
}

}  // namespace wns
