// wns: command-line driver. Every subcommand that writes files writes them
// under --out together with manifest.txt.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "wns/wns.hpp"

using namespace wns;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

RunConfig load_config(const Common& c) {
  ParamMap m;
  if (!c.config.empty()) m = read_key_values(c.config);
  for (const auto& s : c.sets) {
    const ParamMap one = parse_key_values(s, "--set");
    for (const auto& [k, v] : one) m[k] = v;
  }
  return RunConfig::from_map(m);
}

void add_common(CLI::App* app, Common& c, bool needs_out) {
  app->add_option("--config", c.config, "key=value configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "override one key, e.g. --set eta=0.05")->take_all();
  auto* o = app->add_option("--out", c.out, "output directory");
  if (needs_out) o->required();
}

class Run {
 public:
  Run(const Common& c, const RunConfig& cfg) : dir_(c.out), t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
    man_.config = cfg.to_map();
    man_.workers = worker_count();
    write_config(dir_ / "config.txt", cfg);
    output("config.txt");
  }
  void input(const fs::path& p) { man_.inputs.emplace_back(p.string(), file_digest(p)); }
  void output(const std::string& rel) { man_.outputs.emplace_back(rel, file_digest(dir_ / rel)); }
  void outputs(const std::string& prefix, const std::vector<std::pair<std::string, std::string>>& w) {
    for (const auto& [k, v] : w) man_.outputs.emplace_back(prefix + k, v);
  }
  void result(const std::string& k, double v) { man_.results.emplace_back(k, format_double(v)); }
  void result(const std::string& k, const std::string& v) { man_.results.emplace_back(k, v); }
  const fs::path& dir() const { return dir_; }
  void finish() {
    man_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    write_manifest(dir_ / "manifest.txt", man_);
  }

 private:
  fs::path dir_;
  std::chrono::steady_clock::time_point t0_;
  RunManifest man_;
};

VectorField initial_field(const RunConfig& cfg, const std::string& path, Run* run) {
  if (path.empty()) return make_test_field(cfg.field, cfg.grid(), cfg.field_params);
  VectorField u = load_field(path);
  if (run) run->input(path);
  if (u.grid.n() != cfg.n || u.grid.length() != cfg.box_length) {
    throw ConfigError("field " + path + " does not match the configured grid (n, box_length)");
  }
  return u;
}

int cmd_gen_field(const Common& c) {
  const RunConfig cfg = load_config(c);
  Run run(c, cfg);
  const VectorField u = make_test_field(cfg.field, cfg.grid(), cfg.field_params);
  save_field(run.dir() / "u0.wnsf", u, {{"field", cfg.field}});
  run.output("u0.wnsf");
  run.result("l2", l2_norm(u));
  run.result("lp_phi_gamma", weighted_lp_norm(u, cfg.p, cfg.gamma).value);
  run.result("lp_plain", weighted_lp_norm(u, cfg.p, 0.0).value);
  run.result("divergence_residual", divergence_residual(u));
  run.finish();
  return 0;
}

int cmd_split(const Common& c, const std::string& u0_path) {
  const RunConfig cfg = load_config(c);
  Run run(c, cfg);
  const VectorField u0 = initial_field(cfg, u0_path, &run);
  const SplitResult s = calderon_split(u0, cfg.split());
  save_field(run.dir() / "v0.wnsf", s.v0, {{"part", "v0"}});
  save_field(run.dir() / "b0.wnsf", s.b0, {{"part", "b0"}});
  {
    std::ofstream t(run.dir() / "threshold_trace.csv");
    t << "A,projected_norm,raw_norm,v_raw_norm\n";
    for (const auto& x : s.trace) {
      t << format_double(x.A) << ',' << format_double(x.projected_norm) << ',' << format_double(x.raw_norm) << ','
        << format_double(x.v_raw_norm) << '\n';
    }
  }
  run.output("v0.wnsf");
  run.output("b0.wnsf");
  run.output("threshold_trace.csv");
  run.result("A", s.threshold_A);
  run.result("mu", s.mu);
  run.result("b0_lr", s.achieved_b_norm);
  run.result("v0_l2_phi2", s.achieved_v_norm);
  run.finish();
  std::printf("A=%.6g ||b0||_r=%.6g ||v0||_L2(Phi2)=%.6g\n", s.threshold_A, s.achieved_b_norm, s.achieved_v_norm);
  return s.achieved_b_norm < cfg.eta || l2_norm(u0) == 0.0 ? 0 : 1;
}

int cmd_solve(const Common& c, const std::string& u0_path, double star_r) {
  const RunConfig cfg = load_config(c);
  Run run(c, cfg);
  const VectorField u0 = initial_field(cfg, u0_path, &run);
  SolverConfig sc = cfg.solver();
  sc.star_r = star_r;
  const Trajectory tr = solve_mollified(u0, sc);
  run.outputs("traj/", save_trajectory(run.dir() / "traj", tr, cfg.to_map()));
  run.result("blew_up", tr.blew_up ? 1.0 : 0.0);
  run.result("last_valid_time", tr.last_valid_time);
  run.result("duhamel.relative", duhamel_residual(tr, u0, sc.mollifier));
  run.finish();
  std::printf("snapshots=%zu blew_up=%d last_valid_time=%.6g\n", tr.size(), tr.blew_up ? 1 : 0, tr.last_valid_time);
  return tr.blew_up ? 1 : 0;
}

int cmd_diagnose(const Common& c, const std::string& traj, const std::string& b_traj) {
  const RunConfig cfg = load_config(c);
  Run run(c, cfg);
  const Trajectory tu = load_trajectory(traj);
  if (tu.size() == 0) throw std::runtime_error("diagnose: empty trajectory");
  run.input(fs::path(traj) / "trajectory.txt");
  const Grid& g = tu.snapshots.front().grid;
  const MollifierSpec m = make_mollifier(g, tu.epsilon, tu.alpha);
  Trajectory tb;
  if (b_traj.empty()) {
    tb = tu;
    for (auto& s : tb.snapshots) s = VectorField(g);
  } else {
    tb = load_trajectory(b_traj);
    run.input(fs::path(b_traj) / "trajectory.txt");
  }
  const Trajectory tv = difference_trajectory(tu, tb);
  const EnergyBudget eb = energy_budget(tv, tb, m, cfg.eta, cfg.r);
  write_budget_csv(run.dir() / "budget.csv", eb);
  run.output("budget.csv");
  run.result("energy.relative_residual", eb.relative_residual());
  const double d = duhamel_residual(tu, tu.snapshots.front(), m);
  run.result("duhamel.relative", d);
  int status = eb.relative_residual() <= cfg.tol_energy && d <= cfg.tol_duhamel ? 0 : 1;
  if (!b_traj.empty()) {
    const StarNormReport s = star_norms(tb, cfg.r, cfg.eta);
    write_star_csv(run.dir() / "star.csv", s);
    run.output("star.csv");
    run.result("star.all_pass", s.all_pass() ? "1" : "0");
    const double vr = v_residual(tu, tb, m);
    run.result("v_residual.relative", vr);
    if (vr > cfg.tol_duhamel) status = 1;
  }
  run.finish();
  std::printf("energy residual %.3e, Duhamel residual %.3e\n", eb.relative_residual(), d);
  return status;
}

int cmd_bounds(const Common& c, const std::string& u0_path) {
  const RunConfig cfg = load_config(c);
  const VectorField u0 = initial_field(cfg, u0_path, nullptr);
  const SplitResult s = calderon_split(u0, cfg.split());
  BoundInputs in;
  in.u0_norm = weighted_lp_norm(u0, cfg.p, cfg.gamma).value;
  in.b0_norm = s.achieved_b_norm;
  in.v0_norm = s.achieved_v_norm;
  in.epsilon = cfg.epsilon;
  in.alpha = cfg.alpha;
  in.r = cfg.r;
  in.eta = cfg.eta;
  in.C0 = cfg.C0;
  in.C1 = cfg.C1;
  in.C2 = cfg.C2;
  ExistenceBounds eb = existence_bounds(in);
  std::string lambda_note;
  try {
    const LambdaSearch ls = choose_lambda(s.v0, cfg.T, cfg.C2);
    eb.lambda_T = ls.lambda_T;
    eb.alpha_T = ls.alpha_T;
  } catch (const ResolutionError& e) {
    lambda_note = e.what();
  }
  std::ostringstream os;
  os << "T_eps_alpha=" << format_double(eb.T_eps_alpha) << "\nT_eta=" << format_double(eb.T_eta)
     << "\nT_eta_eps_alpha=" << format_double(eb.T_eta_eps_alpha) << "\nT_global=" << format_double(eb.T_global)
     << "\nlambda_T=" << format_double(eb.lambda_T) << "\nalpha_T=" << format_double(eb.alpha_T)
     << "\neta_T=" << format_double(eta_for_horizon(cfg.T, cfg.r, cfg.C1, cfg.C2)) << "\n";
  if (!lambda_note.empty()) os << "lambda_error=" << lambda_note << "\n";
  std::cout << os.str();
  if (!c.out.empty()) {
    Run run(c, cfg);
    if (!u0_path.empty()) run.input(u0_path);
    std::ofstream(run.dir() / "bounds.txt") << os.str();
    run.output("bounds.txt");
    run.finish();
  }
  return 0;
}

int cmd_rescale(const Common& c, const std::string& u0_path) {
  const RunConfig cfg = load_config(c);
  Run run(c, cfg);
  const VectorField u0 = initial_field(cfg, u0_path, &run);
  const RescaleReport r = rescale_consistency(u0, cfg.solver(), cfg.lambda);
  {
    std::ofstream out(run.dir() / "rescale.csv");
    out << "time,relative_discrepancy\n";
    for (std::size_t k = 0; k < r.times.size(); ++k) out << format_double(r.times[k]) << ',' << format_double(r.per_time[k]) << '\n';
  }
  run.output("rescale.csv");
  run.result("discrepancy", r.discrepancy);
  run.finish();
  std::printf("max relative discrepancy %.3e (tol %.1e)\n", r.discrepancy, cfg.tol_rescale);
  return r.discrepancy <= cfg.tol_rescale ? 0 : 1;
}

int cmd_converge(const Common& c, const std::string& u0_path, bool freeze) {
  const RunConfig cfg = load_config(c);
  Run run(c, cfg);
  const VectorField u0 = initial_field(cfg, u0_path, &run);
  const ConvergenceReport r = convergence_study(cfg, u0, cfg.levels, worker_count(), freeze);
  {
    std::ofstream out(run.dir() / "distance.csv");
    out << "m,n,epsilon_m,alpha_m,epsilon_n,alpha_n,distance\n";
    for (int a = 0; a < cfg.levels; ++a)
      for (int b = 0; b < cfg.levels; ++b) {
        out << a << ',' << b << ',' << format_double(r.epsilons[a]) << ',' << format_double(r.alphas[a]) << ','
            << format_double(r.epsilons[b]) << ',' << format_double(r.alphas[b]) << ','
            << format_double(r.distance[a][b]) << '\n';
      }
  }
  {
    std::ofstream out(run.dir() / "levels.csv");
    out << "level,epsilon,alpha,consecutive_distance,tail_max,nse_residual\n";
    for (int a = 0; a < cfg.levels; ++a) {
      out << a << ',' << format_double(r.epsilons[a]) << ',' << format_double(r.alphas[a]) << ','
          << (a + 1 < cfg.levels ? format_double(r.consecutive[a]) : "") << ','
          << (a + 1 < cfg.levels ? format_double(r.tail_max[a]) : "") << ',' << format_double(r.nse_residual[a])
          << '\n';
    }
  }
  run.output("distance.csv");
  run.output("levels.csv");
  run.result("cauchy", r.cauchy ? "1" : "0");
  run.result("consecutive_decreasing", r.consecutive_decreasing ? "1" : "0");
  run.result("triangle_ok", r.triangle_ok ? "1" : "0");
  run.finish();
  std::printf("consecutive distances decreasing: %s; tail max decreasing: %s; NSE residual %.3e -> %.3e\n",
              r.consecutive_decreasing ? "yes" : "no", r.cauchy ? "yes" : "no", r.nse_residual.front(),
              r.nse_residual.back());
  return r.cauchy ? 0 : 1;
}

int cmd_pipeline(const Common& c, const std::string& u0_path) {
  const RunConfig cfg = load_config(c);
  std::optional<VectorField> u0;
  if (!u0_path.empty()) u0 = initial_field(cfg, u0_path, nullptr);
  const PipelineResult r = pipeline(cfg, c.out, u0 ? &*u0 : nullptr);
  for (const auto& [k, v] : r.manifest.stages) std::printf("stage %-14s %s\n", k.c_str(), v.c_str());
  for (const auto& [k, v] : r.checks) std::printf("check %-14s %s\n", k.c_str(), v.c_str());
  return r.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Navier-Stokes experiments"};
  app.require_subcommand(1);
  Common c;
  std::string u0_path, traj, b_traj;
  double star_r = 0.0;
  bool freeze = false;

  auto* gen = app.add_subcommand("gen-field", "generate the configured test field as u0.wnsf");
  add_common(gen, c, true);
  auto* split = app.add_subcommand("split", "threshold split u0 = v0 + b0");
  add_common(split, c, true);
  split->add_option("--u0", u0_path, "initial field (default: generated from the config)");
  auto* solve = app.add_subcommand("solve", "integrate the mollified equations");
  add_common(solve, c, true);
  solve->add_option("--u0", u0_path, "initial field (default: generated from the config)");
  solve->add_option("--star-r", star_r, "also record star-norm components for this r");
  auto* diag = app.add_subcommand("diagnose", "energy budget, Duhamel and star-norm diagnostics of saved runs");
  add_common(diag, c, true);
  diag->add_option("--traj", traj, "trajectory directory of u")->required();
  diag->add_option("--b-traj", b_traj, "trajectory directory of b (default: b = 0)");
  auto* bounds = app.add_subcommand("bounds", "existence horizons and the rescaling parameter");
  add_common(bounds, c, false);
  bounds->add_option("--u0", u0_path, "initial field (default: generated from the config)");
  auto* resc = app.add_subcommand("rescale-check", "rescaling consistency at the configured lambda");
  add_common(resc, c, true);
  resc->add_option("--u0", u0_path, "initial field (default: generated from the config)");
  auto* conv = app.add_subcommand("converge", "halving study over (epsilon, alpha)");
  add_common(conv, c, true);
  conv->add_option("--u0", u0_path, "initial field (default: generated from the config)");
  conv->add_flag("--freeze-epsilon", freeze, "keep epsilon fixed (control run)");
  auto* pipe = app.add_subcommand("pipeline", "split, solve u and b, diagnose, bounds");
  add_common(pipe, c, true);
  pipe->add_option("--u0", u0_path, "initial field (default: generated from the config)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen_field(c);
    if (*split) return cmd_split(c, u0_path);
    if (*solve) return cmd_solve(c, u0_path, star_r);
    if (*diag) return cmd_diagnose(c, traj, b_traj);
    if (*bounds) return cmd_bounds(c, u0_path);
    if (*resc) return cmd_rescale(c, u0_path);
    if (*conv) return cmd_converge(c, u0_path, freeze);
    if (*pipe) return cmd_pipeline(c, u0_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wns: %s\n", e.what());
    return 2;
  }
  return 0;
}
