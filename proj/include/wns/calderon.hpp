#pragma once

// Splitting divergence-free data u0 into v0 (finite weighted energy) plus a
// small L^r part b0, by thresholding |u0| against A * Phi^mu.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wns/weighted.hpp"

namespace wns {

struct SplitConfig {
  double p = 4.0;
  double gamma = 1.0;
  double r = 6.0;
  double eta = 0.1;

  double r0() const { return 2.0 * (p - gamma) / (2.0 - gamma); }
  double delta() const { return (0.5 - 1.0 / r0()) / (0.5 - 1.0 / r); }
  /// Threshold decay exponent.
  double mu() const { return (2.0 - gamma) / (p - 2.0); }

  // r = r0 is admitted: the thresholding inequality only needs mu (r - p) >= gamma.
  void validate() const {
    if (!(p > 2.0) || !std::isfinite(p)) throw std::invalid_argument("split: p must lie in (2, inf)");
    if (!(gamma > 0.0 && gamma < 2.0)) throw std::invalid_argument("split: gamma must lie in (0, 2)");
    if (!(r > 3.0)) throw std::invalid_argument("split: r must exceed 3");
    if (r < r0() * (1.0 - 1e-12)) {
      throw std::invalid_argument("split: r = " + std::to_string(r) + " is below r0 = " +
                                  std::to_string(r0()));
    }
    if (!(eta > 0.0)) throw std::invalid_argument("split: eta must be positive");
  }
};

class ThresholdSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pointwise partition; returns (v_raw, b_raw).
inline std::pair<VectorField, VectorField> threshold_split(const VectorField& u0,
                                                           const SplitConfig& cfg, double A) {
  if (!(A > 0.0)) throw std::invalid_argument("threshold_split: A must be positive");
  const double mu = cfg.mu();
  VectorField v(u0.grid), b(u0.grid);
  u0.grid.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    const double tau = A * weight_value(mu, x);
    VectorField& dst = (u0.magnitude(i) <= tau) ? b : v;
    for (int j = 0; j < 3; ++j) dst.c[j][i] = u0.c[j][i];
  });
  return {std::move(v), std::move(b)};
}

struct ThresholdSample {
  double A;
  double raw_norm;        // ||b_raw||_r
  double projected_norm;  // ||P b_raw||_r
  double v_raw_norm;      // ||v_raw||_{L^2(Phi_2)}
};

struct ThresholdSearch {
  double A = 0.0;
  double projected_norm = 0.0;
  std::vector<ThresholdSample> trace;
};

/// Smallest threshold above which b_raw = u0.
inline double threshold_ceiling(const VectorField& u0, const SplitConfig& cfg) {
  double a = 0.0;
  u0.grid.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
    a = std::max(a, u0.magnitude(i) / weight_value(cfg.mu(), x));
  });
  return a;
}

inline ThresholdSample evaluate_threshold(const VectorField& u0, const SplitConfig& cfg, double A) {
  auto [v_raw, b_raw] = threshold_split(u0, cfg, A);
  const double raw = weighted_lp_norm(b_raw, cfg.r, 0.0).value;
  const double proj = weighted_lp_norm(leray_project(b_raw), cfg.r, 0.0).value;
  return {A, raw, proj, weighted_lp_norm(v_raw, 2.0, 2.0).value};
}

/// Bisection in log A until ||P b_raw||_r lies in [0.5 eta, 0.9 eta]. When the
/// bracket closes first, the largest A seen with norm below 0.9 eta is kept.
inline ThresholdSearch choose_threshold(const VectorField& u0, const SplitConfig& cfg) {
  cfg.validate();
  const double a_hi0 = threshold_ceiling(u0, cfg);
  if (!(a_hi0 > 0.0)) throw std::invalid_argument("choose_threshold: u0 must be nonzero");
  const double hi_target = 0.9 * cfg.eta, lo_target = 0.5 * cfg.eta;
  ThresholdSearch out;
  auto probe = [&](double A) {
    out.trace.push_back(evaluate_threshold(u0, cfg, A));
    return out.trace.back();
  };

  ThresholdSample s = probe(a_hi0);
  if (s.projected_norm < hi_target) {
    out.A = s.A;
    out.projected_norm = s.projected_norm;
    return out;
  }
  double a_hi = a_hi0;
  double a_lo = a_hi0;
  ThresholdSample best{0.0, 0.0, kInf, 0.0};
  for (;;) {
    a_lo *= 0.1;
    if (a_lo < a_hi0 * 1e-15) {
      throw ThresholdSearchError("choose_threshold: no threshold gives ||P b||_r < " +
                                 std::to_string(hi_target) + "; grid too coarse or eta too small");
    }
    s = probe(a_lo);
    if (s.projected_norm < hi_target) break;
    a_hi = a_lo;
  }
  best = s;
  if (s.projected_norm >= lo_target) {
    out.A = s.A;
    out.projected_norm = s.projected_norm;
    return out;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = std::sqrt(a_lo * a_hi);
    s = probe(mid);
    if (s.projected_norm < hi_target) {
      if (s.A > best.A) best = s;
      if (s.projected_norm >= lo_target) break;
      a_lo = mid;
    } else {
      a_hi = mid;
    }
    if (a_hi / a_lo < 1.0 + 1e-12) break;
  }
  out.A = best.A;
  out.projected_norm = best.projected_norm;
  return out;
}

struct SplitResult {
  VectorField v0;
  VectorField b0;
  double threshold_A = 0.0;
  double mu = 0.0;
  double achieved_b_norm = 0.0;  // ||b0||_r
  double achieved_v_norm = 0.0;  // ||v0||_{L^2(Phi_2)}
  std::vector<ThresholdSample> trace;
};

inline SplitResult calderon_split(const VectorField& u0, const SplitConfig& cfg) {
  cfg.validate();
  const double nu = l2_norm(u0);
  if (nu > 0.0 && divergence_residual(u0) > 1e-10) {
    throw std::invalid_argument("calderon_split: u0 is not divergence-free");
  }
  SplitResult res{VectorField(u0.grid), VectorField(u0.grid), 0.0, cfg.mu(), 0.0, 0.0, {}};
  if (nu == 0.0) {
    res.threshold_A = 1.0;
    return res;
  }
  ThresholdSearch search = choose_threshold(u0, cfg);
  auto [v_raw, b_raw] = threshold_split(u0, cfg, search.A);
  res.b0 = leray_project(b_raw);
  res.v0 = u0 - res.b0;
  res.threshold_A = search.A;
  res.achieved_b_norm = weighted_lp_norm(res.b0, cfg.r, 0.0).value;
  res.achieved_v_norm = weighted_lp_norm(res.v0, 2.0, 2.0).value;
  res.trace = std::move(search.trace);
  return res;
}

}  // namespace wns
