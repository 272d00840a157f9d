#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>
#include <random>

#include "wns/testfields.hpp"
#include "wns/weighted.hpp"

using namespace wns;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField constant_field(const Grid& g, double c) {
  ScalarField f(g);
  for (auto& v : f.data) v = c;
  return f;
}

// sqrt(t) * integral over the cube [-L/2, L/2]^3 of (sqrt(t) + |y|)^-4. The
// radial part has the closed form
//   int_0^R r^2 (a + r)^-4 dr = 1/(3a) - 1/(a+R) + a/(a+R)^2 - a^2/(3 (a+R)^3),
// and the cube enters through R(omega) = (L/2) / max_i |omega_i|.
double cube_kernel_integral(double t, double L) {
  const double a = std::sqrt(t);
  auto radial = [a](double R) {
    const double s = a + R;
    return 1.0 / (3.0 * a) - 1.0 / s + a / (s * s) - a * a / (3.0 * s * s * s);
  };
  using boost::math::quadrature::gauss_kronrod;
  using GK = gauss_kronrod<double, 31>;
  // One octant. For fixed cos(theta) the integrand in phi is smooth between the
  // angles where the face attaining max_i |omega_i| changes.
  auto over_phi = [&](double ct) {
    const double st = std::sqrt(1.0 - ct * ct);
    auto f = [&](double phi) {
      const double m = std::max({st * std::cos(phi), st * std::sin(phi), ct});
      return radial(0.5 * L / m);
    };
    std::vector<double> cuts{0.0, kPi / 4, kPi / 2};
    if (ct < st) {
      cuts.push_back(std::acos(ct / st));
      cuts.push_back(std::asin(ct / st));
    }
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] > cuts[k]) acc += GK::integrate(f, cuts[k], cuts[k + 1], 0);
    }
    return acc;
  };
  const double c3 = 1.0 / std::sqrt(3.0), c2 = 1.0 / std::sqrt(2.0);
  const double octant = GK::integrate(over_phi, 0.0, c3, 6, 1e-12) + GK::integrate(over_phi, c3, c2, 6, 1e-12) +
                        GK::integrate(over_phi, c2, 1.0, 6, 1e-12);
  return a * 8.0 * octant;
}

}  // namespace

TEST_CASE("weight values") {
  CHECK(weight_value(2.0, {0.0, 0.0, 0.0}) == 1.0);
  CHECK_THAT(weight_value(2.0, {1.0, 0.0, 0.0}), WithinRel(0.5, 1e-15));
  CHECK_THAT(weight_value(4.0, {0.0, 3.0, 0.0}), WithinRel(0.01, 1e-14));
  CHECK_THAT(weight_value(4.0, {1.0, 2.0, 2.0}), WithinRel(0.01, 1e-14));
}

TEST_CASE("weighted L^p norms") {
  const Grid g(32, 16.0);
  SECTION("zero field") { CHECK(weighted_lp_norm(VectorField(g), 3.0, 2.0).value == 0.0); }
  SECTION("gamma = 0 matches plain quadrature") {
    std::mt19937_64 rng(3);
    const ScalarField f = random_band_limited(g, rng, 6);
    double s = 0.0;
    for (double v : f.data) s += std::pow(std::abs(v), 3.0);
    CHECK_THAT(weighted_lp_norm(f, 3.0, 0.0).value, WithinRel(std::cbrt(s * g.cell_volume()), 1e-13));
  }
  SECTION("report fields") {
    const NormReport r = weighted_lp_norm(constant_field(g, 1.0), 2.0, 4.0);
    CHECK(r.kind == NormKind::lebesgue);
    CHECK(r.p_or_s == 2.0);
    CHECK(r.gamma == 4.0);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(weighted_lp_norm(constant_field(g, 1.0), 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_lp_norm(constant_field(g, 1.0), kInf, 1.0), std::invalid_argument);
    CHECK(weighted_lp_norm(constant_field(g, -2.0), kInf, 0.0).value == 2.0);
  }
  SECTION("||1||^2_{L^2(Phi_4)} approaches pi^2") {
    // Box tail ~ c / L, so 2 I(2L) - I(L) removes it to leading order.
    const double i32 = std::pow(weighted_lp_norm(constant_field(Grid(64, 32.0), 1.0), 2.0, 4.0).value, 2);
    const double i64 = std::pow(weighted_lp_norm(constant_field(Grid(128, 64.0), 1.0), 2.0, 4.0).value, 2);
    const double rich = 2.0 * i64 - i32;
    INFO("I(32)=" << i32 << " I(64)=" << i64 << " extrapolated=" << rich);
    CHECK(std::abs(i64 - kPi * kPi) < std::abs(i32 - kPi * kPi));
    CHECK_THAT(rich, WithinRel(kPi * kPi, 1e-2));
  }
}

TEST_CASE("weighted H^s norms") {
  const Grid g(32, 16.0);
  std::mt19937_64 rng(29);
  SECTION("s = 0 equals the weighted L^2 norm") {
    const VectorField u = random_localized_field(g, rng, 6, 2.0);
    CHECK_THAT(weighted_hs_norm(u, 0.0, 3.0).value, WithinRel(weighted_lp_norm(u, 2.0, 3.0).value, 1e-12));
  }
  SECTION("single mode with gamma = 0") {
    VectorField u(g);
    const double k = 2.0 * kPi * 3.0 / g.length();
    g.for_each_node([&](int, int, int, std::size_t i, const std::array<double, 3>& x) {
      u.c[0][i] = std::cos(k * x[1]);
    });
    for (double s : {-4.0, -1.0, 1.5, 3.0}) {
      CHECK_THAT(weighted_hs_norm(u, s, 0.0).value,
                 WithinRel(std::pow(1.0 + k * k, s / 2.0) * l2_norm(u), 1e-12));
    }
  }
  SECTION("|s| > 8 rejected") { CHECK_THROWS(weighted_hs_norm(VectorField(g), 9.0, 0.0)); }
  SECTION("monotone in s") {
    for (int k = 0; k < 5; ++k) {
      const VectorField u = random_localized_field(g, rng, 8, 2.0);
      double prev = 0.0;
      for (double s : {-4.0, -2.0, -0.5, 0.0, 1.0, 2.0}) {
        const double v = weighted_hs_norm(u, s, 4.0).value;
        CHECK(v >= prev);
        prev = v;
      }
    }
  }
  SECTION("gradient bound and two-sided equivalence with field-independent constants") {
    // Two independent batches must give constants within a factor of 2.
    auto batch = [&](std::uint64_t seed) {
      std::mt19937_64 r(seed);
      double c_grad = 0.0, lo = kInf, hi = 0.0;
      for (int k = 0; k < 25; ++k) {
        const VectorField u = random_localized_field(g, r, 8, 2.0);
        const double hs = weighted_hs_norm(u, 1.0, 2.0).value;
        const double gr = weighted_hs_norm(gradient_tensor(u), 0.0, 2.0).value;
        const double l2 = weighted_lp_norm(u, 2.0, 2.0).value;
        c_grad = std::max(c_grad, gr / hs);
        lo = std::min(lo, hs / (l2 + gr));
        hi = std::max(hi, hs / (l2 + gr));
      }
      return std::array<double, 3>{c_grad, lo, hi};
    };
    const auto a = batch(101), b = batch(202);
    WARN("gradient constant " << a[0] << ", equivalence constants [" << a[1] << ", " << a[2] << "]");
    for (int i = 0; i < 3; ++i) {
      CHECK(std::isfinite(a[i]));
      CHECK(a[i] > 0.0);
      CHECK(std::max(a[i], b[i]) / std::min(a[i], b[i]) < 2.0);
    }
  }
}

TEST_CASE("weighted norm inequalities") {
  const Grid g(32, 16.0);
  std::mt19937_64 rng(31);
  SECTION("monotone in gamma") {
    for (int k = 0; k < 10; ++k) {
      const VectorField u = random_vector_field(g, rng, 5);
      for (double p : {1.0, 2.0, 4.5}) {
        double prev = kInf;
        for (double gm : {-1.0, 0.0, 0.5, 2.0, 4.0, 8.0}) {
          const double v = weighted_lp_norm(u, p, gm).value;
          CHECK(v <= prev);
          prev = v;
        }
      }
    }
  }
  SECTION("Hoelder duality") {
    for (int k = 0; k < 20; ++k) {
      const ScalarField u = random_band_limited(g, rng, 6);
      const ScalarField v = random_band_limited(g, rng, 6);
      for (double p : {1.5, 2.0, 4.0}) {
        for (double gm : {0.0, 1.0, 3.0}) {
          double s = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) s += u[i] * v[i];
          s *= g.cell_volume();
          const double rhs = weighted_lp_norm(u, p, gm).value *
                             weighted_lp_norm(v, p / (p - 1.0), -gm / (p - 1.0)).value;
          CHECK(std::abs(s) <= rhs * (1.0 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("kernel bound check") {
  SECTION("zero density gives ratio zero") {
    const Grid g(16, 8.0);
    CHECK(std::sqrt(1.0) * weighted_lp_norm(kernel_convolve(ScalarField(g), 1.0), 2.0, 4.0).value == 0.0);
  }
  SECTION("t outside (0, 1] rejected") {
    const Grid g(16, 8.0);
    CHECK_THROWS(kernel_bound_check(g, 0.0, 2.0, 4.0, 1, 1));
    CHECK_THROWS(kernel_bound_check(g, 1.5, 2.0, 4.0, 1, 1));
    CHECK_THROWS(kernel_convolve(ScalarField(g), -1.0));
  }
  SECTION("p = inf, gamma = 0: constant density matches the cube-integral oracle") {
    const Grid g(32, 16.0);
    const ScalarField one = constant_field(g, 1.0);
    for (double t : {1.0, 0.25, 0.0625}) {
      const double ratio = std::sqrt(t) * weighted_lp_norm(kernel_convolve(one, t), kInf, 0.0).value;
      const double oracle = cube_kernel_integral(t, g.length());
      INFO("t=" << t << " ratio=" << ratio << " oracle=" << oracle);
      CHECK_THAT(ratio, WithinRel(oracle, 1e-2));
      // the whole-space value 4 pi / 3 bounds it from above
      CHECK(ratio < 4.0 * kPi / 3.0);
    }
  }
  SECTION("p = 2, gamma = 4: ratios agree within 2x across t") {
    const Grid g(32, 16.0);
    std::vector<double> m;
    for (double t : {1.0, 0.25, 0.0625}) m.push_back(kernel_bound_check(g, t, 2.0, 4.0, 4, 77).max_ratio);
    const double hi = *std::max_element(m.begin(), m.end()), lo = *std::min_element(m.begin(), m.end());
    INFO(m[0] << " " << m[1] << " " << m[2]);
    CHECK(hi / lo < 2.0);
  }
}

TEST_CASE("norm CSV rows") {
  const auto path = std::filesystem::temp_directory_path() / "wns_norms_test.csv";
  std::filesystem::remove(path);
  append_norm_csv(path, 0.5, NormReport{1.25, 2.0, 4.0, NormKind::lebesgue});
  append_norm_csv(path, 1.0, NormReport{0.75, -4.0, 8.0, NormKind::sobolev});
  std::ifstream in(path);
  std::string header, a, b;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  CHECK(header == "time,kind,p_or_s,gamma,value");
  CHECK(a == "0.5,lebesgue,2,4,1.25");
  CHECK(b == "1,sobolev,-4,8,0.75");
  std::filesystem::remove(path);
}
