#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gaugelab/estimates.hpp"
#include "support.hpp"

using namespace gaugelab;
using namespace gaugelab::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Sampled sampled(double L, int n, const std::function<double(double)>& fn) {
  Sampled s{-L, L, std::vector<double>(n)};
  for (int i = 0; i < n; ++i) s.v[i] = fn(s.x(i));
  return s;
}

}  // namespace

TEST_CASE("log-log slope and fingerprints") {
  CHECK(loglog_slope({{1, 3}, {10, 300}, {100, 30000}}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(loglog_slope({{1, 1}}), Error);
  CHECK(fingerprint_hex("a") == fingerprint_hex("a"));
  CHECK(fingerprint_hex("a") != fingerprint_hex("b"));
  CHECK(fingerprint_hex("").size() == 16);
}

TEST_CASE("window inequality: trivial and closed-form cases") {
  SUBCASE("e = 0, g = f") {
    auto f = sampled(2.0, 201, [](double x) { return 1.0 + std::sin(x) * std::sin(x); });
    auto e = sampled(2.0, 201, [](double) { return 0.0; });
    const EstimateReport r = check_gslemma(e, f, f, 1.0, 1.0);
    CHECK(r.pass);
    CHECK(r.constants.at("slack") >= 0.0);
  }
  SUBCASE("cosine profile with clipped second derivative") {
    const double R = 1.5, r = 0.5, L = R + r, k = kPi / L;
    const int n = 801;
    auto e = sampled(L, n, [&](double x) { return std::cos(k * x) + 1.0; });
    Sampled f = e, g = e;
    const double h = e.step();
    for (int i = 0; i < n; ++i) {
      const int a = std::clamp(i, 1, n - 2);
      const double e2 = (e.v[a - 1] - 2.0 * e.v[a] + e.v[a + 1]) / (h * h);
      g.v[i] = std::max(e2, 0.0);
      f.v[i] = std::max(-e2, 0.0);
    }
    const EstimateReport rep = check_gslemma(e, f, g, R, r);
    const double lhs = 2.0 * k * (1.0 - std::sin(k * R));
    const double rhs = 2.0 * k + 8.0 / (r * r) * (r - std::sin(k * R) / k);
    CHECK(rep.pass);
    CHECK(rep.constants.at("lhs") == doctest::Approx(lhs).epsilon(1e-3));
    CHECK(rep.constants.at("rhs") == doctest::Approx(rhs).epsilon(1e-3));
    MESSAGE("slack " << rep.constants.at("slack") << " closed form " << rhs - lhs);
  }
}

TEST_CASE("window inequality: preconditions are reported") {
  auto zero = sampled(2.0, 201, [](double) { return 0.0; });
  auto one = sampled(2.0, 201, [](double) { return 1.0; });
  auto neg = sampled(2.0, 201, [](double x) { return std::abs(x) > 1.5 ? -1.0 : 0.0; });
  try {
    check_gslemma(zero, one, neg, 1.0, 1.0);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("outside B_R") != std::string::npos);
  }
  try {
    check_gslemma(zero, zero, one, 1.0, 1.0);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("g <= f + e''") != std::string::npos);
  }
  CHECK_THROWS_AS(check_gslemma(zero, one, one, 1.013, 0.987), Error);  // R off the nodes
  CHECK_THROWS_AS(check_gslemma(zero, one, one, 1.0, 0.5), Error);      // wrong window
}

TEST_CASE("window inequality property test") {
  const EstimateReport r = gslemma_suite(7, 1000);
  MESSAGE("max lhs/rhs " << r.constants.at("max_ratio") << ", rejected " << r.constants.at("rejected"));
  CHECK(r.constants.at("trials") == 1000);
  CHECK(r.constants.at("violations") == 0);
  CHECK(r.pass);
  const EstimateReport again = gslemma_suite(7, 1000);
  CHECK(again.fingerprint == r.fingerprint);
  CHECK(again.constants == r.constants);
  const GsTrial t = random_gs_trial(3);
  CHECK_NOTHROW(check_gslemma(t.e, t.f, t.g, t.R, t.r));
}

TEST_CASE("NS is approximately the identity") {
  auto g = torus({6, 6});
  const Connection flat = twisted_flat(g);
  std::mt19937_64 rng(61);
  double cmax = 0.0, cmin = 1e300;
  for (int k = 0; k < 5; ++k) {
    const Cochain v = random_cochain(rng, g, 1, 2, 1.0);
    const EstimateReport r = ns_identity_scaling(flat, v, {0.03, 0.01, 0.003, 0.001, 0.0003, 0.0});
    CHECK(r.constants.at("dist_at_zero") == 0.0);
    CHECK(r.slopes.at("dist_vs_curvature") >= 0.95);
    CHECK(r.pass);
    cmax = std::max(cmax, r.constants.at("C"));
    cmin = std::min(cmin, r.constants.at("C"));
  }
  MESSAGE("C in [" << cmin << ", " << cmax << "]");
  CHECK(cmax <= 2.0 * cmin);
  const Cochain v = random_cochain(rng, g, 1, 2, 1.0);
  CHECK_THROWS_AS(ns_identity_scaling(flat, v, {0.01, 0.003, 0.001}), Error);
  CHECK_THROWS_AS(ns_identity_scaling(flat, v, {0.01, 0.008, 0.006, 0.004, 0.002}), Error);
  CHECK_THROWS_AS(ns_identity_scaling(flat.with_deviation(v * 0.1), v, {0.01, 0.003, 0.001, 3e-4, 1e-4}), Error);
}

TEST_CASE("projection Lipschitz bound") {
  auto g = torus({6, 6});
  const Connection a = diagonal_flat(g);
  std::mt19937_64 rng(62);
  std::vector<Cochain> probes;
  for (int k = 0; k < 20; ++k) probes.push_back(random_cochain(rng, g, 1, 2, 1.0));
  SUBCASE("equal connections") {
    const EstimateReport r = proj_lipschitz(a, a, probes, 2);
    CHECK(r.constants.at("op_norm") == 0.0);
    CHECK(r.constants.at("probe_sup") == 0.0);
  }
  SUBCASE("abelian constant pair matches the Fourier projector") {
    // the lowest modes stay constant on both sides, so the projectors agree
    const Connection b = diagonal_flat(g, 0.3, 0.2);
    const EstimateReport r = proj_lipschitz(a, b, probes, 2);
    CHECK(r.constants.at("op_norm") < 1e-10);
    auto triv = flat_connection(build_twisted_reference(TwistSpec{2, {}}, g), hodge_weights(*g, 1.0));
    CHECK(proj_lipschitz(triv, diagonal_flat(g, 0.05, 0.02), probes, 6).constants.at("op_norm") < 1e-10);
  }
  SUBCASE("shrinking family") {
    const Cochain w = random_cochain(rng, g, 1, 2, 1.0);
    const EstimateReport r = proj_lipschitz_family(a, w, {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, 2);
    MESSAGE("slope " << r.slopes.at("op_norm_vs_distance") << " C " << r.constants.at("C"));
    CHECK(r.slopes.at("op_norm_vs_distance") >= 1.0);
    CHECK(r.pass);
    const EstimateReport p = proj_lipschitz(a, a.with_deviation(a.a() + w * 1e-3), probes, 2);
    CHECK(p.pass);  // probe sup never exceeds the operator norm
    CHECK(p.constants.at("probe_sup") > 0.0);
  }
}

TEST_CASE("elliptic constants") {
  SUBCASE("trivial connection against the Fourier gap") {
    auto g = torus({6, 8}, {}, {0.5, 0.5});
    auto triv = flat_connection(build_twisted_reference(TwistSpec{2, {}}, g), hodge_weights(*g, 1.0));
    std::mt19937_64 rng(63);
    const EstimateReport r = elliptic_constant_probe({triv}, 6, {random_cochain(rng, g, 1, 2, 1.0)});
    const double gap = 4.0 / 0.25 * std::pow(std::sin(kPi / 8.0), 2);
    CHECK(r.constants.at("C1") == doctest::Approx(1.0 / std::sqrt(gap)).epsilon(1e-10));
    CHECK(r.constants.count("C0") == 0);
    CHECK(r.pass);
  }
  SUBCASE("harmonic probes have no left side") {
    auto g = torus({6, 6});
    const Connection a = diagonal_flat(g);
    const HarmonicBasis H = harmonic_frame(a, 2);
    const EstimateReport r = elliptic_constant_probe({a}, 2, H.vectors);
    CHECK(r.constants.at("C1_probe") < 1e-6);
  }
  SUBCASE("stability along a twisted family") {
    auto g = torus({6, 6});
    const Connection flat = twisted_flat(g);
    std::mt19937_64 rng(64);
    const Cochain w = random_cochain(rng, g, 1, 2, 1.0);
    std::vector<Connection> fam;
    for (double t : {0.1, 0.05, 0.02, 0.01, 0.005}) fam.push_back(flat.with_deviation(w * t));
    std::vector<Cochain> probes;
    for (int k = 0; k < 10; ++k) probes.push_back(random_cochain(rng, g, 1, 2, 1.0));
    const EstimateReport r = elliptic_constant_probe(fam, 0, probes);
    MESSAGE("C1 in [" << r.constants.at("C1_min") << ", " << r.constants.at("C1") << "], C0 in ["
                      << r.constants.at("C0_min") << ", " << r.constants.at("C0") << "]");
    CHECK(r.constants.at("C1_probe") <= r.constants.at("C1"));
    CHECK(r.pass);
  }
}

TEST_CASE("linearization defect") {
  auto g = torus({6, 6});
  const Connection a = diagonal_flat(g);
  SUBCASE("flat connection") {
    const EstimateReport r = linearization_defect(a, 2);
    CHECK(r.constants.at("f") < 1e-8);
  }
  SUBCASE("decay along a curvature-shrinking family") {
    std::mt19937_64 rng(65);
    const Cochain w = random_cochain(rng, g, 1, 2, 1.0);
    std::vector<Connection> fam;
    for (double t : {0.004, 0.002, 0.001, 0.0004}) fam.push_back(a.with_deviation(a.a() + w * t));
    const EstimateReport r = linearization_family(fam, 2);
    for (const auto& [F, f] : r.points) MESSAGE("|F| " << F << " f " << f);
    CHECK(r.constants.at("decreasing") == 1.0);
    CHECK(r.constants.at("f_end") <= 0.1 * r.constants.at("f_start"));
    CHECK(r.pass);
  }
  SUBCASE("step-halving ambiguity is an error") {
    std::mt19937_64 rng(66);
    const Connection c = a.with_deviation(a.a() + random_cochain(rng, g, 1, 2, 0.002));
    FDOptions opt;
    opt.agreement = 1e-15;
    CHECK_THROWS_AS(linearization_defect(c, 2, {}, opt), Error);
  }
}

TEST_CASE("complex linearity of the derivative of Pi o NS") {
  auto g = torus({6, 6});
  const Connection a = diagonal_flat(g);
  const HarmonicBasis H = harmonic_frame(a, 2);
  SUBCASE("harmonic directions at a flat connection") {
    const EstimateReport r = complex_linearity_check(a, 2, H.vectors);
    CHECK(r.constants.at("defect") <= 1e-8);
    CHECK(r.constants.at("frame_star_defect") < 1e-12);
  }
  SUBCASE("exact and coexact directions lie in the kernel") {
    std::mt19937_64 rng(67);
    const CovariantComplex ops(a);
    const Cochain exact = ops.d(random_cochain(rng, g, 0, 2, 1.0));
    const Cochain coexact = ops.dstar(random_cochain(rng, g, 2, 2, 1.0));
    const EstimateReport r = complex_linearity_check(a, 2, {exact, coexact});
    CHECK(r.constants.at("max_derivative") <= FDOptions{}.floor);
    CHECK(r.pass);
  }
  SUBCASE("random directions at small curvature") {
    std::mt19937_64 rng(68);
    const Connection c = a.with_deviation(a.a() + random_cochain(rng, g, 1, 2, 0.002));
    std::vector<Cochain> probes;
    for (int k = 0; k < 3; ++k) probes.push_back(random_cochain(rng, g, 1, 2, 1.0));
    const EstimateReport r = complex_linearity_check(c, 2, probes);
    MESSAGE("relative defect " << r.constants.at("relative_defect") << ", halving gap " << r.constants.at("halving_gap"));
    CHECK(r.constants.at("halving_gap") <= 0.1);
    CHECK(r.pass);
  }
  CHECK_THROWS_AS(complex_linearity_check(a, 0, H.vectors), Error);
}

TEST_CASE("bump profiles") {
  SUBCASE("constant profile on the whole window") {
    const BumpProfile b = make_bump(3.0, 4.0, 101, 3.0);
    CHECK(b.C0 == 0.0);
    for (double v : b.h.v) CHECK(v == 1.0);
  }
  SUBCASE("quintic ramp") {
    auto fd_error = [](const BumpProfile& b) {
      const double h = b.h.step();
      double worst = 0.0;
      for (std::size_t i = 1; i + 1 < b.h.v.size(); ++i) {
        worst = std::max(worst, std::abs((b.h.v[i + 1] - b.h.v[i - 1]) / (2.0 * h) - b.dh[i]));
        worst = std::max(worst, std::abs((b.h.v[i + 1] - 2.0 * b.h.v[i] + b.h.v[i - 1]) / (h * h) - b.d2h[i]));
      }
      return worst;
    };
    const BumpProfile b = make_bump(1.0, 2.0, 401, 2.5);
    for (std::size_t i = 0; i < b.h.v.size(); ++i) {
      const double s = std::abs(b.h.x(i));
      if (s <= 1.0) CHECK(b.h.v[i] == 1.0);
      if (s >= 2.0) CHECK(b.h.v[i] == 0.0);
      CHECK(b.h.v[i] >= 0.0);
      if (b.h.v[i] >= b.level) CHECK(std::abs(b.dh[i]) + std::abs(b.d2h[i]) <= b.C0 * b.h.v[i] * (1.0 + 1e-12));
    }
    CHECK(std::isfinite(b.C0));
    CHECK(b.C0_samples <= b.C0);
    // spline derivatives against differences; C2 junctions give first-order convergence
    const double e1 = fd_error(b), e2 = fd_error(make_bump(1.0, 2.0, 801, 2.5));
    MESSAGE("difference errors " << e1 << " -> " << e2);
    CHECK(e1 < 0.2);
    CHECK(e2 < 0.6 * e1);
    // dense sampling of the superlevel set stays under C0
    const BumpProfile d = make_bump(1.0, 2.0, 100001, 2.5);
    CHECK(d.C0_samples <= b.C0 * (1.0 + 1e-6));
  }
  SUBCASE("C0 grows as the core approaches the support") {
    double prev = 0.0;
    for (double s : {2.0, 1.6, 1.3, 1.15}) {
      const double c0 = make_bump(1.0, s, 801, 2.5).C0;
      CHECK(c0 > prev);
      prev = c0;
    }
    CHECK(make_bump(1.0, 2.0, 801, 2.5, 1e-3).C0 > make_bump(1.0, 2.0, 801, 2.5, 1e-2).C0);
  }
  CHECK_THROWS_AS(make_bump(1.0, 1.0, 101, 2.0), Error);
  CHECK_THROWS_AS(make_bump(1.0, 1.01, 101, 2.0), Error);
  CHECK_THROWS_AS(make_bump(1.0, 2.0, 2), Error);
}
