#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

using namespace gaugelab;
using namespace gaugelab::testing;

namespace {

constexpr double kPi = std::numbers::pi;

ReferencePtr trivial_ref(GridPtr g, int n = 2) { return build_twisted_reference(TwistSpec{n, {}}, std::move(g)); }

ReferencePtr twisted_ref(GridPtr g, int n = 2, int value = 1, int a = 0, int b = 1) {
  return build_twisted_reference(TwistSpec{n, {Flux{a, b, value}}}, std::move(g));
}

// integrated 1-cochain from a smooth coordinate field A(axis, midpoint) on a unit-length torus
template <class F>
Cochain smooth_one_form(GridPtr g, int n, F&& field) {
  Cochain a(g, 1, n);
  const Grid& G = *g;
  const long nv = G.vertices();
  int x[4];
  const int gd = a.gdim();
  std::vector<double> vals(gd);
  for (int i = 0; i < G.dim(); ++i)
    for (long v = 0; v < nv; ++v) {
      G.coords(v, x);
      double p[4];
      for (int k = 0; k < G.dim(); ++k) p[k] = x[k] * G.spacing(k) + (k == i ? 0.5 * G.spacing(k) : 0.0);
      field(i, p, vals.data());
      for (int q = 0; q < gd; ++q) a.at(a.cell(i, v))[q] = G.spacing(i) * vals[q];
    }
  return a;
}

double max_diff(const Cochain& x, const Cochain& y) { return (x - y).max_abs(); }

GridPtr unit_torus(std::vector<int> dims, std::vector<AxisBlock> blocks = {}) {
  std::vector<double> h;
  for (int d : dims) h.push_back(1.0 / d);
  return torus(dims, blocks, h);
}

// nonabelian smooth test field of moderate size
void smooth_field(int i, const double* p, double* out) {
  out[0] = 0.6 * std::sin(2 * kPi * p[1]) + 0.2 * i;
  out[1] = 0.5 * std::cos(2 * kPi * (p[0] + p[1])) - 0.1;
  out[2] = 0.4 * std::sin(2 * kPi * p[0] + 0.3 * i);
}

}  // namespace

TEST_CASE("twisted reference on a Sigma torus") {
  auto g = torus({5, 4});
  auto ref = twisted_ref(g);
  const long nv = g->vertices();
  int minus = 0, plus = 0;
  for (long v = 0; v < nv; ++v) {
    const Complex z = ref->center[v];
    if (std::abs(z + 1.0) < 1e-13) ++minus;
    if (std::abs(z - 1.0) < 1e-13) ++plus;
  }
  CHECK(minus == 1);
  CHECK(plus == nv - 1);
  // the corner plaquette carries the flux
  int x[2] = {4, 3};
  CHECK(std::abs(ref->center[g->index(x)] + 1.0) < 1e-13);
  // adjoint transport around every plaquette is trivial
  const LieAlgebra& L = LieAlgebra::get(2);
  for (long v = 0; v < nv; ++v) {
    AdMat p = ref->ad[v] * ref->ad[nv + g->step(v, 0)] * ref->ad[g->step(v, 1)].transpose() * ref->ad[nv + v].transpose();
    CHECK((p - AdMat::Identity(3, 3)).norm() < 1e-13);
  }
  (void)L;
  // twisted flat connection has zero curvature
  auto c = flat_connection(ref, hodge_weights(*g, 1.0));
  CHECK(curvature(c).max_abs() < 1e-14);
}

TEST_CASE("twist matrices") {
  for (int n = 2; n <= 4; ++n)
    for (int m = 0; m < n; ++m) {
      auto [a, b] = twist_matrices(n, m);
      const Mat comm = a.matrix() * b.matrix() * a.matrix().adjoint() * b.matrix().adjoint();
      const Complex z = std::exp(Complex(0.0, 2.0 * kPi * m / n));
      CHECK((comm - z * Mat::Identity(n, n)).norm() < 1e-12);
      CHECK(std::abs(a.matrix().determinant() - 1.0) < 1e-12);
      CHECK(std::abs(b.matrix().determinant() - 1.0) < 1e-12);
    }
  auto [a, b] = twist_matrices(2, 1);
  Mat s1(2, 2), s2(2, 2);
  s1 << 0, 1, 1, 0;
  s2 << 0, Complex(0, -1), Complex(0, 1), 0;
  CHECK((a.matrix() - Complex(0, -1) * s1).norm() < 1e-15);
  CHECK((b.matrix() - Complex(0, -1) * s2).norm() < 1e-15);
}

TEST_CASE("twist validation") {
  auto g = torus({4, 4, 4, 4}, {AxisBlock::S, AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma});
  CHECK_THROWS_AS(twisted_ref(g, 2, 1, 0, 1), Error);
  CHECK_THROWS_AS(twisted_ref(g, 2, 2, 2, 3), Error);
  CHECK_THROWS_AS(twisted_ref(g, 2, -1, 2, 3), Error);
  CHECK_NOTHROW(twisted_ref(g, 2, 1, 2, 3));
  auto g2 = torus({4, 4, 4});
  CHECK_THROWS_AS(build_twisted_reference(TwistSpec{2, {Flux{0, 1, 1}, Flux{1, 2, 1}}}, g2), Error);
  auto r3 = twisted_ref(torus({3, 3}), 3, 1);
  int bad = 0;
  for (const Complex& z : r3->center)
    if (std::abs(z - 1.0) > 1e-12) ++bad;
  CHECK(bad == 1);
}

TEST_CASE("curvature of abelian deviations is the coboundary") {
  std::mt19937_64 rng(11);
  auto g = torus({4, 5, 3});
  auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0));
  Cochain a(g, 1, 2);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (long e = 0; e < a.cells(); ++e) a.at(e)[2] = nd(rng);
  const Connection ca = c.with_deviation(a);
  const Cochain da = coboundary(a);
  CHECK(max_diff(curvature(ca), da) < 1e-13);
  CHECK(max_diff(curvature_algebraic(ca), da) < 1e-14);
}

TEST_CASE("algebraic curvature is exactly quadratic") {
  std::mt19937_64 rng(12);
  for (int n : {2, 3}) {
    auto g = torus({3, 4, 3});
    auto c = flat_connection(twisted_ref(g, n), hodge_weights(*g, 0.7)).with_deviation(random_cochain(rng, g, 1, n, 0.4));
    const Cochain v = random_cochain(rng, g, 1, n, 0.3);
    const Cochain lhs = curvature_algebraic(c.with_deviation(c.a() + v));
    Cochain rhs = curvature_algebraic(c) + algebraic_covariant_d(c, v);
    rhs.axpy(0.5, wedge_bracket(v, v, &c.ref()->ad));
    CHECK(max_diff(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("group and algebraic curvature agree to higher order") {
  // defect scaled by the leading curvature size h^2 must fall at least linearly in h
  double prev = 0.0;
  for (int L : {16, 32, 64}) {
    auto g = unit_torus({L, L});
    auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0)).with_deviation(smooth_one_form(g, 2, smooth_field));
    const double h = 1.0 / L;
    const double e = max_diff(curvature(c), curvature_algebraic(c)) / (h * h);
    if (prev > 0.0) CHECK(prev / e > 1.8);
    prev = e;
  }
}

TEST_CASE("covariant derivative is gauge covariant and squares to curvature") {
  std::mt19937_64 rng(13);
  auto g = torus({4, 3, 4});
  auto c = flat_connection(twisted_ref(g), hodge_weights(*g, 0.5)).with_deviation(random_cochain(rng, g, 1, 2, 0.3));
  const GaugeField u = random_gauge(rng, *g);
  const Connection cu = gauge_transform(c, u);
  for (int k = 0; k < 2; ++k) {
    const Cochain x = random_cochain(rng, g, k, 2);
    CHECK(max_diff(covariant_d(cu, gauge_act(u, x)), gauge_act(u, covariant_d(c, x))) < 1e-12);
  }
  CHECK(max_diff(curvature(cu), gauge_act(u, curvature(c))) < 1e-12);
}

TEST_CASE("d_alpha d_alpha approaches the curvature bracket") {
  double prev = 0.0;
  for (int L : {8, 16, 32}) {
    auto g = unit_torus({L, L});
    auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0)).with_deviation(smooth_one_form(g, 2, smooth_field));
    Cochain xi(g, 0, 2);
    int x[2];
    for (long v = 0; v < g->vertices(); ++v) {
      g->coords(v, x);
      xi.at(v)[0] = std::cos(2 * kPi * x[0] / L);
      xi.at(v)[1] = std::sin(2 * kPi * x[1] / L);
      xi.at(v)[2] = 0.3;
    }
    const Cochain dd = covariant_d(c, covariant_d(c, xi));
    const Cochain F = curvature(c);
    Cochain br = F.zeros_like();
    const LieAlgebra& Lie = LieAlgebra::get(2);
    for (long v = 0; v < g->vertices(); ++v) Lie.bracket(F.at(v), xi.at(v), br.at(v));
    const double e = max_diff(dd, br) / F.max_abs();
    if (prev > 0.0) CHECK(prev / e > 1.7);
    prev = e;
  }
}

TEST_CASE("covariant adjoint is the weighted transpose") {
  std::mt19937_64 rng(14);
  for (auto dims : {std::vector<int>{4, 5}, std::vector<int>{3, 4, 3}, std::vector<int>{3, 3, 3, 4}}) {
    std::vector<AxisBlock> blocks(dims.size(), AxisBlock::S);
    blocks[1] = AxisBlock::Sigma;
    if (dims.size() >= 3) blocks[2] = AxisBlock::Sigma;
    auto g = torus(dims, blocks, std::vector<double>(dims.size(), 0.7));
    auto ref = dims.size() >= 3 ? twisted_ref(g, 2, 1, 1, 2) : trivial_ref(g);
    auto c = flat_connection(ref, hodge_weights(*g, 0.3)).with_deviation(random_cochain(rng, g, 1, 2, 0.5));
    for (int k = 0; k < g->dim(); ++k) {
      const Cochain x = random_cochain(rng, g, k, 2);
      const Cochain y = random_cochain(rng, g, k + 1, 2);
      const double lhs = inner_product(covariant_d(c, x), y, c.weights());
      const double rhs = inner_product(x, covariant_d_adjoint(c, y), c.weights());
      CHECK(rel(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("trivial covariant derivative reduces to the coboundary") {
  std::mt19937_64 rng(15);
  auto g = torus({4, 3, 3});
  auto c = flat_connection(trivial_ref(g, 3), hodge_weights(*g, 1.0));
  for (int k = 0; k < 3; ++k) {
    const Cochain x = random_cochain(rng, g, k, 3);
    CHECK(max_diff(covariant_d(c, x), coboundary(x)) < 1e-14);
  }
}

TEST_CASE("scalar Laplacian Fourier dispersion") {
  auto g = torus({8, 6}, {}, {0.3, 0.2});
  auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0));
  for (auto [k0, k1] : {std::pair{1, 0}, std::pair{2, 1}, std::pair{3, 3}}) {
    Cochain xi(g, 0, 2);
    int x[2];
    for (long v = 0; v < g->vertices(); ++v) {
      g->coords(v, x);
      xi.at(v)[1] = std::cos(2 * kPi * (k0 * x[0] / 8.0 + k1 * x[1] / 6.0));
    }
    const double lam = 4 * std::pow(std::sin(kPi * k0 / 8.0), 2) / 0.09 + 4 * std::pow(std::sin(kPi * k1 / 6.0), 2) / 0.04;
    const Cochain lx = covariant_d_adjoint(c, covariant_d(c, xi));
    CHECK(max_diff(lx, xi * lam) < 1e-11 * lam);
  }
}

TEST_CASE("d* F is the gradient of the Yang-Mills energy") {
  std::mt19937_64 rng(16);
  auto g = torus({3, 4, 3}, {AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma}, {0.5, 0.4, 0.6});
  auto c = flat_connection(twisted_ref(g, 2, 1, 1, 2), hodge_weights(*g, 0.6)).with_deviation(random_cochain(rng, g, 1, 2, 0.4));
  const Cochain X = random_cochain(rng, g, 1, 2);
  auto energy = [&](double t) {
    const LinkField U = left_multiply_exp(links(c), X * t);
    const Cochain F = curvature(*c.ref(), U);
    return 0.5 * inner_product(F, F, c.weights());
  };
  const double t = 1e-5;
  const double fd = (energy(t) - energy(-t)) / (2 * t);
  const double an = inner_product(covariant_d_adjoint(c, curvature(c)), X, c.weights());
  CHECK(rel(fd, an) < 1e-7);
}

TEST_CASE("gauge transformations preserve Wilson loops and extract faithfully") {
  std::mt19937_64 rng(17);
  auto g = torus({4, 4, 3});
  auto c = flat_connection(twisted_ref(g), hodge_weights(*g, 1.0)).with_deviation(random_cochain(rng, g, 1, 2, 0.3));
  const GaugeField u = random_gauge(rng, *g, 2, 0.4);
  const LinkField U = links(c);
  const LinkField V = gauge_transform(U, u);
  const LoopPath square{{0, 1}, {1, 1}, {0, -1}, {1, -1}};
  const LoopPath longer{{0, 1}, {0, 1}, {2, 1}, {1, 1}, {0, -1}, {2, -1}, {0, -1}, {1, -1}};
  const LoopPath wrap{{1, 1}, {1, 1}, {1, 1}, {1, 1}};
  for (long s : {0L, 7L, 30L})
    for (const auto* p : {&square, &longer, &wrap}) CHECK(std::abs(wilson_loop(U, s, *p) - wilson_loop(V, s, *p)) < 1e-12);
  // identity gauge is a no-op
  const GaugeField id(g->vertices(), Mat::Identity(2, 2));
  CHECK(max_diff(gauge_transform(c, id).a(), c.a()) < 1e-14);
  // round trip through links
  CHECK(max_diff(from_links(c.ref(), links(c), c.weights()).a(), c.a()) < 1e-13);
}

TEST_CASE("deviation extraction reports the cut locus") {
  auto g = torus({3, 3});
  auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0));
  LinkField U = links(c);
  U.U[4] = -Mat::Identity(2, 2);
  try {
    from_links(c.ref(), U, c.weights());
    FAIL("expected a cut-locus error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CutLocus);
    CHECK(e.index() == 4);
  }
}

TEST_CASE("complex gauge flow") {
  std::mt19937_64 rng(18);
  auto g = torus({6, 5}, {}, {0.4, 0.5});
  const MetricWeights w = hodge_weights(*g, 0.8);
  SUBCASE("zero generator is the identity") {
    auto c = flat_connection(twisted_ref(g), w).with_deviation(random_cochain(rng, g, 1, 2, 0.3));
    const Cochain z(g, 0, 2);
    CHECK(max_diff(complex_gauge_flow(c, z, 0.7, 5).a(), c.a()) < 1e-15);
  }
  SUBCASE("abelian flow is linear") {
    Cochain a(g, 1, 2), zeta(g, 0, 2);
    std::normal_distribution<double> nd(0.0, 0.3);
    for (long e = 0; e < a.cells(); ++e) a.at(e)[2] = nd(rng);
    for (long v = 0; v < zeta.cells(); ++v) zeta.at(v)[2] = nd(rng);
    auto c = flat_connection(trivial_ref(g), w).with_deviation(a);
    const Cochain X = imaginary_gauge_direction(c, zeta);
    const double tau = 0.35;
    CHECK(max_diff(complex_gauge_flow(c, zeta, tau, 4).a(), a + X * tau) < 1e-13);
  }
  SUBCASE("constant generator at the trivial connection is stationary") {
    Cochain zeta(g, 0, 2);
    for (long v = 0; v < zeta.cells(); ++v) zeta.at(v)[0] = 0.9;
    auto c = flat_connection(trivial_ref(g), w);
    CHECK(complex_gauge_flow(c, zeta, 1.0, 3).a().max_abs() < 1e-14);
  }
  SUBCASE("first-order consistency") {
    auto c = flat_connection(twisted_ref(g), w).with_deviation(random_cochain(rng, g, 1, 2, 0.3));
    const Cochain zeta = random_cochain(rng, g, 0, 2, 0.5);
    const Cochain X = imaginary_gauge_direction(c, zeta);
    const LieAlgebra& L = LieAlgebra::get(2);
    auto defect = [&](double tau) {
      const LinkField U0 = links(c);
      const LinkField U1 = links(complex_gauge_flow(c, zeta, tau, 2));
      Cochain s = X.zeros_like();
      for (long e = 0; e < s.cells(); ++e) L.coords(log_matrix(U1.U[e] * U0.U[e].adjoint()), s.at(e));
      return max_diff(s * (1.0 / tau), X);
    };
    const double e1 = defect(1e-2), e2 = defect(5e-3);
    const double slope = std::log(e1 / e2) / std::log(2.0);
    CHECK(slope > 0.9);
    CHECK(slope < 1.1);
  }
}

TEST_CASE("Chern-Simons functional") {
  auto g = unit_torus({4, 4, 4});
  auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0));
  CHECK(std::abs(chern_simons(c)) < 1e-15);
  CHECK_THROWS_AS(chern_simons(flat_connection(trivial_ref(torus({3, 3})), hodge_weights(*torus({3, 3}), 1.0))), Error);

  // Beltrami field A (sin 2 pi z, cos 2 pi z, 0) e3: CS = pi A^2 kappa / 2 on the unit torus
  const double A = 0.3;
  double prev = 0.0;
  for (int L : {8, 16, 32}) {
    auto gl = unit_torus({L, L, L});
    auto a = smooth_one_form(gl, 2, [&](int i, const double* p, double* out) {
      out[0] = out[1] = 0.0;
      out[2] = i == 0 ? A * std::sin(2 * kPi * p[2]) : i == 1 ? A * std::cos(2 * kPi * p[2]) : 0.0;
    });
    auto cl = flat_connection(trivial_ref(gl), hodge_weights(*gl, 1.0)).with_deviation(a);
    const double e = std::abs(chern_simons(cl) - kPi * A * A / 2.0);
    if (prev > 0.0) CHECK(prev / e > 3.5);
    prev = e;
  }
}

TEST_CASE("Chern-Simons is invariant under small gauge transformations") {
  double prev = 0.0;
  for (int L : {6, 12}) {
    auto g = unit_torus({L, L, L});
    auto a = smooth_one_form(g, 2, [](int i, const double* p, double* out) {
      out[0] = 0.5 * std::sin(2 * kPi * p[2]) + 0.1 * i;
      out[1] = 0.4 * std::cos(2 * kPi * p[0]);
      out[2] = 0.3 * std::sin(2 * kPi * (p[1] + p[2]));
    });
    auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0)).with_deviation(a);
    Cochain xi(g, 0, 2);
    int x[3];
    for (long v = 0; v < g->vertices(); ++v) {
      g->coords(v, x);
      xi.at(v)[0] = 0.4 * std::sin(2 * kPi * x[1] / L);
      xi.at(v)[2] = 0.3 * std::cos(2 * kPi * x[0] / L);
    }
    const double cs0 = chern_simons(c);
    const double cs1 = chern_simons(gauge_transform(c, gauge_exp(xi)));
    const double e = std::abs(cs1 - cs0);
    CHECK(e < 0.05 * std::abs(cs0) + 1e-3);
    if (prev > 0.0) CHECK(prev / e > 3.0);
    prev = e;
  }
}

TEST_CASE("topological charge") {
  std::mt19937_64 rng(19);
  auto g = torus({3, 3, 4, 4}, {AxisBlock::S, AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma});
  auto ref = twisted_ref(g, 2, 1, 2, 3);
  auto c = flat_connection(ref, hodge_weights(*g, 1.0));
  CHECK(std::abs(topological_charge(c, {})) < 1e-15);
  const Connection ca = c.with_deviation(random_cochain(rng, g, 1, 2, 0.3));
  const double q = topological_charge(ca, {});
  const double qu = topological_charge(gauge_transform(ca, random_gauge(rng, *g)), {});
  CHECK(std::abs(q - qu) < 1e-10);
  CHECK(std::abs(q) > 1e-8);
}

TEST_CASE("clover density matches the smooth abelian density") {
  // a_y = f(x) e3, a_w = g(z) e3: F ^ F density = 2 f'(x) g'(z) <e3, e3>
  auto f = [](double x) { return 0.7 * std::sin(2.3 * x); };
  auto fp = [](double x) { return 0.7 * 2.3 * std::cos(2.3 * x); };
  auto gz = [](double z) { return 0.5 * std::cos(1.7 * z); };
  auto gp = [](double z) { return -0.5 * 1.7 * std::sin(1.7 * z); };
  double prev = 0.0;
  for (int L : {8, 16}) {
    auto g = unit_torus({L, L, L, L});
    auto a = smooth_one_form(g, 2, [&](int i, const double* p, double* out) {
      out[0] = out[1] = 0.0;
      out[2] = i == 1 ? f(p[0]) : i == 3 ? gz(p[2]) : 0.0;
    });
    auto c = flat_connection(trivial_ref(g), hodge_weights(*g, 1.0)).with_deviation(a);
    const auto dens = clover_density(c);
    const double h = 1.0 / L;
    double lat = 0.0, ora = 0.0;
    int x[4];
    for (long v = 0; v < g->vertices(); ++v) {
      g->coords(v, x);
      if (x[0] < 2 || x[0] > L - 2 || x[2] < 2 || x[2] > L - 2) continue;
      lat += dens[v];
      ora += std::pow(h, 4) * fp(x[0] * h) * gp(x[2] * h);
    }
    const double e = std::abs(lat - ora) / std::abs(ora);
    if (prev > 0.0) CHECK(prev / e > 3.5);
    prev = e;
  }
}

TEST_CASE("slice decomposition") {
  std::mt19937_64 rng(20);
  auto g = torus({3, 4, 4, 3}, {AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma, AxisBlock::I}, {0.5, 0.3, 0.3, 0.4});
  auto ref = twisted_ref(g, 2, 1, 1, 2);
  auto c = flat_connection(ref, hodge_weights(*g, 0.5)).with_deviation(random_cochain(rng, g, 1, 2, 0.3));
  const SliceDecomposition s = slice_extract(c);
  CHECK(s.base_axes == std::vector<int>{0, 3});
  CHECK(s.sigma_axes == std::vector<int>{1, 2});
  CHECK(max_diff(slice_assemble(s).a(), c.a()) == 0.0);

  const Cochain F = curvature(c);
  const long nv = g->vertices(), ns = s.sigma_grid->vertices();
  double worst = 0.0;
  for (long x = 0; x < s.num_base(); ++x) {
    const Cochain Fa = curvature(slice_connection(s, x));
    for (long y = 0; y < ns; ++y) {
      const long v = s.full_vertex(x, y);
      const int sface = g->combo_index(0b0110);
      for (int q = 0; q < 3; ++q) {
        worst = std::max(worst, std::abs(Fa.at(y)[q] - F.at(sface * nv + v)[q]));
        // beta_0 along Sigma axis 1 is face {0,1}; beta_1 (axis 3) along Sigma axis 1 is face {1,3}, reversed
        worst = std::max(worst, std::abs(s.beta[0][x].at(y)[q] - F.at(g->combo_index(0b0011) * nv + v)[q]));
        worst = std::max(worst, std::abs(s.beta[1][x].at(y)[q] + F.at(g->combo_index(0b1010) * nv + v)[q]));
        worst = std::max(worst, std::abs(s.gamma[x].at(y)[q] - F.at(g->combo_index(0b1001) * nv + v)[q]));
      }
    }
  }
  CHECK(worst < 1e-14);

  // a connection pulled back from Sigma has no mixed curvature
  Cochain a(g, 1, 2);
  for (int axis : {1, 2})
    for (long v = 0; v < nv; ++v) {
      int x[4];
      g->coords(v, x);
      a.at(axis * nv + v)[0] = 0.2 * std::sin(x[1] + 2.0 * x[2] + axis);
      a.at(axis * nv + v)[1] = 0.1 * std::cos(x[2]);
    }
  // same Sigma data at every base point
  for (int axis : {1, 2})
    for (long v = 0; v < nv; ++v) {
      int x[4];
      g->coords(v, x);
      int x0[4] = {0, x[1], x[2], 0};
      std::copy_n(a.at(axis * nv + g->index(x0)), 3, a.at(axis * nv + v));
    }
  const SliceDecomposition p = slice_extract(c.with_deviation(a));
  for (long x = 0; x < p.num_base(); ++x) {
    CHECK(p.beta[0][x].max_abs() < 1e-14);
    CHECK(p.beta[1][x].max_abs() < 1e-14);
    CHECK(p.gamma[x].max_abs() < 1e-14);
  }
}
