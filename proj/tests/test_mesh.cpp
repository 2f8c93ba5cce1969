#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace gaugelab;
using namespace gaugelab::testing;

TEST_CASE("grid validation") {
  GridSpec s{{4, 1}, {1.0, 1.0}, {AxisBlock::Sigma, AxisBlock::Sigma}};
  CHECK_THROWS_AS(s.validate(), Error);
  GridSpec t{{4, 4, 4}, {1.0, 1.0, 1.0}, {AxisBlock::Sigma, AxisBlock::Sigma, AxisBlock::Sigma}};
  CHECK_THROWS_AS(t.validate(), Error);
  GridSpec u{{4, 4}, {1.0, -1.0}, {AxisBlock::Sigma, AxisBlock::Sigma}};
  CHECK_THROWS_AS(u.validate(), Error);
}

TEST_CASE("cell counts and combos") {
  auto g = torus({3, 4, 5, 2}, {AxisBlock::S, AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma});
  CHECK(g->vertices() == 120);
  CHECK(g->cells(2) == 6 * 120);
  CHECK(g->combo(2, 0) == std::vector<int>{0, 1});
  CHECK(g->combo(2, 5) == std::vector<int>{2, 3});
  int x[4];
  for (long v = 0; v < g->vertices(); ++v) {
    g->coords(v, x);
    CHECK(g->index(x) == v);
    CHECK(g->step_back(g->step(v, 2), 2) == v);
  }
}

TEST_CASE("coboundary squares to zero") {
  std::mt19937_64 rng(1);
  CHECK(coboundary(Cochain(torus({5, 4}), 0, 2)).max_abs() == 0.0);
  for (auto dims : {std::vector<int>{5, 4}, std::vector<int>{3, 4, 5}, std::vector<int>{3, 2, 4, 3}}) {
    auto g = torus(dims, std::vector<AxisBlock>(dims.size(), AxisBlock::S));
    for (int k = 0; k + 2 <= g->dim(); ++k) {
      // integer values: every sum is exact in floating point
      Cochain x = random_cochain(rng, g, k, 2, 100.0);
      for (double& q : x.data()) q = std::round(q);
      CHECK(coboundary(coboundary(x)).max_abs() == 0.0);
      const Cochain y = random_cochain(rng, g, k);
      CHECK(coboundary(coboundary(y)).max_abs() < 1e-14);
    }
    Cochain c(g, 0, 2);
    for (long v = 0; v < c.cells(); ++v) c.set(v, basis_element(2, 1) * 0.7);
    CHECK(coboundary(c).max_abs() == 0.0);
  }
  CHECK_THROWS_AS(coboundary(Cochain(torus({4, 4}), 2, 2)), Error);
}

TEST_CASE("first differences converge at second order on a 1-axis grid") {
  auto err = [](int L) {
    const double h = 1.0 / L;
    auto g = torus({L}, {AxisBlock::S}, {h});
    Cochain xi(g, 0, 2);
    for (int v = 0; v < L; ++v) xi.at(v)[2] = std::sin(2 * M_PI * v * h);
    const Cochain dx = coboundary(xi);
    double e = 0.0;
    for (int v = 0; v < L; ++v)
      e = std::max(e, std::abs(dx.at(v)[2] / h - 2 * M_PI * std::cos(2 * M_PI * (v + 0.5) * h)));
    return e;
  };
  const double order = std::log2(err(32) / err(64));
  CHECK(order == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("hodge weights") {
  auto g = torus({4, 4, 4, 4}, {AxisBlock::S, AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma});
  const MetricWeights w1 = hodge_weights(*g, 1.0);
  for (int k = 0; k <= 4; ++k)
    for (double x : w1.w[k]) CHECK(x == 1.0);
  const MetricWeights wh = hodge_weights(*g, 0.5);
  const int sigma_face = g->combo_index(0b1100), s_face = g->combo_index(0b0011), mixed = g->combo_index(0b0101);
  CHECK(wh.weight(2, sigma_face) / w1.weight(2, sigma_face) == doctest::Approx(4.0));
  CHECK(wh.weight(2, s_face) / w1.weight(2, s_face) == doctest::Approx(0.25));
  CHECK(wh.weight(2, mixed) == doctest::Approx(1.0));
  // S lengths scale as 1/eps: volume grows as eps^-2
  CHECK(wh.volume(*g) / w1.volume(*g) == doctest::Approx(4.0));
  CHECK_THROWS_AS(hodge_weights(*g, 0.0), Error);
}

TEST_CASE("Sigma 1-forms wedge ds have eps-independent norm") {
  std::mt19937_64 rng(2);
  auto g = torus({3, 3, 4, 4}, {AxisBlock::S, AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma}, {0.5, 0.5, 0.25, 0.25});
  Cochain F(g, 2, 2);
  const long nv = g->vertices();
  std::normal_distribution<double> nd;
  for (int k : {2, 3}) {
    const int face = g->combo_index((1u << 0) | (1u << k));
    for (long v = 0; v < nv * 3; ++v) F.at(F.cell(face, 0))[v] = nd(rng);
  }
  const double n1 = norm(F, hodge_weights(*g, 1.0));
  for (double eps : {0.5, 0.25, 0.1}) CHECK(norm(F, hodge_weights(*g, eps)) == doctest::Approx(n1).epsilon(1e-13));
}

TEST_CASE("inner product") {
  std::mt19937_64 rng(3);
  auto g = torus({4, 5}, {}, {0.3, 0.7});
  const MetricWeights w = hodge_weights(*g, 1.0);
  for (int t = 0; t < 10; ++t) {
    const Cochain x = random_cochain(rng, g, 1), y = random_cochain(rng, g, 1), z = random_cochain(rng, g, 1);
    CHECK(inner_product(x, x, w) > 0.0);
    CHECK(rel(inner_product(x, y, w), inner_product(y, x, w)) < 1e-14);
    CHECK(rel(inner_product(x * 2.0 + y, z, w), 2 * inner_product(x, z, w) + inner_product(y, z, w)) < 1e-13);
  }
  CHECK_THROWS_AS(inner_product(Cochain(g, 1, 2), Cochain(g, 0, 2), w), Error);
}

TEST_CASE("symplectic form on a surface") {
  std::mt19937_64 rng(4);
  auto g = torus({5, 4}, {}, {0.3, 0.6});
  const MetricWeights w = hodge_weights(*g, 1.0);
  for (int t = 0; t < 10; ++t) {
    const Cochain mu = random_cochain(rng, g, 1), nu = random_cochain(rng, g, 1);
    const double om = symplectic_form(mu, nu);
    CHECK(rel(om, -symplectic_form(nu, mu)) < 1e-13);
    CHECK(rel(om, inner_product(hodge_star(mu, w), nu, w)) < 1e-13);
    CHECK(rel(om, -inner_product(mu, hodge_star(nu, w), w)) < 1e-13);
  }
}

TEST_CASE("star squares") {
  std::mt19937_64 rng(5);
  auto g2 = torus({5, 4}, {}, {0.3, 0.6});
  const MetricWeights w2 = hodge_weights(*g2, 1.0);
  const Cochain b = random_cochain(rng, g2, 1);
  CHECK((hodge_star(hodge_star(b, w2), w2) + b).max_abs() < 1e-14);
  CHECK(rel(norm(hodge_star(b, w2), w2), norm(b, w2)) < 1e-14);
  const Cochain z = random_cochain(rng, g2, 0);
  CHECK((hodge_star(hodge_star(z, w2), w2) - z).max_abs() < 1e-14);

  auto g4 = torus({3, 3, 4, 4}, {AxisBlock::S, AxisBlock::S, AxisBlock::Sigma, AxisBlock::Sigma}, {0.5, 0.4, 0.3, 0.2});
  const MetricWeights w4 = hodge_weights(*g4, 0.25);
  const Cochain F = random_cochain(rng, g4, 2);
  CHECK((hodge_star(hodge_star(F, w4), w4) - F).max_abs() < 1e-12);
  CHECK(rel(norm(hodge_star(F, w4), w4), norm(F, w4)) < 1e-13);
}

TEST_CASE("wedge bracket") {
  std::mt19937_64 rng(6);
  auto g = torus({4, 5, 3}, std::vector<AxisBlock>(3, AxisBlock::S));
  Cochain a(g, 1, 2);
  std::normal_distribution<double> nd;
  for (long e = 0; e < a.cells(); ++e) a.at(e)[2] = nd(rng);
  CHECK(wedge_bracket(a, a).max_abs() == 0.0);
  for (int t = 0; t < 5; ++t) {
    const Cochain x = random_cochain(rng, g, 1), y = random_cochain(rng, g, 1);
    CHECK((wedge_bracket(x, y) - wedge_bracket(y, x)).max_abs() == 0.0);
  }
}

TEST_CASE("wedge bracket is first-order consistent on smooth fields") {
  // a = sin(2 pi x) e1 dx + cos(2 pi y) e2 dy, b = cos(2 pi y) e3 dx + sin(2 pi x) e1 dy
  // continuum [a_x, b_y] - [a_y, b_x] = sin^2(2 pi x)[e1, e1] - cos^2(2 pi y)[e2, e3] = -cos^2(2 pi y) e1
  auto err = [](int L) {
    const double h = 1.0 / L;
    auto g = torus({L, L}, {}, {h, h});
    Cochain a(g, 1, 2), b(g, 1, 2);
    const long nv = g->vertices();
    int x[2];
    for (long v = 0; v < nv; ++v) {
      g->coords(v, x);
      const double X = x[0] * h, Y = x[1] * h;
      a.at(v)[0] = h * std::sin(2 * M_PI * (X + 0.5 * h));
      a.at(nv + v)[1] = h * std::cos(2 * M_PI * (Y + 0.5 * h));
      b.at(v)[2] = h * std::cos(2 * M_PI * Y);
      b.at(nv + v)[0] = h * std::sin(2 * M_PI * X);
    }
    const Cochain w = wedge_bracket(a, b);
    double e = 0.0;
    for (long v = 0; v < nv; ++v) {
      g->coords(v, x);
      const double Y = (x[1] + 0.5) * h;
      const double c = std::cos(2 * M_PI * Y);
      e = std::max(e, std::abs(w.at(v)[0] / (h * h) + c * c));
    }
    return e;
  };
  const double e1 = err(16), e2 = err(32);
  CHECK(e2 < e1);
  CHECK(std::log2(e1 / e2) > 0.9);
}
