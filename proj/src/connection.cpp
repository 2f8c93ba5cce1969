#include "gaugelab/connection.hpp"

#include <cmath>
#include <numbers>

namespace gaugelab {

namespace {

Mat dagger(const Mat& m) { return m.adjoint(); }

void require(bool ok, ErrorKind k, const char* what) {
  if (!ok) throw Error(k, what);
}

}  // namespace

std::pair<GroupElement, GroupElement> twist_matrices(int n, int value) {
  if (n < 2 || n > kMaxRank) throw Error(ErrorKind::Precondition, "twist rank must be 2..4");
  if (value < 0 || value >= n) throw Error(ErrorKind::Precondition, "flux must lie in [0, n)");
  const Complex I(0.0, 1.0);
  if (n == 2) {
    Mat a = Mat::Identity(2, 2), b = Mat::Identity(2, 2);
    if (value == 1) {
      a << 0.0, -I, -I, 0.0;
      b << 0.0, -1.0, 1.0, 0.0;
    }
    return {unchecked_group(a), unchecked_group(b)};
  }
  const double pi = std::numbers::pi;
  const Complex phase = std::exp(-I * pi * (n - 1.0) / static_cast<double>(n));
  Mat clock = Mat::Zero(n, n), shift = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    clock(k, k) = phase * std::exp(2.0 * pi * I * static_cast<double>(k) / static_cast<double>(n));
    shift((k + 1) % n, k) = phase;
  }
  Mat b = Mat::Identity(n, n);
  for (int k = 0; k < value; ++k) b = (b * shift).eval();
  if (value == 0) clock = Mat::Identity(n, n);
  return {unchecked_group(clock), unchecked_group(b)};
}

ReferencePtr reference_from_links(GridPtr grid, int n, std::vector<Mat> links, TwistSpec twist) {
  const Grid& g = *grid;
  if (static_cast<long>(links.size()) != g.cells(1)) throw Error(ErrorKind::Dimension, "reference link count mismatch");
  auto r = std::make_shared<ReferenceTransport>();
  r->grid = grid;
  r->n = n;
  r->twist = std::move(twist);
  r->links = std::move(links);
  const LieAlgebra& L = LieAlgebra::get(n);
  r->ad.reserve(r->links.size());
  for (const Mat& u : r->links) r->ad.push_back(L.adjoint_matrix(u));
  const long nv = g.vertices();
  if (g.dim() >= 2) {
    r->center.assign(g.cells(2), Complex(1.0, 0.0));
    for (int c = 0; c < g.num_combos(2); ++c) {
      const int i = g.combo(2, c)[0], j = g.combo(2, c)[1];
      for (long v = 0; v < nv; ++v) {
        const Mat p = r->links[i * nv + v] * r->links[j * nv + g.step(v, i)] *
                      dagger(r->links[i * nv + g.step(v, j)]) * dagger(r->links[j * nv + v]);
        const Complex z = p.trace() / static_cast<double>(n);
        if ((p - z * Mat::Identity(n, n)).norm() > 1e-12 || std::abs(std::abs(z) - 1.0) > 1e-12)
          throw Error(ErrorKind::Precondition, "reference plaquette is not central", c * nv + v);
        r->center[c * nv + v] = z;
      }
    }
  }
  return r;
}

ReferencePtr build_twisted_reference(const TwistSpec& spec, GridPtr grid) {
  const Grid& g = *grid;
  const int n = spec.n;
  LieAlgebra::get(n);
  std::vector<int> used(g.dim(), 0);
  for (const Flux& f : spec.fluxes) {
    if (f.axis_a < 0 || f.axis_b < 0 || f.axis_a >= g.dim() || f.axis_b >= g.dim() || f.axis_a == f.axis_b)
      throw Error(ErrorKind::Precondition, "flux axes out of range");
    if (f.value < 0 || f.value >= n) throw Error(ErrorKind::Precondition, "inconsistent flux for rank n");
    if (f.value == 0) continue;
    if (g.block(f.axis_a) != AxisBlock::Sigma || g.block(f.axis_b) != AxisBlock::Sigma)
      throw Error(ErrorKind::Precondition, "flux requires a Sigma axis pair");
    if (used[f.axis_a]++ || used[f.axis_b]++) throw Error(ErrorKind::Precondition, "flux pairs share an axis");
  }
  const long nv = g.vertices();
  std::vector<Mat> links(g.cells(1), Mat::Identity(n, n));
  std::vector<int> x(g.dim());
  for (const Flux& f : spec.fluxes) {
    if (f.value == 0) continue;
    const auto [oa, ob] = twist_matrices(n, f.value);
    for (long v = 0; v < nv; ++v) {
      g.coords(v, x.data());
      if (x[f.axis_a] == g.length(f.axis_a) - 1) links[f.axis_a * nv + v] = (links[f.axis_a * nv + v] * oa.matrix()).eval();
      if (x[f.axis_b] == g.length(f.axis_b) - 1) links[f.axis_b * nv + v] = (links[f.axis_b * nv + v] * ob.matrix()).eval();
    }
  }
  return reference_from_links(std::move(grid), n, std::move(links), spec);
}

Connection::Connection(ReferencePtr ref, Cochain a, MetricWeights weights)
    : ref_(std::move(ref)), a_(std::move(a)), w_(std::move(weights)) {
  require(ref_ != nullptr, ErrorKind::Dimension, "connection without reference");
  if (a_.degree() != 1 || a_.n() != ref_->n || !a_.grid().same(*ref_->grid))
    throw Error(ErrorKind::Dimension, "deviation must be a 1-cochain on the reference grid");
  if (static_cast<int>(w_.lengths.size()) != ref_->grid->dim())
    throw Error(ErrorKind::Dimension, "metric weights do not match the grid");
}

Connection flat_connection(ReferencePtr ref, const MetricWeights& w) {
  Cochain a(ref->grid, 1, ref->n);
  return Connection(std::move(ref), std::move(a), w);
}

LinkField links(const Connection& c) {
  LinkField U;
  U.grid = c.grid_ptr();
  U.n = c.n();
  const LieAlgebra& L = LieAlgebra::get(c.n());
  const long m = c.grid().cells(1);
  U.U.resize(m);
  for (long e = 0; e < m; ++e) U.U[e] = exp_matrix(L.matrix(c.a().at(e))) * c.ref()->links[e];
  return U;
}

Connection from_links(const ReferencePtr& ref, const LinkField& U, const MetricWeights& w) {
  const LieAlgebra& L = LieAlgebra::get(ref->n);
  Cochain a(ref->grid, 1, ref->n);
  const long m = ref->grid->cells(1);
  for (long e = 0; e < m; ++e) {
    try {
      L.coords(log_matrix(U.U[e] * dagger(ref->links[e])), a.at(e));
    } catch (const Error& err) {
      throw Error(ErrorKind::CutLocus, std::string("deviation re-extraction: ") + err.what(), e);
    }
  }
  return Connection(ref, std::move(a), w);
}

EdgeTransport edge_adjoint(const LinkField& U) {
  const LieAlgebra& L = LieAlgebra::get(U.n);
  EdgeTransport ad;
  ad.reserve(U.U.size());
  for (const Mat& u : U.U) ad.push_back(L.adjoint_matrix(u));
  return ad;
}

Cochain curvature(const ReferenceTransport& ref, const LinkField& U) {
  const Grid& g = *ref.grid;
  const LieAlgebra& L = LieAlgebra::get(ref.n);
  Cochain F(ref.grid, 2, ref.n);
  const long nv = g.vertices();
  for (int c = 0; c < g.num_combos(2); ++c) {
    const int i = g.combo(2, c)[0], j = g.combo(2, c)[1];
    for (long v = 0; v < nv; ++v) {
      const long cell = c * nv + v;
      const Mat p = U.U[i * nv + v] * U.U[j * nv + g.step(v, i)] * dagger(U.U[i * nv + g.step(v, j)]) *
                    dagger(U.U[j * nv + v]);
      try {
        L.coords(log_matrix(std::conj(ref.center[cell]) * p), F.at(cell));
      } catch (const Error& err) {
        throw Error(ErrorKind::CutLocus, std::string("plaquette holonomy: ") + err.what(), cell);
      }
    }
  }
  return F;
}

Cochain curvature(const Connection& c) { return curvature(*c.ref(), links(c)); }

Cochain covariant_d(const EdgeTransport& ad, const Cochain& x) {
  const Grid& g = x.grid();
  const int k = x.degree();
  if (k >= g.dim()) throw Error(ErrorKind::Dimension, "covariant_d of a top-degree cochain");
  Cochain r(x.grid_ptr(), k + 1, x.n());
  const int gd = x.gdim();
  const long nv = g.vertices();
  Coords t(gd);
  for (int c = 0; c < g.num_combos(k + 1); ++c) {
    const auto& axes = g.combo(k + 1, c);
    const unsigned mask = g.combo_mask(k + 1, c);
    for (size_t l = 0; l < axes.size(); ++l) {
      const int m = axes[l];
      const int face = g.combo_index(mask & ~(1u << m));
      const double sgn = (l % 2) ? -1.0 : 1.0;
      for (long v = 0; v < nv; ++v) {
        double* out = r.at(r.cell(c, v));
        Eigen::Map<const Eigen::VectorXd> far(x.at(x.cell(face, g.step(v, m))), gd);
        const double* near = x.at(x.cell(face, v));
        t.noalias() = ad[m * nv + v] * far;
        for (int a = 0; a < gd; ++a) out[a] += sgn * (t[a] - near[a]);
      }
    }
  }
  return r;
}

Cochain covariant_d(const Connection& c, const Cochain& x) { return covariant_d(edge_adjoint(links(c)), x); }

Cochain covariant_d_adjoint(const EdgeTransport& ad, const MetricWeights& w, const Cochain& y) {
  const Grid& g = y.grid();
  const int k = y.degree();
  if (k < 1) throw Error(ErrorKind::Dimension, "covariant_d_adjoint of a 0-cochain");
  Cochain r(y.grid_ptr(), k - 1, y.n());
  const int gd = y.gdim();
  const long nv = g.vertices();
  Coords t(gd);
  for (int c = 0; c < g.num_combos(k); ++c) {
    const auto& axes = g.combo(k, c);
    const unsigned mask = g.combo_mask(k, c);
    for (size_t l = 0; l < axes.size(); ++l) {
      const int m = axes[l];
      const int face = g.combo_index(mask & ~(1u << m));
      const double f = ((l % 2) ? -1.0 : 1.0) * w.weight(k, c) / w.weight(k - 1, face);
      for (long v = 0; v < nv; ++v) {
        Eigen::Map<const Eigen::VectorXd> src(y.at(y.cell(c, v)), gd);
        double* far = r.at(r.cell(face, g.step(v, m)));
        double* near = r.at(r.cell(face, v));
        t.noalias() = ad[m * nv + v].transpose() * src;
        for (int a = 0; a < gd; ++a) {
          far[a] += f * t[a];
          near[a] -= f * src[a];
        }
      }
    }
  }
  return r;
}

Cochain covariant_d_adjoint(const Connection& c, const Cochain& y) {
  return covariant_d_adjoint(edge_adjoint(links(c)), c.weights(), y);
}

Cochain curvature_algebraic(const Connection& c) {
  Cochain F = covariant_d(c.ref()->ad, c.a());
  F.axpy(0.5, wedge_bracket(c.a(), c.a(), &c.ref()->ad));
  return F;
}

Cochain algebraic_covariant_d(const Connection& c, const Cochain& v) {
  Cochain r = covariant_d(c.ref()->ad, v);
  r += wedge_bracket(c.a(), v, &c.ref()->ad);
  return r;
}

LinkField gauge_transform(const LinkField& U, const GaugeField& u) {
  const Grid& g = *U.grid;
  if (static_cast<long>(u.size()) != g.vertices()) throw Error(ErrorKind::Dimension, "gauge field size mismatch");
  LinkField r = U;
  const long nv = g.vertices();
  for (int i = 0; i < g.dim(); ++i)
    for (long v = 0; v < nv; ++v) r.U[i * nv + v] = dagger(u[v]) * U.U[i * nv + v] * u[g.step(v, i)];
  return r;
}

Connection gauge_transform(const Connection& c, const GaugeField& u) {
  return from_links(c.ref(), gauge_transform(links(c), u), c.weights());
}

Cochain gauge_act(const GaugeField& u, const Cochain& x) {
  const Grid& g = x.grid();
  const LieAlgebra& L = LieAlgebra::get(x.n());
  const long nv = g.vertices();
  const int gd = x.gdim();
  Cochain r = x.zeros_like();
  std::vector<AdMat> adinv(nv);
  for (long v = 0; v < nv; ++v) adinv[v] = L.adjoint_matrix(dagger(u[v]));
  for (int c = 0; c < g.num_combos(x.degree()); ++c)
    for (long v = 0; v < nv; ++v) {
      Eigen::Map<const Eigen::VectorXd> src(x.at(x.cell(c, v)), gd);
      Eigen::Map<Eigen::VectorXd> dst(r.at(r.cell(c, v)), gd);
      dst = adinv[v] * src;
    }
  return r;
}

GaugeField gauge_exp(const Cochain& xi) {
  if (xi.degree() != 0) throw Error(ErrorKind::Dimension, "gauge generator must be a 0-cochain");
  const LieAlgebra& L = LieAlgebra::get(xi.n());
  GaugeField u(xi.cells());
  for (long v = 0; v < xi.cells(); ++v) u[v] = exp_matrix(L.matrix(xi.at(v)));
  return u;
}

Complex wilson_loop(const LinkField& U, long start, const LoopPath& path) {
  const Grid& g = *U.grid;
  const long nv = g.vertices();
  Mat p = Mat::Identity(U.n, U.n);
  long v = start;
  for (const auto& [axis, dir] : path) {
    if (dir > 0) {
      p = (p * U.U[axis * nv + v]).eval();
      v = g.step(v, axis);
    } else {
      v = g.step_back(v, axis);
      p = (p * dagger(U.U[axis * nv + v])).eval();
    }
  }
  return p.trace();
}

LinkField left_multiply_exp(const LinkField& U, const Cochain& sigma) {
  const LieAlgebra& L = LieAlgebra::get(U.n);
  LinkField r = U;
  const long m = static_cast<long>(U.U.size());
  for (long e = 0; e < m; ++e) r.U[e] = exp_matrix(L.matrix(sigma.at(e))) * U.U[e];
  return r;
}

const ButcherTableau& rk4_tableau() {
  static const ButcherTableau t{{{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}}, {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6}, {}, 4};
  return t;
}

const ButcherTableau& dormand_prince_tableau() {
  static const ButcherTableau t{
      {{},
       {1.0 / 5},
       {3.0 / 40, 9.0 / 40},
       {44.0 / 45, -56.0 / 15, 32.0 / 9},
       {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
       {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
       {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0},
      {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100, 1.0 / 40},
      5};
  return t;
}

LinkField rkmk_step(const LinkField& U, double dt, const LinkVectorField& f, const ButcherTableau& tab, double* err) {
  const size_t s = tab.b.size();
  std::vector<Cochain> K;
  K.reserve(s);
  Cochain sigma;
  for (size_t i = 0; i < s; ++i) {
    Cochain X;
    if (i == 0) {
      X = f(U);
      sigma = X.zeros_like();
      K.push_back(X);
      continue;
    }
    sigma = K[0].zeros_like();
    for (size_t j = 0; j < i; ++j)
      if (tab.a[i][j] != 0.0) sigma.axpy(dt * tab.a[i][j], K[j]);
    X = f(left_multiply_exp(U, sigma));
    Cochain k = X.zeros_like();
    const int gd = X.gdim();
    for (long e = 0; e < X.cells(); ++e) dexpinv(U.n, sigma.at(e), X.at(e), k.at(e));
    (void)gd;
    K.push_back(std::move(k));
  }
  Cochain step = K[0].zeros_like();
  for (size_t i = 0; i < s; ++i)
    if (tab.b[i] != 0.0) step.axpy(dt * tab.b[i], K[i]);
  if (err) {
    *err = 0.0;
    if (!tab.b_low.empty()) {
      Cochain d = K[0].zeros_like();
      for (size_t i = 0; i < s; ++i) d.axpy(dt * (tab.b[i] - tab.b_low[i]), K[i]);
      *err = d.max_abs();
    }
  }
  return left_multiply_exp(U, step);
}

Cochain imaginary_gauge_direction(const Connection& c, const Cochain& zeta) {
  if (c.grid().dim() != 2) throw Error(ErrorKind::Dimension, "imaginary gauge direction needs a 2D grid");
  if (zeta.degree() != 0) throw Error(ErrorKind::Dimension, "zeta must be a 0-cochain");
  Cochain r = covariant_d_adjoint(c, hodge_star(zeta, c.weights()));
  r *= -1.0;
  return r;
}

Connection complex_gauge_flow(const Connection& c, const Cochain& zeta, double tau, int steps) {
  if (c.grid().dim() != 2) throw Error(ErrorKind::Precondition, "complex gauge flow needs a 2D grid");
  if (steps < 1) throw Error(ErrorKind::Precondition, "steps must be >= 1");
  const Cochain omega = hodge_star(zeta, c.weights());
  const MetricWeights& w = c.weights();
  LinkVectorField f = [&](const LinkField& U) {
    Cochain r = covariant_d_adjoint(edge_adjoint(U), w, omega);
    r *= -1.0;
    return r;
  };
  LinkField U = links(c);
  const double dt = tau / steps;
  for (int k = 0; k < steps; ++k) {
    U = rkmk_step(U, dt, f, rk4_tableau());
    for (const Mat& m : U.U)
      if (!m.allFinite()) throw Error(ErrorKind::Integrator, "complex gauge flow diverged");
  }
  return from_links(c.ref(), U, c.weights());
}

namespace {

// Ad transport from v + sum_{a in mask} e_a back to v, stepping in increasing axis order
AdMat transport_back(const EdgeTransport& ad, const Grid& g, long v, unsigned mask, int gd) {
  AdMat t = AdMat::Identity(gd, gd);
  const long nv = g.vertices();
  for (int a = 0; a < g.dim(); ++a)
    if (mask & (1u << a)) {
      t = (t * ad[a * nv + v]).eval();
      v = g.step(v, a);
    }
  return t;
}

long shifted(const Grid& g, long v, unsigned mask) {
  for (int a = 0; a < g.dim(); ++a)
    if (mask & (1u << a)) v = g.step(v, a);
  return v;
}

// pairing of a 1-cochain with a 2-cochain on a 3D grid, cube-centred averages
double wedge_pairing_3d(const ReferenceTransport& ref, const Cochain& a, const Cochain& b, const InnerProductSpec& ip) {
  const Grid& g = a.grid();
  const int gd = a.gdim();
  const long nv = g.vertices();
  std::vector<AdMat> T(8 * nv);
  for (long v = 0; v < nv; ++v)
    for (unsigned m = 0; m < 8; ++m) T[m * nv + v] = transport_back(ref.ad, g, v, m, gd);
  double total = 0.0;
  Coords abar(gd), bbar(gd);
  // (a ^ b)_{xyz} = a_x b_yz - a_y b_xz + a_z b_xy
  for (int e = 0; e < 3; ++e) {
    const unsigned emask = 1u << e;
    const unsigned fmask = 7u & ~emask;
    const int fc = g.combo_index(fmask);
    const double sgn = (e == 1) ? -1.0 : 1.0;
    for (long v = 0; v < nv; ++v) {
      abar.setZero();
      bbar.setZero();
      for (unsigned m = 0; m < 8; ++m) {
        if ((m & emask) == 0) {
          const long w = shifted(g, v, m);
          abar += T[m * nv + v] * Eigen::Map<const Eigen::VectorXd>(a.at(a.cell(e, w)), gd);
        }
        if ((m & fmask) == 0) {
          const long w = (m & emask) ? g.step(v, e) : v;
          bbar += T[m * nv + v] * Eigen::Map<const Eigen::VectorXd>(b.at(b.cell(fc, w)), gd);
        }
      }
      total += sgn * 0.125 * abar.dot(bbar);
    }
  }
  return 0.5 * ip.kappa * total;
}

}  // namespace

double chern_simons(const Connection& c) {
  if (c.grid().dim() != 3) throw Error(ErrorKind::Dimension, "chern_simons needs a 3D grid");
  const ReferenceTransport& ref = *c.ref();
  const Cochain da = covariant_d(ref.ad, c.a());
  const Cochain aa = wedge_bracket(c.a(), c.a(), &ref.ad);
  return 0.5 * wedge_pairing_3d(ref, c.a(), da, c.weights().ip) + wedge_pairing_3d(ref, c.a(), aa, c.weights().ip) / 6.0;
}

double star_pairing(const Cochain& F, const InnerProductSpec& ip) {
  const Grid& g = F.grid();
  if (g.dim() != 4 || F.degree() != 2) throw Error(ErrorKind::Dimension, "star pairing needs a 2-cochain on a 4D grid");
  const long block = g.vertices() * F.gdim();
  double total = 0.0;
  for (int c = 0; c < 6; ++c) {
    const int cc = g.combo_index(15u & ~g.combo_mask(2, c));
    const double sgn = shuffle_sign(g.combo(2, c), g.combo(2, cc));
    const double* x = F.at(F.cell(c, 0));
    const double* y = F.at(F.cell(cc, 0));
    double s = 0.0;
    for (long i = 0; i < block; ++i) s += x[i] * y[i];
    total += sgn * s;
  }
  return 0.5 * ip.kappa * total;
}

std::vector<double> clover_density(const Connection& c) {
  const Grid& g = c.grid();
  if (g.dim() != 4) throw Error(ErrorKind::Dimension, "clover pairing needs a 4D grid");
  const LinkField U = links(c);
  const EdgeTransport ad = edge_adjoint(U);
  const Cochain F = curvature(*c.ref(), U);
  const int gd = F.gdim();
  const long nv = g.vertices();
  Cochain Fbar = F.zeros_like();
  for (int cmb = 0; cmb < 6; ++cmb) {
    const int i = g.combo(2, cmb)[0], j = g.combo(2, cmb)[1];
    for (long x = 0; x < nv; ++x) {
      const long xi = g.step_back(x, i), xj = g.step_back(x, j), xij = g.step_back(xi, j);
      auto val = [&](long v) { return Eigen::Map<const Eigen::VectorXd>(F.at(F.cell(cmb, v)), gd); };
      Coords s = val(x);
      s += ad[i * nv + xi].transpose() * val(xi);
      s += ad[j * nv + xj].transpose() * val(xj);
      s += ad[j * nv + xj].transpose() * (ad[i * nv + xij].transpose() * val(xij));
      Eigen::Map<Eigen::VectorXd>(Fbar.at(Fbar.cell(cmb, x)), gd) = 0.25 * s;
    }
  }
  std::vector<double> dens(nv, 0.0);
  for (int cmb = 0; cmb < 6; ++cmb) {
    const int cc = g.combo_index(15u & ~g.combo_mask(2, cmb));
    const double sgn = shuffle_sign(g.combo(2, cmb), g.combo(2, cc));
    for (long x = 0; x < nv; ++x) {
      const double* p = Fbar.at(Fbar.cell(cmb, x));
      const double* q = Fbar.at(Fbar.cell(cc, x));
      double s = 0.0;
      for (int a = 0; a < gd; ++a) s += p[a] * q[a];
      dens[x] += 0.5 * c.weights().ip.kappa * sgn * s;
    }
  }
  return dens;
}

double clover_pairing(const Connection& c) {
  double s = 0.0;
  for (double d : clover_density(c)) s += d;
  return s;
}


double topological_charge(const Connection& c, const InnerProductSpec& ip) {
  if (c.grid().dim() != 4) throw Error(ErrorKind::Dimension, "topological_charge needs a 4D grid");
  const double pairing = clover_pairing(c) / c.weights().ip.kappa * ip.kappa;
  return c.n() / (4.0 * std::numbers::pi * std::numbers::pi * ip.kappa) * pairing;
}

long SliceDecomposition::full_vertex(long x, long y) const {
  int bx[4], sy[4], full[4];
  base_grid->coords(x, bx);
  sigma_grid->coords(y, sy);
  for (size_t m = 0; m < base_axes.size(); ++m) full[base_axes[m]] = bx[m];
  for (size_t k = 0; k < sigma_axes.size(); ++k) full[sigma_axes[k]] = sy[k];
  return grid->index(full);
}

namespace {

Cochain slice_d(const Connection& sc, const Cochain& x) { return covariant_d(sc, x); }

}  // namespace

SliceDecomposition slice_extract(const Connection& c) {
  const Grid& g = c.grid();
  SliceDecomposition s;
  s.grid = c.grid_ptr();
  s.ref = c.ref();
  s.weights = c.weights();
  s.sigma_axes = g.axes_of(AxisBlock::Sigma);
  for (int a = 0; a < g.dim(); ++a)
    if (g.block(a) != AxisBlock::Sigma) s.base_axes.push_back(a);
  if (s.sigma_axes.empty() || s.base_axes.empty()) throw Error(ErrorKind::Precondition, "product grid needs Sigma and base axis tags");
  GridSpec ss, bs;
  for (int a : s.sigma_axes) {
    ss.dims.push_back(g.length(a));
    ss.spacing.push_back(g.spacing(a));
    ss.blocks.push_back(AxisBlock::Sigma);
  }
  for (int a : s.base_axes) {
    bs.dims.push_back(g.length(a));
    bs.spacing.push_back(g.spacing(a));
    bs.blocks.push_back(g.block(a));
  }
  s.sigma_grid = Grid::make(ss);
  s.base_grid = Grid::make(bs);
  const int n = c.n();
  const long nb = s.base_grid->vertices(), ns = s.sigma_grid->vertices(), nv = g.vertices();
  const int ks = static_cast<int>(s.sigma_axes.size()), kb = static_cast<int>(s.base_axes.size());

  // Sigma reference: restriction at base point 0, required constant along the base
  std::vector<Mat> rl(s.sigma_grid->cells(1));
  for (int k = 0; k < ks; ++k)
    for (long y = 0; y < ns; ++y) rl[k * ns + y] = c.ref()->links[s.sigma_axes[k] * nv + s.full_vertex(0, y)];
  for (long x = 1; x < nb; ++x)
    for (int k = 0; k < ks; ++k)
      for (long y = 0; y < ns; ++y)
        if ((c.ref()->links[s.sigma_axes[k] * nv + s.full_vertex(x, y)] - rl[k * ns + y]).norm() > 0.0)
          throw Error(ErrorKind::Precondition, "reference varies along the base");
  TwistSpec st;
  st.n = n;
  for (const Flux& f : c.ref()->twist.fluxes) {
    Flux h = f;
    for (int k = 0; k < ks; ++k) {
      if (s.sigma_axes[k] == f.axis_a) h.axis_a = k;
      if (s.sigma_axes[k] == f.axis_b) h.axis_b = k;
    }
    st.fluxes.push_back(h);
  }
  s.sigma_ref = reference_from_links(s.sigma_grid, n, std::move(rl), st);

  const Cochain F = curvature(c);
  const int gd = F.gdim();
  auto copy = [gd](const double* src, double* dst, double f) {
    for (int q = 0; q < gd; ++q) dst[q] = f * src[q];
  };
  s.alpha.assign(nb, Cochain(s.sigma_grid, 1, n));
  s.phi.assign(kb, std::vector<Cochain>(nb, Cochain(s.sigma_grid, 0, n)));
  s.beta.assign(kb, std::vector<Cochain>(nb, Cochain(s.sigma_grid, 1, n)));
  if (kb >= 2) s.gamma.assign(nb, Cochain(s.sigma_grid, 0, n));
  for (long x = 0; x < nb; ++x)
    for (long y = 0; y < ns; ++y) {
      const long v = s.full_vertex(x, y);
      for (int k = 0; k < ks; ++k) copy(c.a().at(s.sigma_axes[k] * nv + v), s.alpha[x].at(k * ns + y), 1.0);
      for (int m = 0; m < kb; ++m) {
        const int bm = s.base_axes[m];
        copy(c.a().at(bm * nv + v), s.phi[m][x].at(y), 1.0);
        for (int k = 0; k < ks; ++k) {
          const int sk = s.sigma_axes[k];
          const int face = g.combo_index((1u << bm) | (1u << sk));
          copy(F.at(F.cell(face, v)), s.beta[m][x].at(k * ns + y), bm < sk ? 1.0 : -1.0);
        }
      }
      if (kb >= 2) {
        const int face = g.combo_index((1u << s.base_axes[0]) | (1u << s.base_axes[1]));
        copy(F.at(F.cell(face, v)), s.gamma[x].at(y), 1.0);
      }
    }

  // centred base differences, one-sided at I-axis ends
  const Grid& B = *s.base_grid;
  auto nbr = [&](long x, int m, int& wf, int& wb, long& xf, long& xb) {
    int bx[4];
    B.coords(x, bx);
    xf = B.step(x, m);
    xb = B.step_back(x, m);
    wf = wb = 1;
    if (B.block(m) == AxisBlock::I) {
      if (bx[m] == 0) { xb = x; wb = 0; }
      if (bx[m] == B.length(m) - 1) { xf = x; wf = 0; }
    }
  };
  s.beta_centered.assign(kb, std::vector<Cochain>(nb, Cochain(s.sigma_grid, 1, n)));
  std::vector<std::vector<Cochain>> phibar(kb, std::vector<Cochain>(nb, Cochain(s.sigma_grid, 0, n)));
  for (int m = 0; m < kb; ++m)
    for (long x = 0; x < nb; ++x) {
      int wf, wb;
      long xf, xb;
      nbr(x, m, wf, wb, xf, xb);
      Cochain& pb = phibar[m][x];
      if (wb == 0) pb = s.phi[m][x];
      else if (wf == 0) pb = s.phi[m][xb];
      else pb = (s.phi[m][x] + s.phi[m][xb]) * 0.5;
    }
  for (int m = 0; m < kb; ++m)
    for (long x = 0; x < nb; ++x) {
      int wf, wb;
      long xf, xb;
      nbr(x, m, wf, wb, xf, xb);
      const double span = (wf + wb);
      Cochain ds = (s.alpha[xf] - s.alpha[xb]) * (1.0 / span);
      const Connection sc(s.sigma_ref, s.alpha[x], hodge_weights(*s.sigma_grid, 1.0, c.weights().ip));
      ds -= slice_d(sc, phibar[m][x]);
      s.beta_centered[m][x] = std::move(ds);
    }
  if (kb >= 2) {
    const LieAlgebra& L = LieAlgebra::get(n);
    s.gamma_centered.assign(nb, Cochain(s.sigma_grid, 0, n));
    for (long x = 0; x < nb; ++x) {
      int wf, wb;
      long xf, xb;
      nbr(x, 0, wf, wb, xf, xb);
      Cochain g0 = (phibar[1][xf] - phibar[1][xb]) * (1.0 / (wf + wb));
      nbr(x, 1, wf, wb, xf, xb);
      g0 -= (phibar[0][xf] - phibar[0][xb]) * (1.0 / (wf + wb));
      for (long y = 0; y < ns; ++y) {
        double t[kMaxAlgebraDim];
        L.bracket(phibar[0][x].at(y), phibar[1][x].at(y), t);
        for (int q = 0; q < gd; ++q) g0.at(y)[q] += t[q];
      }
      s.gamma_centered[x] = std::move(g0);
    }
  }
  return s;
}

Connection slice_assemble(const SliceDecomposition& s) {
  const Grid& g = *s.grid;
  const int n = s.ref->n;
  Cochain a(s.grid, 1, n);
  const long nb = s.base_grid->vertices(), ns = s.sigma_grid->vertices(), nv = g.vertices();
  const int gd = a.gdim();
  for (long x = 0; x < nb; ++x)
    for (long y = 0; y < ns; ++y) {
      const long v = s.full_vertex(x, y);
      for (size_t k = 0; k < s.sigma_axes.size(); ++k)
        std::copy_n(s.alpha[x].at(k * ns + y), gd, a.at(s.sigma_axes[k] * nv + v));
      for (size_t m = 0; m < s.base_axes.size(); ++m) std::copy_n(s.phi[m][x].at(y), gd, a.at(s.base_axes[m] * nv + v));
    }
  return Connection(s.ref, std::move(a), s.weights);
}

Connection slice_connection(const SliceDecomposition& s, long x) {
  return Connection(s.sigma_ref, s.alpha.at(x), hodge_weights(*s.sigma_grid, 1.0, s.weights.ip));
}

}  // namespace gaugelab
