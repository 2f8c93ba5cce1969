#include "gaugelab/nsflow.hpp"

#include <algorithm>
#include <cmath>

namespace gaugelab {

double ym_energy(const Connection& c, const MetricWeights& w) {
  if (c.grid().dim() < 2) return 0.0;
  const Cochain F = curvature(c);
  return 0.5 * inner_product(F, F, w);
}

double ym_energy(const Connection& c) { return ym_energy(c, c.weights()); }

Cochain ym_grad(const Connection& c) { return covariant_d_adjoint(c, curvature(c)); }

namespace {

double link_energy(const ReferenceTransport& ref, const LinkField& U, const MetricWeights& w) {
  const Cochain F = curvature(ref, U);
  return 0.5 * inner_product(F, F, w);
}

}  // namespace

FlowState ym_flow(const Connection& c, double tau_end, const FlowOptions& opt, const FlowCallback& checkpoint) {
  if (!(tau_end > 0.0)) throw Error(ErrorKind::Precondition, "tau_end must be positive");
  const ReferenceTransport& ref = *c.ref();
  const MetricWeights& w = c.weights();
  LinkVectorField f = [&](const LinkField& U) {
    Cochain r = covariant_d_adjoint(edge_adjoint(U), w, curvature(ref, U));
    r *= -1.0;
    return r;
  };
  FlowState st;
  st.connection = c;
  LinkField U = links(c);
  double E = link_energy(ref, U, w);
  st.energy_history.emplace_back(0.0, E);
  double dt = std::min(opt.dt0, tau_end);
  // explicit RK stays inside its real stability interval; beyond it stiff modes ring at the error tolerance
  const double dt_stable = c.grid().dim() >= 2 ? 3.0 / largest_eigenvalue(CovariantComplex(c).laplacian_operator(1)) : 1e300;
  bool captured = opt.flat_capture > 0.0 && E < opt.flat_capture;
  double capture_end = captured ? tau_end + opt.capture_budget : 0.0;
  const ButcherTableau& tab = dormand_prince_tableau();
  auto snapshot = [&]() {
    st.connection = from_links(c.ref(), U, w);
    st.dt = dt;
  };
  while (true) {
    if (captured && std::sqrt(2.0 * E) <= opt.curvature_tol) {
      st.flat_limit = true;
      break;
    }
    const double end = captured ? std::max(capture_end, tau_end) : tau_end;
    if (st.tau >= end * (1.0 - 1e-14)) break;
    if (st.accepted + st.rejected >= opt.max_steps) {
      snapshot();
      throw FlowError("flow step budget exhausted", st);
    }
    const double h = std::min({dt, dt_stable, end - st.tau});
    double err = 0.0;
    LinkField V = rkmk_step(U, h, f, tab, &err);
    bool ok = std::isfinite(err) && err <= opt.tol;
    double En = E;
    if (ok) {
      En = link_energy(ref, V, w);
      ok = std::isfinite(En) && En <= E + 1e-12 * E + 1e-14 * std::sqrt(E) + 1e-30;
      if (!ok) err = 2.0 * opt.tol;  // forces a shorter step
    }
    double factor = (err > 0.0 && std::isfinite(err)) ? 0.9 * std::pow(opt.tol / err, 0.2) : 5.0;
    factor = std::clamp(factor, 0.2, 5.0);
    if (!ok) {
      ++st.rejected;
      dt = h * std::min(factor, 0.5);
      if (dt < opt.dt_min) {
        snapshot();
        throw FlowError("step underflow", st);
      }
      continue;
    }
    U = std::move(V);
    st.tau += h;
    E = En;
    ++st.accepted;
    st.energy_history.emplace_back(st.tau, E);
    dt = h * factor;
    if (!captured && opt.flat_capture > 0.0 && E < opt.flat_capture) {
      captured = true;
      capture_end = st.tau + opt.capture_budget;
    }
    if (checkpoint && opt.checkpoint_every > 0 && st.accepted % opt.checkpoint_every == 0) {
      snapshot();
      checkpoint(st);
    }
  }
  snapshot();
  return st;
}

double newton_terminal_slope(const std::vector<double>& r, double floor) {
  // last two consecutive pairs above the round-off floor
  std::vector<std::pair<double, double>> pts;
  for (size_t k = 0; k + 1 < r.size(); ++k)
    if (r[k + 1] > floor && r[k] > floor) pts.emplace_back(std::log(r[k]), std::log(r[k + 1]));
  if (pts.size() < 2) return 0.0;
  const size_t m = std::min<size_t>(3, pts.size());
  const size_t s = pts.size() - m;
  double mx = 0, my = 0;
  for (size_t i = s; i < pts.size(); ++i) {
    mx += pts[i].first;
    my += pts[i].second;
  }
  mx /= m;
  my /= m;
  double sxy = 0, sxx = 0;
  for (size_t i = s; i < pts.size(); ++i) {
    sxy += (pts[i].first - mx) * (pts[i].second - my);
    sxx += (pts[i].first - mx) * (pts[i].first - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

NSResult ns_newton(const Connection& c, const NSOptions& opt) {
  if (c.grid().dim() != 2) throw Error(ErrorKind::Precondition, "ns_newton needs a 2D grid");
  const MetricWeights& w = c.weights();
  NSResult res;
  res.Xi = Cochain(c.grid_ptr(), 0, c.n());
  Connection a = c;
  Cochain F = curvature(a);
  double r = norm(F, w);
  if (r > opt.eps0) throw Error(ErrorKind::Precondition, "curvature above the NS threshold eps0");
  res.residuals.push_back(r);
  while (r > opt.tol) {
    if (res.iterations >= opt.max_iter) throw Error(ErrorKind::Solver, "ns_newton iteration cap");
    const CovariantComplex ops(a);
    auto [omega, rep] = solve_laplacian(ops, F, opt.solve_tol, opt.spectral);
    const Cochain zeta = hodge_star(omega, w);
    a = complex_gauge_flow(a, zeta, 1.0, opt.flow_steps);
    res.Xi += zeta;
    ++res.iterations;
    F = curvature(a);
    const double rn = norm(F, w);
    if (res.iterations == 1 && !(rn < r)) throw Error(ErrorKind::Solver, "first Newton step did not decrease the curvature");
    if (!std::isfinite(rn)) throw Error(ErrorKind::Solver, "ns_newton diverged");
    r = rn;
    res.residuals.push_back(r);
  }
  res.flat = a;
  res.curvature_residual = r;
  res.terminal_slope = newton_terminal_slope(res.residuals);
  return res;
}

std::vector<WilsonLoop> spanning_loops(const Grid& g, int offsets) {
  std::vector<WilsonLoop> out;
  const int d = g.dim();
  const long nv = g.vertices();
  std::vector<long> starts;
  for (int k = 0; k < offsets; ++k) starts.push_back((k * 7919L + k * k * 31L) % nv);
  for (long s : starts) {
    for (int a = 0; a < d; ++a) {
      WilsonLoop l{s, {}};
      for (int t = 0; t < g.length(a); ++t) l.path.emplace_back(a, 1);
      out.push_back(l);
    }
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) {
        WilsonLoop l{s, {}};
        for (int t = 0; t < g.length(a); ++t) l.path.emplace_back(a, 1);
        for (int t = 0; t < g.length(b); ++t) l.path.emplace_back(b, 1);
        out.push_back(l);
        out.push_back({s, {{a, 1}, {b, 1}, {a, -1}, {b, -1}}});
        out.push_back({s, {{a, 1}, {a, 1}, {b, 1}, {b, 1}, {a, -1}, {a, -1}, {b, -1}, {b, -1}}});
      }
  }
  return out;
}

OrbitReport orbit_compare(const Connection& a, const Connection& b, const std::vector<WilsonLoop>& loops) {
  if (!a.grid().same(b.grid()) || a.n() != b.n()) throw Error(ErrorKind::Dimension, "orbit_compare needs matching grids");
  const LinkField Ua = links(a), Ub = links(b);
  OrbitReport rep;
  for (const WilsonLoop& l : loops) {
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(wilson_loop(Ua, l.start, l.path) - wilson_loop(Ub, l.start, l.path)));
    ++rep.loops;
  }
  return rep;
}

OrbitReport orbit_compare(const Connection& a, const Connection& b) { return orbit_compare(a, b, spanning_loops(a.grid())); }

int interval_axis(const Grid& g) {
  const auto ax = g.axes_of(AxisBlock::I);
  if (ax.size() != 1) throw Error(ErrorKind::Precondition, "doubling needs exactly one I axis");
  return ax[0];
}

double boundary_normal_defect(const Connection& c) {
  const Grid& g = c.grid();
  const int p = interval_axis(g);
  const long nv = g.vertices();
  std::vector<int> x(g.dim());
  double m = 0.0;
  for (long v = 0; v < nv; ++v) {
    g.coords(v, x.data());
    if (x[p] != g.length(p) - 1) continue;
    const double* a = c.a().at(p * nv + v);
    for (int q = 0; q < c.a().gdim(); ++q) m = std::max(m, std::abs(a[q]));
  }
  return m;
}

namespace {

GridPtr doubled_grid(const Grid& g, int p) {
  GridSpec s;
  for (int i = 0; i < g.dim(); ++i) {
    s.dims.push_back(i == p ? 2 * g.length(i) : g.length(i));
    s.spacing.push_back(g.spacing(i));
    s.blocks.push_back(g.block(i));
  }
  return Grid::make(s);
}

void require_standard_reference(const Connection& c) {
  const ReferencePtr std_ref = build_twisted_reference(c.ref()->twist, c.grid_ptr());
  for (size_t e = 0; e < std_ref->links.size(); ++e)
    if ((std_ref->links[e] - c.ref()->links[e]).norm() > 0.0)
      throw Error(ErrorKind::Precondition, "doubling needs the standard twisted reference");
}

}  // namespace

Connection double_connection(const Connection& c) {
  const Grid& g = c.grid();
  const int p = interval_axis(g);
  require_standard_reference(c);
  if (boundary_normal_defect(c) > 1e-12) throw Error(ErrorKind::Precondition, "boundary normal component does not vanish");
  const GridPtr D = doubled_grid(g, p);
  const ReferencePtr ref = build_twisted_reference(c.ref()->twist, D);
  Cochain a(D, 1, c.n());
  const int L = g.length(p);
  const long nv = g.vertices(), nd = D->vertices();
  const int gd = a.gdim();
  std::vector<int> x(g.dim());
  for (long v = 0; v < nd; ++v) {
    D->coords(v, x.data());
    const int t = x[p];
    const int tr = t < L ? t : 2 * L - 1 - t;
    x[p] = tr;
    const long src = g.index(x.data());
    for (int i = 0; i < g.dim(); ++i) {
      double* out = a.at(i * nd + v);
      if (i != p) {
        std::copy_n(c.a().at(i * nv + src), gd, out);
        continue;
      }
      if (t == L - 1 || t == 2 * L - 1) continue;  // crossing edges stay at the identity
      if (t < L) {
        std::copy_n(c.a().at(p * nv + src), gd, out);
      } else {
        x[p] = 2 * L - 2 - t;
        const double* in = c.a().at(p * nv + g.index(x.data()));
        for (int q = 0; q < gd; ++q) out[q] = -in[q];
      }
    }
  }
  return Connection(ref, std::move(a), hodge_weights(*D, c.weights().epsilon, c.weights().ip));
}

Connection restrict_doubled(const Connection& doubled, const Connection& like) {
  const Grid& g = like.grid();
  const Grid& D = doubled.grid();
  Cochain a(like.grid_ptr(), 1, like.n());
  const long nv = g.vertices(), nd = D.vertices();
  std::vector<int> x(g.dim());
  for (long v = 0; v < nv; ++v) {
    g.coords(v, x.data());
    const long dv = D.index(x.data());
    for (int i = 0; i < g.dim(); ++i) std::copy_n(doubled.a().at(i * nd + dv), a.gdim(), a.at(i * nv + v));
  }
  return Connection(like.ref(), std::move(a), like.weights());
}

double sigma_asymmetry(const Connection& doubled, int p) {
  const Grid& D = doubled.grid();
  const int L2 = D.length(p);
  const long nd = D.vertices();
  const int gd = doubled.a().gdim();
  std::vector<int> x(D.dim());
  double m = 0.0;
  for (long v = 0; v < nd; ++v) {
    D.coords(v, x.data());
    const int t = x[p];
    for (int i = 0; i < D.dim(); ++i) {
      const double* a = doubled.a().at(i * nd + v);
      if (i != p) {
        x[p] = L2 - 1 - t;
        const double* b = doubled.a().at(i * nd + D.index(x.data()));
        for (int q = 0; q < gd; ++q) m = std::max(m, std::abs(a[q] - b[q]));
      } else {
        // edge t -> t+1 mirrors to the reversed edge ending at L2 - 1 - t
        x[p] = ((L2 - 2 - t) % L2 + L2) % L2;
        const double* b = doubled.a().at(i * nd + D.index(x.data()));
        for (int q = 0; q < gd; ++q) m = std::max(m, std::abs(a[q] + b[q]));
      }
      x[p] = t;
    }
  }
  return m;
}

FlowState double_and_flow(const Connection& c, double tau_end, const FlowOptions& opt) {
  const int p = interval_axis(c.grid());
  const Connection d = double_connection(c);
  FlowState st = ym_flow(d, tau_end, opt);
  st.sigma_asymmetry = sigma_asymmetry(st.connection, p);
  st.connection = restrict_doubled(st.connection, c);
  st.boundary_normal = boundary_normal_defect(st.connection);
  return st;
}

double slice_lq_norm(const Cochain& x, double q, const InnerProductSpec& ip) {
  const Grid& g = x.grid();
  const long nv = g.vertices();
  double cell = 1.0;
  for (int i = 0; i < g.dim(); ++i) cell *= g.spacing(i);
  double s = 0.0;
  for (long v = 0; v < nv; ++v) {
    double n2 = 0.0;
    for (int i = 0; i < g.dim(); ++i) {
      const double* a = x.at(x.cell(i, v));
      for (int k = 0; k < x.gdim(); ++k) n2 += a[k] * a[k] / (g.spacing(i) * g.spacing(i));
    }
    s += std::pow(std::sqrt(0.5 * ip.kappa * n2), q) * cell;
  }
  return std::pow(s, 1.0 / q);
}

Cochain sigma_slice(const Connection& c, int layer) {
  const Grid& g = c.grid();
  const auto sig = g.axes_of(AxisBlock::Sigma);
  if (sig.empty()) throw Error(ErrorKind::Precondition, "no Sigma axes");
  GridSpec s;
  for (int a : sig) {
    s.dims.push_back(g.length(a));
    s.spacing.push_back(g.spacing(a));
    s.blocks.push_back(AxisBlock::Sigma);
  }
  const GridPtr S = Grid::make(s);
  Cochain out(S, 1, c.n());
  std::vector<int> x(g.dim(), 0), y(sig.size());
  const int p = interval_axis(g);
  const long nv = g.vertices();
  for (long u = 0; u < S->vertices(); ++u) {
    S->coords(u, y.data());
    std::fill(x.begin(), x.end(), 0);
    for (size_t k = 0; k < sig.size(); ++k) x[sig[k]] = y[k];
    x[p] = layer;
    const long v = g.index(x.data());
    for (size_t k = 0; k < sig.size(); ++k) std::copy_n(c.a().at(sig[k] * nv + v), out.gdim(), out.at(k * S->vertices() + u));
  }
  return out;
}

RestrictionReport boundary_restriction_continuity(const std::vector<Connection>& family, int layer, double tau_end,
                                                  const FlowOptions& opt) {
  RestrictionReport rep;
  for (const Connection& c : family) {
    const FlowState st = double_and_flow(c, tau_end, opt);
    const Cochain gap = sigma_slice(st.connection, layer) - sigma_slice(c, layer);
    const double n1 = slice_lq_norm(gap, 1.0, c.weights().ip), n2 = slice_lq_norm(gap, 2.0, c.weights().ip),
                 n4 = slice_lq_norm(gap, 4.0, c.weights().ip);
    rep.gaps.push_back({n1, n2, n4});
    double vol = 1.0;
    for (int i = 0; i < gap.grid().dim(); ++i) vol *= gap.grid().length(i) * gap.grid().spacing(i);
    rep.holder.push_back(std::pow(vol, 0.25) * n4 - n2);
    rep.curvature.push_back(c.grid().dim() >= 2 ? norm(curvature(c), c.weights()) : 0.0);
  }
  rep.monotone = true;
  for (size_t k = 1; k < family.size(); ++k)
    for (int q = 0; q < 3; ++q)
      if (rep.gaps[k][q] > rep.gaps[k - 1][q]) rep.monotone = false;
  return rep;
}

GaugeField temporal_gauge_transform(const Connection& c, int axis) {
  const Grid& g = c.grid();
  if (axis < 0 || axis >= g.dim()) throw Error(ErrorKind::Precondition, "temporal axis out of range");
  const LinkField U = links(c);
  const long nv = g.vertices();
  GaugeField u(nv);
  std::vector<int> x(g.dim());
  const int L = g.length(axis);
  for (long v = 0; v < nv; ++v) {
    g.coords(v, x.data());
    if (x[axis] != 0) continue;
    Mat cur = Mat::Identity(c.n(), c.n());
    long w = v;
    u[w] = cur;
    for (int t = 0; t + 1 < L; ++t) {
      cur = U.U[axis * nv + w].adjoint() * cur * c.ref()->links[axis * nv + w];
      w = g.step(w, axis);
      u[w] = cur;
    }
  }
  return u;
}

Connection temporal_gauge(const Connection& c, int axis) { return gauge_transform(c, temporal_gauge_transform(c, axis)); }

}  // namespace gaugelab
