#include "gaugelab/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace gaugelab {

std::vector<int> base_axes(const Grid& g) {
  std::vector<int> b;
  for (int a = 0; a < g.dim(); ++a)
    if (g.block(a) != AxisBlock::Sigma) b.push_back(a);
  return b;
}

namespace {

double trapezoid(int x, int lo, int hi) {
  if (x < lo || x > hi) return 0.0;
  if (lo == hi) return 1.0;
  return (x == lo || x == hi) ? 0.5 : 1.0;
}

double vertex_weight(const std::vector<int>& bx, const BaseWindow& win) {
  if (win.empty()) return 1.0;
  double w = 1.0;
  for (size_t i = 0; i < bx.size(); ++i) w *= trapezoid(bx[i], win.lo[i], win.hi[i]);
  return w;
}

void check_window(const Grid& g, const BaseWindow& win) {
  if (win.empty()) return;
  const auto ba = base_axes(g);
  if (win.lo.size() != ba.size() || win.hi.size() != ba.size())
    throw Error(ErrorKind::Precondition, "window needs one range per base axis");
  for (size_t i = 0; i < ba.size(); ++i)
    if (win.lo[i] < 0 || win.hi[i] < win.lo[i] || win.hi[i] >= g.length(ba[i]))
      throw Error(ErrorKind::Precondition, "window range outside the base");
}

// sign of the permutation (base axes, Sigma axes) of the grid axes
int product_orientation(const Grid& g) {
  return shuffle_sign(base_axes(g), g.axes_of(AxisBlock::Sigma));
}

void check_product4(const Grid& g) {
  if (g.dim() != 4 || g.axes_of(AxisBlock::Sigma).size() != 2)
    throw Error(ErrorKind::Precondition, "needs a 4D grid with two base and two Sigma axes");
}

double sq(const double* x, int gd) {
  double s = 0.0;
  for (int q = 0; q < gd; ++q) s += x[q] * x[q];
  return s;
}

// centred base difference of the projected family, per unit coordinate length
Cochain base_derivative(const NSSliceFamily& f, long x, int m) {
  const Grid& B = *f.slices.base_grid;
  std::vector<int> bx(B.dim());
  B.coords(x, bx.data());
  long xf = B.step(x, m), xb = B.step_back(x, m);
  double span = 2.0;
  if (B.block(m) == AxisBlock::I) {
    if (bx[m] == 0) {
      xb = x;
      span = 1.0;
    }
    if (bx[m] == B.length(m) - 1) {
      xf = x;
      span = 1.0;
    }
  }
  return (f.flat[xf] - f.flat[xb]) * (1.0 / (span * B.spacing(m)));
}

// sum over face types of sign <Fbar_K, Fbar_K^c> per hypercube, Fbar the mean of the four
// parallel faces in the cube carried to the base fiber
std::vector<double> cube_pairing_density(const Connection& c) {
  const Grid& g = c.grid();
  const LinkField U = links(c);
  const EdgeTransport ad = edge_adjoint(U);
  const Cochain F = curvature(*c.ref(), U);
  const int gd = F.gdim();
  const long nv = g.vertices();
  std::vector<double> out(nv, 0.0);
  Eigen::VectorXd bar[6];
  for (long v = 0; v < nv; ++v) {
    for (int cmb = 0; cmb < 6; ++cmb) {
      const unsigned K = g.combo_mask(2, cmb);
      std::vector<int> comp;
      for (int a = 0; a < 4; ++a)
        if (!(K & (1u << a))) comp.push_back(a);
      const int i = comp[0], j = comp[1];
      auto val = [&](long w) { return Eigen::Map<const Eigen::VectorXd>(F.at(F.cell(cmb, w)), gd); };
      const long vi = g.step(v, i), vj = g.step(v, j), vij = g.step(vi, j);
      Eigen::VectorXd m = val(v);
      m += ad[i * nv + v] * val(vi);
      m += ad[j * nv + v] * val(vj);
      m += ad[i * nv + v] * (ad[j * nv + vi] * val(vij));
      bar[cmb] = 0.25 * m;
    }
    double s = 0.0;
    for (int cmb = 0; cmb < 6; ++cmb) {
      const int cc = g.combo_index(15u & ~g.combo_mask(2, cmb));
      s += shuffle_sign(g.combo(2, cmb), g.combo(2, cc)) * bar[cmb].dot(bar[cc]);
    }
    out[v] = 0.5 * c.weights().ip.kappa * s;
  }
  return out;
}

}  // namespace

double window_weight(const Grid& g, const BaseWindow& win, int degree, int combo, long v) {
  if (win.empty()) return 1.0;
  const auto ba = base_axes(g);
  std::vector<int> x(g.dim());
  g.coords(v, x.data());
  const unsigned mask = g.combo_mask(degree, combo);
  double w = 1.0;
  for (size_t i = 0; i < ba.size(); ++i) {
    const int xm = x[ba[i]];
    if (mask & (1u << ba[i]))
      w *= (xm >= win.lo[i] && xm < win.hi[i]) ? 1.0 : 0.0;
    else
      w *= trapezoid(xm, win.lo[i], win.hi[i]);
  }
  return w;
}

Cochain smooth_random_cochain(GridPtr g, int degree, int n, int modes, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  Cochain out(g, degree, n);
  const int d = g->dim(), gd = out.gdim();
  const long nv = g->vertices();
  long count = 1;
  for (int i = 0; i < d; ++i) count *= 2 * modes + 1;
  const double scale = amplitude / std::sqrt(static_cast<double>(count));
  std::vector<int> k(d), x(d);
  std::vector<double> phase_rate(d);
  for (int cmb = 0; cmb < g->num_combos(degree); ++cmb)
    for (int q = 0; q < gd; ++q)
      for (long m = 0; m < count; ++m) {
        long r = m;
        for (int i = 0; i < d; ++i) {
          k[i] = static_cast<int>(r % (2 * modes + 1)) - modes;
          r /= 2 * modes + 1;
          phase_rate[i] = 2.0 * std::numbers::pi * k[i] / g->length(i);
        }
        const double c = scale * nd(rng), p0 = ph(rng);
        for (long v = 0; v < nv; ++v) {
          g->coords(v, x.data());
          double p = p0;
          for (int i = 0; i < d; ++i) p += phase_rate[i] * x[i];
          out.at(out.cell(cmb, v))[q] += c * std::cos(p);
        }
      }
  return out;
}

AsdResidual asd_residual(const Connection& c, double epsilon) {
  const Grid& g = c.grid();
  check_product4(g);
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Precondition, "epsilon must be positive");
  const auto ba = base_axes(g);
  const auto sa = g.axes_of(AxisBlock::Sigma);
  const int o = product_orientation(g);
  const MetricWeights w = hodge_weights(g, epsilon, c.weights().ip);
  const Cochain F = curvature(c);
  Cochain G = hodge_star(F, w);
  G *= o;
  G += F;

  AsdResidual r;
  r.epsilon = epsilon;
  const SliceDecomposition s = slice_extract(c);
  const long nb = s.num_base(), ns = s.sigma_grid->vertices();
  const int gd = F.gdim();
  const double half_kappa = 0.5 * w.ip.kappa;
  r.res1.assign(nb, Cochain(s.sigma_grid, 1, c.n()));
  r.res2.assign(nb, Cochain(s.sigma_grid, 0, c.n()));
  const int face2 = g.combo_index((1u << ba[0]) | (1u << ba[1]));
  for (long x = 0; x < nb; ++x)
    for (long y = 0; y < ns; ++y) {
      const long v = s.full_vertex(x, y);
      for (int k = 0; k < 2; ++k) {
        const int face = g.combo_index((1u << ba[0]) | (1u << sa[k]));
        const double sgn = ba[0] < sa[k] ? 1.0 : -1.0;
        const double* src = G.at(G.cell(face, v));
        double* dst = r.res1[x].at(k * ns + y);
        for (int q = 0; q < gd; ++q) dst[q] = sgn * src[q];
        r.norm1_sq += w.weight(2, face) * half_kappa * sq(src, gd);
      }
      const double* src = G.at(G.cell(face2, v));
      std::copy_n(src, gd, r.res2[x].at(y));
      r.norm2_sq += w.weight(2, face2) * half_kappa * sq(src, gd);
    }
  r.energy = 0.5 * inner_product(F, F, w);
  r.pairing = o * star_pairing(F, w.ip);
  const double lhs = r.norm1_sq + r.norm2_sq, rhs = 2.0 * r.energy + r.pairing;
  r.identity_defect = std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return r;
}

Connection NSSliceFamily::slice_flat(long x) const {
  return Connection(slices.sigma_ref, flat.at(x), hodge_weights(*slices.sigma_grid, 1.0, slices.weights.ip));
}

NSSliceFamily ns_slice_family(const Connection& c, const NSOptions& opt) {
  NSSliceFamily f;
  f.slices = slice_extract(c);
  const long nb = f.slices.num_base();
  for (long x = 0; x < nb; ++x) {
    const Connection sc = slice_connection(f.slices, x);
    NSResult r;
    try {
      r = ns_newton(sc, opt);
    } catch (const Error& e) {
      throw Error(e.kind(), "slice " + std::to_string(x) + ": " + e.what());
    }
    f.curvature.push_back(r.residuals.empty() ? norm(curvature(sc), sc.weights()) : r.residuals.front());
    f.distance.push_back(norm(r.flat.a() - sc.a(), sc.weights()));
    f.iterations.push_back(r.iterations);
    f.flat.push_back(r.flat.a());
    f.Xi.push_back(std::move(r.Xi));
  }
  return f;
}

namespace {

struct ProjectedVelocity {
  Cochain ds, dt;  // harmonic parts at the projected slice
  MetricWeights w;
};

ProjectedVelocity projected_velocity(const NSSliceFamily& f, long x, const NSOptions& ns = {}) {
  const Connection sc = f.slice_flat(x);
  const HarmonicBasis hb = harmonic_basis(sc, ns.spectral);
  ProjectedVelocity p;
  p.w = sc.weights();
  p.ds = harmonic_project(hb, base_derivative(f, x, 0), p.w);
  p.dt = harmonic_project(hb, base_derivative(f, x, 1), p.w);
  return p;
}

std::vector<int> base_coords(const NSSliceFamily& f, long x) {
  std::vector<int> bx(f.slices.base_grid->dim());
  f.slices.base_grid->coords(x, bx.data());
  return bx;
}

}  // namespace

std::vector<double> holomorphic_residual(const NSSliceFamily& f, const BaseWindow& win) {
  if (f.slices.base_axes.size() != 2 || f.slices.sigma_axes.size() != 2)
    throw Error(ErrorKind::Precondition, "holomorphic residual needs two base and two Sigma axes");
  check_window(*f.slices.grid, win);
  const long nb = f.slices.num_base();
  std::vector<double> out(nb, 0.0);
  for (long x = 0; x < nb; ++x) {
    if (vertex_weight(base_coords(f, x), win) == 0.0) continue;
    const ProjectedVelocity p = projected_velocity(f, x);
    out[x] = norm(p.ds + hodge_star(p.dt, p.w), p.w);
  }
  return out;
}

double symp_energy(const NSSliceFamily& f, const BaseWindow& win) {
  if (f.slices.base_axes.size() != 2) throw Error(ErrorKind::Precondition, "symplectic energy needs two base axes");
  check_window(*f.slices.grid, win);
  const Grid& B = *f.slices.base_grid;
  const double cell = B.spacing(0) * B.spacing(1);
  double e = 0.0;
  for (long x = 0; x < f.slices.num_base(); ++x) {
    const double wt = vertex_weight(base_coords(f, x), win);
    if (wt == 0.0) continue;
    const ProjectedVelocity p = projected_velocity(f, x);
    e += wt * 0.5 * (inner_product(p.ds, p.ds, p.w) + inner_product(p.dt, p.dt, p.w)) * cell;
  }
  return e;
}

double chern_weil_energy(const Connection& c, const BaseWindow& win) {
  const Grid& g = c.grid();
  check_product4(g);
  check_window(g, win);
  const std::vector<double> dens = clover_density(c);
  double s = 0.0;
  for (long v = 0; v < g.vertices(); ++v) s += window_weight(g, win, 0, 0, v) * dens[v];
  return -0.5 * product_orientation(g) * s;
}

double inst_energy(const Connection& c, double epsilon, const BaseWindow& win) {
  const Grid& g = c.grid();
  if (g.dim() < 2) return 0.0;
  check_window(g, win);
  const MetricWeights w = hodge_weights(g, epsilon, c.weights().ip);
  const Cochain F = curvature(c);
  const int gd = F.gdim();
  double e = 0.0;
  for (int cmb = 0; cmb < g.num_combos(2); ++cmb)
    for (long v = 0; v < g.vertices(); ++v) {
      const double wt = window_weight(g, win, 2, cmb, v);
      if (wt != 0.0) e += wt * w.weight(2, cmb) * sq(F.at(F.cell(cmb, v)), gd);
    }
  return 0.25 * w.ip.kappa * e;
}

AdiabaticReport adiabatic_report(const Connection& c, double epsilon, bool with_ns, const NSOptions& ns) {
  const Grid& g = c.grid();
  check_product4(g);
  const auto ba = base_axes(g);
  const auto sa = g.axes_of(AxisBlock::Sigma);
  const AsdResidual r = asd_residual(c, epsilon);
  const Cochain F = curvature(c);
  const int gd = F.gdim();
  const double hk = 0.5 * c.weights().ip.kappa;
  const int fs = g.combo_index((1u << sa[0]) | (1u << sa[1])), fb = g.combo_index((1u << ba[0]) | (1u << ba[1]));
  const double as = g.spacing(sa[0]) * g.spacing(sa[1]), ab = g.spacing(ba[0]) * g.spacing(ba[1]);

  AdiabaticReport rep;
  rep.epsilon = epsilon;
  const SliceDecomposition s = slice_extract(c);
  const long nb = s.num_base(), ns_ = s.sigma_grid->vertices();
  rep.slice_curvature.assign(nb, 0.0);
  double num = 0.0, den = 0.0;
  const double e2 = epsilon * epsilon;
  for (long x = 0; x < nb; ++x)
    for (long y = 0; y < ns_; ++y) {
      const long v = s.full_vertex(x, y);
      const double* fa = F.at(F.cell(fs, v));
      const double* ga = F.at(F.cell(fb, v));
      rep.slice_curvature[x] = std::max(rep.slice_curvature[x], std::sqrt(hk * sq(fa, gd)) / as);
      rep.sup_gamma = std::max(rep.sup_gamma, std::sqrt(hk * sq(ga, gd)) / ab);
      num += hk * e2 * e2 * sq(r.res2[x].at(y), gd) / (ab * ab);
      den += hk * sq(fa, gd) / (as * as);
    }
  rep.sup_slice_curvature = *std::max_element(rep.slice_curvature.begin(), rep.slice_curvature.end());
  rep.identity_ratio = den > 0.0 ? std::sqrt(num / den) : 0.0;
  rep.res1 = std::sqrt(r.norm1_sq);
  rep.res2 = std::sqrt(r.norm2_sq);
  rep.inst_energy = r.energy;
  rep.charge = topological_charge(c, c.weights().ip);
  if (with_ns) {
    const NSSliceFamily f = ns_slice_family(c, ns);
    const auto h = holomorphic_residual(f);
    rep.holomorphic = *std::max_element(h.begin(), h.end());
    rep.symp_energy = symp_energy(f);
  }
  return rep;
}

RelaxResult relax_epsilon_asd(const Connection& c0, double epsilon, double budget, const RelaxOptions& opt) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Precondition, "epsilon must be positive");
  if (!(budget > 0.0) || opt.snapshots < 1) throw Error(ErrorKind::Precondition, "relaxation needs a positive budget");
  RelaxResult out;
  Connection cur = c0.with_weights(hodge_weights(c0.grid(), epsilon, c0.weights().ip));
  out.snapshots.push_back(adiabatic_report(cur, epsilon, opt.with_ns, opt.ns));
  FlowState& total = out.state;
  total.connection = cur;
  total.energy_history.emplace_back(0.0, ym_energy(cur));
  const double seg = budget / opt.snapshots;
  for (int k = 0; k < opt.snapshots; ++k) {
    FlowState st = ym_flow(cur, seg, opt.flow);
    for (size_t i = 1; i < st.energy_history.size(); ++i)
      total.energy_history.emplace_back(total.tau + st.energy_history[i].first, st.energy_history[i].second);
    total.tau += st.tau;
    total.accepted += st.accepted;
    total.rejected += st.rejected;
    total.dt = st.dt;
    total.flat_limit = st.flat_limit;
    cur = st.connection;
    AdiabaticReport rep = adiabatic_report(cur, epsilon, opt.with_ns, opt.ns);
    rep.tau = total.tau;
    out.snapshots.push_back(std::move(rep));
    if (st.flat_limit) break;
  }
  total.connection = cur;
  return out;
}

ScalingTable curvature_scaling_probe(const ScalingConfig& cfg) {
  if (cfg.epsilons.empty()) throw Error(ErrorKind::Precondition, "empty epsilon list");
  for (size_t i = 0; i < cfg.epsilons.size(); ++i) {
    if (!(cfg.epsilons[i] > 0.0)) throw Error(ErrorKind::Precondition, "epsilon must be positive");
    if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1])) throw Error(ErrorKind::Precondition, "epsilon list must decrease");
  }
  const GridPtr g = Grid::make(cfg.grid);
  const ReferencePtr ref = build_twisted_reference(cfg.twist, g);
  Cochain a0 = smooth_random_cochain(g, 1, cfg.twist.n, cfg.modes, cfg.amplitude, cfg.seed);
  if (cfg.slicewise_flat) {
    const std::vector<int> base = base_axes(*g);
    for (int i = 0; i < g->dim(); ++i) {
      if (std::find(base.begin(), base.end(), i) != base.end()) continue;
      for (long v = 0; v < g->vertices(); ++v) std::fill_n(a0.at(a0.cell(i, v)), a0.gdim(), 0.0);
    }
  }
  if (cfg.segments < 1 || !(cfg.budget > 0.0)) throw Error(ErrorKind::Precondition, "scaling probe needs a positive budget");
  ScalingTable t;
  double lo = 0.0, hi = 0.0;
  for (double eps : cfg.epsilons) {
    Connection cur(ref, a0, hodge_weights(*g, eps));
    const AdiabaticReport a = adiabatic_report(cur, eps);
    auto self_dual = [eps](const Connection& c) {
      const AsdResidual r = asd_residual(c, eps);
      return std::sqrt(r.norm1_sq + r.norm2_sq);
    };
    const double r0 = self_dual(cur);
    ScalingRow row;
    row.epsilon = eps;
    row.reached = r0 == 0.0;
    for (int k = 0; k < cfg.segments && !row.reached; ++k) {
      const FlowState st = ym_flow(cur, cfg.budget / cfg.segments, cfg.flow);
      cur = st.connection;
      row.tau += st.tau;
      row.reached = self_dual(cur) <= cfg.residual_fraction * r0 || st.flat_limit;
    }
    const AdiabaticReport b = adiabatic_report(cur, eps);
    row.sup_slice_curvature = b.sup_slice_curvature;
    row.sup_gamma = b.sup_gamma;
    const double den = eps * eps * b.sup_gamma;
    row.floor_triggered = den < cfg.floor;
    row.rho = b.sup_slice_curvature == 0.0 ? 0.0 : b.sup_slice_curvature / (den + cfg.floor);
    row.identity_ratio_start = a.identity_ratio;
    row.identity_ratio_end = b.identity_ratio;
    row.energy_start = a.inst_energy;
    row.energy_end = b.inst_energy;
    if (row.rho > 0.0) {
      lo = lo == 0.0 ? row.rho : std::min(lo, row.rho);
      hi = std::max(hi, row.rho);
    }
    t.rows.push_back(row);
  }
  t.band = lo > 0.0 ? hi / lo : 0.0;
  return t;
}

Connection hyperslice(const Connection& c, int axis, int layer) {
  const Grid& g = c.grid();
  if (axis < 0 || axis >= g.dim() || g.dim() < 2) throw Error(ErrorKind::Precondition, "slice axis out of range");
  GridSpec s;
  std::vector<int> keep;
  for (int a = 0; a < g.dim(); ++a)
    if (a != axis) {
      keep.push_back(a);
      s.dims.push_back(g.length(a));
      s.spacing.push_back(g.spacing(a));
      s.blocks.push_back(g.block(a));
    }
  TwistSpec tw;
  tw.n = c.n();
  auto remap = [axis](int a) { return a > axis ? a - 1 : a; };
  for (const Flux& f : c.ref()->twist.fluxes) {
    if (f.axis_a == axis || f.axis_b == axis) throw Error(ErrorKind::Precondition, "slice axis carries a twist");
    tw.fluxes.push_back(Flux{remap(f.axis_a), remap(f.axis_b), f.value});
  }
  const GridPtr sg = Grid::make(s);
  const long nv = g.vertices(), ns = sg->vertices();
  const int k = static_cast<int>(keep.size());
  std::vector<Mat> rl(sg->cells(1));
  Cochain a(sg, 1, c.n());
  std::vector<int> y(k), x(g.dim());
  for (long u = 0; u < ns; ++u) {
    sg->coords(u, y.data());
    for (int i = 0; i < k; ++i) x[keep[i]] = y[i];
    x[axis] = layer;
    const long v = g.index(x.data());
    for (int i = 0; i < k; ++i) {
      rl[i * ns + u] = c.ref()->links[keep[i] * nv + v];
      std::copy_n(c.a().at(keep[i] * nv + v), a.gdim(), a.at(i * ns + u));
    }
  }
  const ReferencePtr ref = reference_from_links(sg, c.n(), std::move(rl), tw);
  return Connection(ref, std::move(a), hodge_weights(*sg, c.weights().epsilon, c.weights().ip));
}

CSEnergyReport chern_simons_energy_check(const Connection& c, const CSEnergyOptions& opt) {
  const Grid& g = c.grid();
  if (g.dim() != 4) throw Error(ErrorKind::Precondition, "Chern-Simons energy check needs a 4D grid");
  const int p = opt.axis;
  if (p < 0 || p >= 4) throw Error(ErrorKind::Precondition, "cylinder axis out of range");
  const int first = opt.first, last = opt.last < 0 ? g.length(p) - 1 : opt.last;
  if (first < 0 || last <= first || last >= g.length(p)) throw Error(ErrorKind::Precondition, "bad end layers");
  const Connection lo = hyperslice(c, p, first), hi = hyperslice(c, p, last);
  CSEnergyReport r;
  r.end_curvature = std::max(norm(curvature(lo), lo.weights()), norm(curvature(hi), hi.weights()));
  if (opt.require_flat_ends && r.end_curvature > opt.end_tol)
    throw Error(ErrorKind::Precondition, "non-flat ends: " + std::to_string(r.end_curvature));
  r.cs_minus = chern_simons(lo);
  r.cs_plus = chern_simons(hi);

  std::vector<int> x(4);
  auto cell_weight = [&](unsigned mask, long v) {
    g.coords(v, x.data());
    if (mask & (1u << p)) return (x[p] >= first && x[p] < last) ? 1.0 : 0.0;
    return trapezoid(x[p], first, last);
  };
  const Cochain F = curvature(c);
  const int gd = F.gdim();
  const MetricWeights& w = c.weights();
  double e = 0.0;
  for (int cmb = 0; cmb < 6; ++cmb)
    for (long v = 0; v < g.vertices(); ++v) {
      const double wt = cell_weight(g.combo_mask(2, cmb), v);
      if (wt != 0.0) e += wt * w.weight(2, cmb) * sq(F.at(F.cell(cmb, v)), gd);
    }
  r.inst_energy = 0.25 * w.ip.kappa * e;
  const std::vector<double> dens = cube_pairing_density(c);
  double s = 0.0;
  for (long v = 0; v < g.vertices(); ++v) s += cell_weight(15u, v) * dens[v];
  const int o = (p % 2 == 0) ? 1 : -1;
  r.pairing_energy = -0.5 * o * s;
  const double d = r.cs_minus - r.cs_plus;
  r.energy_defect = std::abs(r.inst_energy - d);
  r.pairing_defect = std::abs(r.pairing_energy - d);
  return r;
}

NablaProbe nabla_s_bound_probe(const Connection& c, double epsilon, int k0, int k1, int rho) {
  const Grid& g = c.grid();
  const auto ba = base_axes(g);
  if (ba.empty()) throw Error(ErrorKind::Precondition, "no base axis");
  const int p = ba[0];
  const int L = g.length(p);
  if (k1 < k0 || rho < 1 || k1 - k0 + 1 + 2 * rho > L)
    throw Error(ErrorKind::Precondition, "window too small for second differences");
  const Connection t = temporal_gauge(c, p);
  const LinkField U = links(t);
  const EdgeTransport ad = edge_adjoint(U);
  const Cochain F = curvature(*t.ref(), U);
  const MetricWeights w = hodge_weights(g, epsilon, c.weights().ip);
  const int gd = F.gdim();
  const long nv = g.vertices();
  const double h = g.spacing(p), hk = 0.5 * w.ip.kappa;
  auto in_layers = [L](int xp, int a, int b) {
    for (int s = a; s <= b; ++s)
      if (((s % L) + L) % L == xp) return true;
    return false;
  };
  std::vector<int> x(g.dim());
  NablaProbe r;
  Eigen::VectorXd fwd(gd), bwd(gd), mid(gd);
  for (long v = 0; v < nv; ++v) {
    g.coords(v, x.data());
    const bool inK = in_layers(x[p], k0, k1), inW = in_layers(x[p], k0 - rho, k1 + rho);
    if (!inW) continue;
    const long vf = g.step(v, p), vb = g.step_back(v, p);
    for (int cmb = 0; cmb < g.num_combos(2); ++cmb) {
      const double W = w.weight(2, cmb);
      mid = Eigen::Map<const Eigen::VectorXd>(F.at(F.cell(cmb, v)), gd);
      r.base += W * hk * mid.squaredNorm();
      if (!inK) continue;
      fwd = ad[p * nv + v] * Eigen::Map<const Eigen::VectorXd>(F.at(F.cell(cmb, vf)), gd);
      bwd = ad[p * nv + vb].transpose() * Eigen::Map<const Eigen::VectorXd>(F.at(F.cell(cmb, vb)), gd);
      r.d1 += W * hk * ((fwd - bwd) / (2.0 * h)).squaredNorm();
      r.d2 += W * hk * ((fwd - 2.0 * mid + bwd) / (h * h)).squaredNorm();
    }
  }
  r.d1 = std::sqrt(r.d1);
  r.d2 = std::sqrt(r.d2);
  r.base = std::sqrt(r.base);
  r.constant = r.base > 0.0 ? (r.d1 + r.d2) / r.base : 0.0;
  return r;
}

}  // namespace gaugelab
