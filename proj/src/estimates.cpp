#include "gaugelab/estimates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace gaugelab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  void str(const std::string& s) { bytes(s.data(), s.size()); }
  void num(double x) { bytes(&x, sizeof x); }
  void nums(const std::vector<double>& v) {
    if (!v.empty()) bytes(v.data(), v.size() * sizeof(double));
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

void hash_connection(Fnv& f, const Connection& c) {
  const GridSpec& s = c.grid().spec();
  for (int d : s.dims) f.num(d);
  f.nums(s.spacing);
  for (AxisBlock b : s.blocks) f.str(to_string(b));
  f.num(c.n());
  for (const Flux& x : c.ref()->twist.fluxes) {
    f.num(x.axis_a);
    f.num(x.axis_b);
    f.num(x.value);
  }
  f.num(c.weights().epsilon);
  f.nums(c.a().data());
}

double trapezoid(const std::vector<double>& v, std::size_t i0, std::size_t i1, double h) {
  if (i1 <= i0) return 0.0;
  double s = 0.5 * (v[i0] + v[i1]);
  for (std::size_t i = i0 + 1; i < i1; ++i) s += v[i];
  return s * h;
}

double vec_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

std::vector<double> vec_sub(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Eigen::MatrixXd frame_matrix(const HarmonicBasis& b) {
  const long N = b.vectors.empty() ? 0 : static_cast<long>(b.vectors[0].data().size());
  Eigen::MatrixXd Q(N, b.vectors.size());
  for (std::size_t j = 0; j < b.vectors.size(); ++j)
    Q.col(j) = Eigen::Map<const Eigen::VectorXd>(b.vectors[j].data().data(), N);
  return Q;
}

Eigen::VectorXd cell_metric(const Cochain& x, const MetricWeights& w) {
  const Grid& g = x.grid();
  const long nv = g.vertices();
  Eigen::VectorXd m(x.data().size());
  for (long c = 0; c < x.cells(); ++c) {
    const double wt = 0.5 * w.ip.kappa * w.weight(x.degree(), static_cast<int>(c / nv));
    for (int q = 0; q < x.gdim(); ++q) m[c * x.gdim() + q] = wt;
  }
  return m;
}

Cochain normalized(const Cochain& x, const MetricWeights& w) {
  const double n = norm(x, w);
  if (!(n > 0.0)) throw Error(ErrorKind::Precondition, "probe has zero norm");
  return x * (1.0 / n);
}

}  // namespace

Connection twisted_flat(GridPtr g) {
  auto w = hodge_weights(*g, 1.0);
  return flat_connection(build_twisted_reference(TwistSpec{2, {Flux{0, 1, 1}}}, std::move(g)), w);
}

Connection diagonal_flat(GridPtr g, double th0, double th1) {
  if (g->dim() != 2) throw Error(ErrorKind::Dimension, "diagonal flat connection needs a 2D grid");
  Cochain a(g, 1, 2);
  for (long v = 0; v < g->vertices(); ++v) {
    a.at(a.cell(0, v))[2] = th0;
    a.at(a.cell(1, v))[2] = th1;
  }
  auto w = hodge_weights(*g, 1.0);
  return flat_connection(build_twisted_reference(TwistSpec{2, {}}, std::move(g)), w).with_deviation(a);
}

Cochain gaussian_cochain(GridPtr g, int degree, int n, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Cochain x(std::move(g), degree, n);
  for (double& v : x.data()) v = nd(rng);
  return x;
}

std::string fingerprint_hex(const std::string& canonical) {
  Fnv f;
  f.str(canonical);
  return f.hex();
}

double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [x, y] : pts) {
    if (!(x > 0.0) || !(y > 0.0)) continue;
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw Error(ErrorKind::Precondition, "slope needs two positive points");
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw Error(ErrorKind::Precondition, "slope needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------------------------
// window inequality

EstimateReport check_gslemma(const Sampled& e, const Sampled& f, const Sampled& g, double R, double r,
                             const GsOptions& opt) {
  if (!(R > 0.0) || !(r > 0.0)) throw Error(ErrorKind::Precondition, "gslemma needs R > 0 and r > 0");
  const std::size_t N = e.v.size();
  if (N < 5 || f.v.size() != N || g.v.size() != N) throw Error(ErrorKind::Precondition, "gslemma samples must match");
  const double L = R + r;
  for (const Sampled* s : {&e, &f, &g})
    if (std::abs(s->lo + L) > 1e-9 * L || std::abs(s->hi - L) > 1e-9 * L || s->lo != e.lo || s->hi != e.hi)
      throw Error(ErrorKind::Precondition, "gslemma samples must cover [-(R+r), R+r]");
  const double h = e.step();
  const double jr = (L - R) / h;
  const long j = std::lround(jr);
  if (std::abs(jr - static_cast<double>(j)) > 1e-6) throw Error(ErrorKind::Precondition, "+-R must fall on sample nodes");
  const std::size_t iL = static_cast<std::size_t>(j), iR = N - 1 - iL;

  double scale = 0.0;
  for (const Sampled* s : {&e, &f, &g})
    for (double x : s->v) scale = std::max(scale, std::abs(x));
  std::vector<double> e2(N);
  for (std::size_t i = 1; i + 1 < N; ++i) e2[i] = (e.v[i - 1] - 2.0 * e.v[i] + e.v[i + 1]) / (h * h);
  e2[0] = e2[1];
  e2[N - 1] = e2[N - 2];
  double scale2 = scale;
  for (double x : e2) scale2 = std::max(scale2, std::abs(x));
  const double pt = opt.pre_tol * std::max(1.0, scale2);

  auto fail = [](const std::string& what, std::size_t i, double margin) {
    std::ostringstream os;
    os << "gslemma precondition: " << what << " at sample " << i << " (margin " << margin << ")";
    throw Error(ErrorKind::Precondition, os.str(), static_cast<long>(i));
  };
  for (std::size_t i = 0; i < N; ++i) {
    if (e.v[i] < -pt) fail("e >= 0", i, e.v[i]);
    if (f.v[i] < -pt) fail("f >= 0", i, f.v[i]);
    if ((i <= iL || i >= iR) && g.v[i] < -pt) fail("g >= 0 outside B_R", i, g.v[i]);
    if (g.v[i] > f.v[i] + e2[i] + pt) fail("g <= f + e''", i, f.v[i] + e2[i] - g.v[i]);
  }
  const double gin = trapezoid(g.v, iL, iR, h);
  if (gin < -opt.tol) fail("int_{B_R} g >= 0", iL, gin);

  const double lhs = gin;
  const double fint = trapezoid(f.v, 0, N - 1, h);
  const double eann = trapezoid(e.v, 0, iL, h) + trapezoid(e.v, iR, N - 1, h);
  const double rhs = fint + 4.0 / (r * r) * eann;

  EstimateReport rep;
  rep.name = "gslemma";
  rep.constants["lhs"] = lhs;
  rep.constants["rhs"] = rhs;
  rep.constants["slack"] = rhs - lhs;
  rep.bands["tol"] = opt.tol;
  rep.pass = lhs <= rhs + opt.tol;
  if (!rep.pass) {
    std::ostringstream os;
    os << "inequality violated by " << (lhs - rhs);
    rep.notes.push_back(os.str());
  }
  Fnv fp;
  fp.str("gslemma");
  fp.num(R);
  fp.num(r);
  fp.nums(e.v);
  fp.nums(f.v);
  fp.nums(g.v);
  rep.fingerprint = fp.hex();
  return rep;
}

GsTrial random_gs_trial(std::uint64_t seed, int samples, long* rejected) {
  if (samples < 41 || samples % 2 == 0) throw Error(ErrorKind::Precondition, "gslemma trials need an odd sample count >= 41");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> Nd(0.0, 1.0);
  const int m = (samples - 1) / 2;
  for (long attempt = 0; attempt < 100000; ++attempt) {
    GsTrial t;
    const double L = 1.0 + 2.0 * U(rng);
    const int jR = m / 5 + static_cast<int>(U(rng) * (0.7 * m));
    const double h = L / m;
    t.R = jR * h;
    t.r = L - t.R;
    auto modes = [&](int K, double amp) {
      std::vector<std::array<double, 3>> c;
      for (int k = 1; k <= K; ++k) c.push_back({amp * Nd(rng) / k, amp * Nd(rng) / k, 0.5 * kPi * k / L});
      return c;
    };
    auto eval = [](const std::vector<std::array<double, 3>>& c, double x) {
      double s = 0.0;
      for (const auto& [a, b, k] : c) s += a * std::cos(k * x) + b * std::sin(k * x);
      return s;
    };
    const auto ce = modes(4, 1.0), cf = modes(3, 1.0), cq = modes(3, 0.5);
    const double f0 = U(rng), q0 = U(rng);
    for (Sampled* s : {&t.e, &t.f, &t.g}) {
      s->lo = -L;
      s->hi = L;
      s->v.assign(samples, 0.0);
    }
    double emin = 1e300;
    for (int i = 0; i < samples; ++i) {
      const double x = t.e.x(i);
      t.e.v[i] = eval(ce, x);
      emin = std::min(emin, t.e.v[i]);
      const double fv = f0 + eval(cf, x);
      t.f.v[i] = fv * fv;
    }
    const double shift = U(rng) * 0.5;
    for (double& v : t.e.v) v += shift - emin;
    for (int i = 0; i < samples; ++i) {
      const int a = std::clamp(i, 1, samples - 2);
      const double e2 = (t.e.v[a - 1] - 2.0 * t.e.v[a] + t.e.v[a + 1]) / (h * h);
      const double qv = q0 + eval(cq, t.e.x(i));
      t.g.v[i] = t.f.v[i] + e2 - qv * qv;
    }
    bool ok = true;
    const int iL = m - jR, iR = m + jR;
    for (int i = 0; i < samples && ok; ++i)
      if ((i <= iL || i >= iR) && t.g.v[i] < 0.0) ok = false;
    if (ok && trapezoid(t.g.v, iL, iR, h) < 0.0) ok = false;
    if (ok) return t;
    if (rejected) ++*rejected;
  }
  throw Error(ErrorKind::Solver, "gslemma rejection sampling did not find a valid trio");
}

EstimateReport gslemma_suite(std::uint64_t seed, int trials, int samples, const GsOptions& opt) {
  if (trials < 1) throw Error(ErrorKind::Precondition, "gslemma suite needs at least one trial");
  std::mt19937_64 seeds(seed);
  EstimateReport rep;
  rep.name = "gslemma";
  long rejected = 0;
  int violations = 0;
  double max_ratio = 0.0, min_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    const GsTrial t = random_gs_trial(seeds(), samples, &rejected);
    const EstimateReport r = check_gslemma(t.e, t.f, t.g, t.R, t.r, opt);
    if (!r.pass) {
      ++violations;
      rep.notes.push_back("trial " + std::to_string(k) + ": " + r.notes.front());
    }
    const double lhs = r.constants.at("lhs"), rhs = r.constants.at("rhs");
    if (rhs > 0.0) max_ratio = std::max(max_ratio, lhs / rhs);
    min_slack = std::min(min_slack, rhs - lhs);
    rep.points.emplace_back(rhs, lhs);
  }
  rep.constants["trials"] = trials;
  rep.constants["violations"] = violations;
  rep.constants["rejected"] = static_cast<double>(rejected);
  rep.constants["max_ratio"] = max_ratio;
  rep.constants["min_slack"] = min_slack;
  rep.bands["tol"] = opt.tol;
  rep.pass = violations == 0;
  Fnv fp;
  fp.str("gslemma_suite");
  fp.num(static_cast<double>(seed));
  fp.num(trials);
  fp.num(samples);
  fp.num(opt.tol);
  rep.fingerprint = fp.hex();
  return rep;
}

// ---------------------------------------------------------------------------------------------
// NS scaling

EstimateReport ns_identity_scaling(const Connection& flat, const Cochain& v, std::vector<double> t_list,
                                   const ScalingOptions& opt) {
  const MetricWeights& w = flat.weights();
  if (norm(curvature(flat), w) > 1e-10) throw Error(ErrorKind::Precondition, "ns_identity_scaling needs a flat start");
  std::sort(t_list.begin(), t_list.end(), std::greater<>());
  EstimateReport rep;
  rep.name = "ns_identity";
  double cmax = 0.0, cmin = std::numeric_limits<double>::infinity();
  bool first = true;
  for (double t : t_list) {
    if (t < 0.0) throw Error(ErrorKind::Precondition, "t must be non-negative");
    const Connection c = flat.with_deviation(flat.a() + v * t);
    const double F = norm(curvature(c), w);
    NSResult r;
    try {
      r = ns_newton(c, opt.ns);
    } catch (const Error& e) {
      if (!first) throw;
      std::ostringstream os;
      os << "dropped t = " << t << ": " << e.what();
      rep.notes.push_back(os.str());
      first = false;
      continue;
    }
    first = false;
    const double dist = norm(r.flat.a() - c.a(), w);
    if (t == 0.0) {
      rep.constants["dist_at_zero"] = dist;
      continue;
    }
    rep.points.emplace_back(F, dist);
    if (F > 0.0) {
      cmax = std::max(cmax, dist / F);
      cmin = std::min(cmin, dist / F);
    }
  }
  if (rep.points.size() < 5) throw Error(ErrorKind::Precondition, "ns_identity_scaling needs at least 5 positive t");
  double tmax = 0.0, tmin = std::numeric_limits<double>::infinity();
  for (double t : t_list)
    if (t > 0.0) {
      tmax = std::max(tmax, t);
      tmin = std::min(tmin, t);
    }
  if (tmax < 100.0 * tmin) throw Error(ErrorKind::Precondition, "t_list must span two decades");
  rep.slopes["dist_vs_curvature"] = loglog_slope(rep.points);
  rep.constants["C"] = cmax;
  rep.constants["C_min"] = cmin;
  rep.bands["slope_min"] = 1.0 - opt.band;
  rep.pass = rep.slopes["dist_vs_curvature"] >= 1.0 - opt.band;
  Fnv fp;
  fp.str("ns_identity");
  hash_connection(fp, flat);
  fp.nums(v.data());
  fp.nums(t_list);
  rep.fingerprint = fp.hex();
  return rep;
}

// ---------------------------------------------------------------------------------------------
// projections

HarmonicBasis harmonic_frame(const Connection& c, int dim) {
  if (dim < 0) throw Error(ErrorKind::Precondition, "frame dimension must be non-negative");
  if (dim == 0) return HarmonicBasis{};
  return harmonic_cluster(c, dim);
}

double projector_distance(const HarmonicBasis& a, const HarmonicBasis& b, const MetricWeights& w) {
  if (a.vectors.size() != b.vectors.size()) throw Error(ErrorKind::Dimension, "projector ranks differ");
  if (a.vectors.empty()) return 0.0;
  const Eigen::MatrixXd Qa = frame_matrix(a), Qb = frame_matrix(b);
  const Eigen::VectorXd m = cell_metric(a.vectors[0], w);
  const Eigen::MatrixXd G = Qa.transpose() * m.asDiagonal() * Qb;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

EstimateReport proj_lipschitz(const Connection& alpha, const Connection& alpha_prime, const std::vector<Cochain>& probes,
                              int dim) {
  const MetricWeights& w = alpha.weights();
  const HarmonicBasis A = harmonic_frame(alpha, dim), B = harmonic_frame(alpha_prime, dim);
  EstimateReport rep;
  rep.name = "proj_lipschitz";
  double sup = 0.0;
  for (const Cochain& eta : probes) {
    const double n = norm(eta, w);
    if (!(n > 0.0)) continue;
    sup = std::max(sup, norm(harmonic_project(A, eta, w) - harmonic_project(B, eta, w), w) / n);
  }
  const double op = projector_distance(A, B, w);
  const double d = norm(alpha.a() - alpha_prime.a(), w);
  rep.constants["probe_sup"] = sup;
  rep.constants["op_norm"] = op;
  rep.constants["distance"] = d;
  rep.constants["C"] = d > 0.0 ? op / d : 0.0;
  rep.constants["C_probe"] = d > 0.0 ? sup / d : 0.0;
  rep.pass = sup <= op + 1e-12;
  Fnv fp;
  fp.str("proj_lipschitz");
  hash_connection(fp, alpha);
  hash_connection(fp, alpha_prime);
  for (const Cochain& p : probes) fp.nums(p.data());
  rep.fingerprint = fp.hex();
  return rep;
}

EstimateReport proj_lipschitz_family(const Connection& alpha, const Cochain& wdir, const std::vector<double>& s_list,
                                     int dim, double min_slope) {
  const MetricWeights& w = alpha.weights();
  const HarmonicBasis A = harmonic_frame(alpha, dim);
  EstimateReport rep;
  rep.name = "proj_lipschitz";
  double cmax = 0.0, cmin = std::numeric_limits<double>::infinity();
  for (double s : s_list) {
    const double x = norm(wdir * s, w);
    double y = 0.0;
    for (double sg : {1.0, -1.0})
      y = std::max(y, projector_distance(A, harmonic_frame(alpha.with_deviation(alpha.a() + wdir * (sg * s)), dim), w));
    rep.points.emplace_back(x, y);
    if (x > 0.0 && y > 0.0) {
      cmax = std::max(cmax, y / x);
      cmin = std::min(cmin, y / x);
    }
  }
  if (rep.points.size() < 5) throw Error(ErrorKind::Precondition, "projection family needs at least 5 points");
  rep.slopes["op_norm_vs_distance"] = loglog_slope(rep.points);
  rep.constants["C"] = cmax;
  rep.constants["C_min"] = cmin;
  rep.bands["slope_min"] = min_slope;
  rep.pass = rep.slopes["op_norm_vs_distance"] >= min_slope;
  Fnv fp;
  fp.str("proj_lipschitz_family");
  hash_connection(fp, alpha);
  fp.nums(wdir.data());
  fp.nums(s_list);
  rep.fingerprint = fp.hex();
  return rep;
}

// ---------------------------------------------------------------------------------------------
// derivatives of Pi o NS

NSFrame ns_frame(const Connection& alpha, int dim, const NSOptions& ns) {
  NSFrame f;
  f.flat = ns_newton(alpha, ns).flat;
  f.basis = harmonic_frame(f.flat, dim);
  return f;
}

std::vector<double> frame_coords(const NSFrame& frame, const Cochain& x) {
  std::vector<double> c;
  for (const Cochain& b : frame.basis.vectors) c.push_back(inner_product(b, x, frame.flat.weights()));
  return c;
}

FrameDerivative frame_derivative(const Connection& alpha, const NSFrame& frame, const Cochain& eta, const FDOptions& opt) {
  auto central = [&](double h) {
    const Connection p = ns_newton(alpha.with_deviation(alpha.a() + eta * h), opt.ns).flat;
    const Connection m = ns_newton(alpha.with_deviation(alpha.a() - eta * h), opt.ns).flat;
    return frame_coords(frame, (p.a() - m.a()) * (0.5 / h));
  };
  const std::vector<double> d1 = central(opt.step), d2 = central(0.5 * opt.step);
  FrameDerivative out;
  out.halving_gap = vec_norm(vec_sub(d1, d2)) / std::max(vec_norm(d2), opt.floor);
  if (out.halving_gap > opt.agreement) {
    std::ostringstream os;
    os << "finite-difference step ambiguity: halving changes the derivative by " << out.halving_gap;
    throw Error(ErrorKind::Precondition, os.str());
  }
  out.coords.resize(d2.size());
  for (std::size_t i = 0; i < d2.size(); ++i) out.coords[i] = (4.0 * d2[i] - d1[i]) / 3.0;
  out.norm = vec_norm(out.coords);
  return out;
}

EstimateReport linearization_defect(const Connection& alpha, int dim, const std::vector<Cochain>& probes_in,
                                    const FDOptions& opt) {
  if (dim < 1) throw Error(ErrorKind::Precondition, "linearization defect needs a nonzero frame");
  const MetricWeights& w = alpha.weights();
  const HarmonicBasis H = harmonic_frame(alpha, dim);
  const NSFrame frame = ns_frame(alpha, dim, opt.ns);
  std::vector<Cochain> probes = probes_in;
  if (probes.empty()) {
    probes = H.vectors;
    Cochain s = H.vectors[0].zeros_like();
    for (const Cochain& v : H.vectors) s += v;
    probes.push_back(s);
  }
  EstimateReport rep;
  rep.name = "linearization_defect";
  double f = 0.0, gap = 0.0;
  for (const Cochain& p : probes) {
    const Cochain eta = normalized(p, w);
    const Cochain pe = harmonic_project(H, eta, w);
    const double n = norm(pe, w);
    if (!(n > opt.floor)) continue;
    const FrameDerivative D = frame_derivative(alpha, frame, eta, opt);
    f = std::max(f, vec_norm(vec_sub(frame_coords(frame, pe), D.coords)) / n);
    gap = std::max(gap, D.halving_gap);
  }
  rep.constants["f"] = f;
  rep.constants["curvature"] = norm(curvature(alpha), w);
  rep.constants["halving_gap"] = gap;
  rep.bands["agreement"] = opt.agreement;
  rep.pass = true;
  Fnv fp;
  fp.str("linearization_defect");
  hash_connection(fp, alpha);
  fp.num(dim);
  fp.num(opt.step);
  rep.fingerprint = fp.hex();
  return rep;
}

EstimateReport linearization_family(const std::vector<Connection>& family, int dim, const FDOptions& opt, double ratio) {
  if (family.size() < 2) throw Error(ErrorKind::Precondition, "linearization family needs at least two members");
  EstimateReport rep;
  rep.name = "linearization_defect";
  Fnv fp;
  fp.str("linearization_family");
  std::vector<double> fs;
  for (const Connection& c : family) {
    const EstimateReport r = linearization_defect(c, dim, {}, opt);
    rep.points.emplace_back(r.constants.at("curvature"), r.constants.at("f"));
    fs.push_back(r.constants.at("f"));
    hash_connection(fp, c);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < fs.size(); ++i) decreasing = decreasing && fs[i] < fs[i - 1];
  rep.constants["f_start"] = fs.front();
  rep.constants["f_end"] = fs.back();
  rep.constants["decreasing"] = decreasing ? 1.0 : 0.0;
  rep.bands["end_ratio"] = ratio;
  bool positive = rep.points.size() >= 5;
  for (const auto& [x, y] : rep.points) positive = positive && x > 0.0 && y > 0.0;
  if (positive) rep.slopes["f_vs_curvature"] = loglog_slope(rep.points);
  rep.pass = decreasing && fs.back() <= ratio * fs.front();
  rep.fingerprint = fp.hex();
  return rep;
}

EstimateReport complex_linearity_check(const Connection& alpha, int dim, const std::vector<Cochain>& probes,
                                       const FDOptions& opt) {
  if (alpha.grid().dim() != 2) throw Error(ErrorKind::Precondition, "complex linearity needs a 2D grid");
  if (dim < 1) throw Error(ErrorKind::Precondition, "complex linearity needs a nonzero frame");
  const MetricWeights& w = alpha.weights();
  const NSFrame frame = ns_frame(alpha, dim, opt.ns);
  // matrix of * in the frame
  const int m = dim;
  std::vector<std::vector<double>> J(m, std::vector<double>(m));
  for (int j = 0; j < m; ++j) {
    const std::vector<double> c = frame_coords(frame, hodge_star(frame.basis.vectors[j], frame.flat.weights()));
    for (int i = 0; i < m; ++i) J[i][j] = c[i];
  }
  double jdef = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += J[k][i] * J[k][j];
      jdef = std::max(jdef, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  EstimateReport rep;
  rep.name = "complex_linearity";
  double worst = 0.0, worst_rel = 0.0, dmax = 0.0, gap = 0.0;
  bool ok = true;
  for (const Cochain& p : probes) {
    const Cochain eta = normalized(p, w);
    const FrameDerivative D = frame_derivative(alpha, frame, eta, opt);
    const FrameDerivative Ds = frame_derivative(alpha, frame, hodge_star(eta, w), opt);
    std::vector<double> jd(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) jd[i] += J[i][k] * D.coords[k];
    const double def = vec_norm(vec_sub(Ds.coords, jd));
    const double scale = std::max(D.norm, Ds.norm);
    worst = std::max(worst, def);
    if (scale > opt.floor) worst_rel = std::max(worst_rel, def / scale);
    dmax = std::max(dmax, scale);
    gap = std::max({gap, D.halving_gap, Ds.halving_gap});
    ok = ok && def <= opt.agreement * scale + opt.floor;
  }
  rep.constants["defect"] = worst;
  rep.constants["relative_defect"] = worst_rel;
  rep.constants["max_derivative"] = dmax;
  rep.constants["frame_star_defect"] = jdef;
  rep.constants["halving_gap"] = gap;
  rep.bands["agreement"] = opt.agreement;
  rep.bands["floor"] = opt.floor;
  rep.pass = ok;
  Fnv fp;
  fp.str("complex_linearity");
  hash_connection(fp, alpha);
  for (const Cochain& p : probes) fp.nums(p.data());
  rep.fingerprint = fp.hex();
  return rep;
}

EstimateReport elliptic_constant_probe(const std::vector<Connection>& family, int dim, const std::vector<Cochain>& probes,
                                       double band) {
  if (family.empty()) throw Error(ErrorKind::Precondition, "elliptic probe needs a family");
  EstimateReport rep;
  rep.name = "elliptic_constant";
  Fnv fp;
  fp.str("elliptic_constant");
  double c1hi = 0.0, c1lo = std::numeric_limits<double>::infinity();
  double c0hi = 0.0, c0lo = std::numeric_limits<double>::infinity();
  double probe_max = 0.0;
  bool reducible = false;
  for (const Connection& c : family) {
    const MetricWeights& w = c.weights();
    const CovariantComplex ops(c);
    const SpectralCluster cl = lowest_eigenpairs(ops.laplacian_operator(1), dim);
    const double C1 = 1.0 / std::sqrt(cl.next);
    HarmonicBasis H;
    for (const Eigen::VectorXd& v : cl.vectors) {
      Cochain x = ops.zeros(1);
      std::copy(v.data(), v.data() + v.size(), x.data().begin());
      H.vectors.push_back(x);
    }
    for (const Cochain& eta : probes) {
      const double den = norm(ops.d(eta), w) + norm(ops.dstar(eta), w);
      const double num = norm(eta - harmonic_project(H, eta, w), w);
      // probes inside the frame leave only round-off on both sides
      if (num <= 1e-10 * norm(eta, w)) continue;
      if (den > 0.0) probe_max = std::max(probe_max, num / den);
      if (num > C1 * den * (1.0 + 1e-9)) rep.notes.push_back("probe exceeds the spectral constant");
    }
    c1hi = std::max(c1hi, C1);
    c1lo = std::min(c1lo, C1);
    const LinearOperator L0 = ops.laplacian_operator(0);
    const double lmin = smallest_eigenvalues(L0, 1).front();
    const double lmax = largest_eigenvalue(L0);
    if (lmin > 1e-10 * lmax) {
      const double C0 = 1.0 / std::sqrt(lmin);
      c0hi = std::max(c0hi, C0);
      c0lo = std::min(c0lo, C0);
    } else {
      reducible = true;
    }
    rep.points.emplace_back(norm(curvature(c), w), C1);
    hash_connection(fp, c);
  }
  rep.constants["C1"] = c1hi;
  rep.constants["C1_min"] = c1lo;
  rep.constants["C1_probe"] = probe_max;
  rep.bands["stability"] = band;
  bool ok = c1hi <= band * c1lo && rep.notes.empty();
  if (reducible) {
    rep.notes.push_back("scalar Laplacian has a kernel: C0 not defined");
  } else {
    rep.constants["C0"] = c0hi;
    rep.constants["C0_min"] = c0lo;
    ok = ok && c0hi <= band * c0lo;
  }
  rep.pass = ok;
  rep.fingerprint = fp.hex();
  return rep;
}

// ---------------------------------------------------------------------------------------------
// bump

BumpProfile make_bump(double core, double support, int samples, double half_width, double level) {
  if (samples < 3) throw Error(ErrorKind::Precondition, "bump needs at least 3 samples");
  if (!(level > 0.0) || !(level < 1.0)) throw Error(ErrorKind::Precondition, "bump level must lie in (0, 1)");
  const double W = half_width > 0.0 ? half_width : support;
  BumpProfile b;
  b.core = core;
  b.support = support;
  b.level = level;
  b.h.lo = -W;
  b.h.hi = W;
  b.h.v.assign(samples, 1.0);
  b.dh.assign(samples, 0.0);
  b.d2h.assign(samples, 0.0);
  if (core >= W) return b;
  if (!(core > 0.0) || !(support > core)) throw Error(ErrorKind::Precondition, "bump needs 0 < core < support");
  const double delta = support - core;
  if (delta < 4.0 * b.h.step()) throw Error(ErrorKind::Precondition, "bump ramp is unresolved by the samples");
  auto p = [](double u) { return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u); };
  auto p1 = [](double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); };
  auto p2 = [](double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); };
  auto ratio = [&](double u) { return (p1(u) / delta + std::abs(p2(u)) / (delta * delta)) / p(u); };
  for (int i = 0; i < samples; ++i) {
    const double s = b.h.x(i), a = std::abs(s);
    if (a <= core) continue;
    if (a >= support) {
      b.h.v[i] = 0.0;
      continue;
    }
    const double u = (support - a) / delta;
    b.h.v[i] = p(u);
    b.dh[i] = (s < 0.0 ? 30.0 : -30.0) * u * u * (1.0 - u) * (1.0 - u) / delta;
    b.d2h[i] = p2(u) / (delta * delta);
    if (b.h.v[i] >= level) b.C0_samples = std::max(b.C0_samples, ratio(u));
  }
  // p is increasing on [0, 1]; u_l solves p(u_l) = level
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (p(mid) < level ? lo : hi) = mid;
  }
  const double ul = hi;
  const int dense = 20000;
  for (int k = 0; k <= dense; ++k) b.C0 = std::max(b.C0, ratio(ul + (1.0 - ul) * k / dense));
  b.C0 = std::max(b.C0, b.C0_samples);
  return b;
}

}  // namespace gaugelab
