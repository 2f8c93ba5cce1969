#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gaugelab/adiabatic.hpp"
#include "gaugelab/cli.hpp"
#include "gaugelab/estimates.hpp"
#include "gaugelab/io.hpp"

namespace gaugelab::cli {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

// rethrow setup failures (bad grid, bad twist) as config errors
template <class F>
auto validated(const std::string& what, F f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    config_error(what + ": " + e.what());
  }
}

GridSpec read_grid(Config& c, const std::vector<int>& dims, const std::vector<std::string>& blocks) {
  GridSpec s;
  s.dims = c.ints("grid.dims", dims);
  s.spacing = c.nums("grid.spacing", std::vector<double>(s.dims.size(), 1.0));
  const auto b = c.words("grid.blocks", s.dims.size() == blocks.size() ? blocks : std::vector<std::string>{});
  if (b.size() != s.dims.size()) config_error("grid.blocks needs one tag (s, sigma, i) per axis");
  for (const std::string& t : b) {
    std::string l = t;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (l == "s") s.blocks.push_back(AxisBlock::S);
    else if (l == "sigma") s.blocks.push_back(AxisBlock::Sigma);
    else if (l == "i") s.blocks.push_back(AxisBlock::I);
    else config_error("grid.blocks: unknown axis tag '" + t + "'");
  }
  validated("grid", [&] {
    s.validate();
    return 0;
  });
  return s;
}

// twist.fluxes = none | a:b:value, ...
TwistSpec read_twist(Config& c, const std::vector<std::string>& def) {
  TwistSpec t;
  t.n = static_cast<int>(c.integer("twist.n", 2));
  if (t.n < 2 || t.n > kMaxRank) config_error("twist.n must lie in 2.." + std::to_string(kMaxRank));
  for (const std::string& f : c.words("twist.fluxes", def)) {
    if (f == "none") continue;
    Flux x;
    char c1 = 0, c2 = 0;
    std::istringstream ss(f);
    if (!(ss >> x.axis_a >> c1 >> x.axis_b >> c2 >> x.value) || c1 != ':' || c2 != ':' || !ss.eof())
      config_error("twist.fluxes: '" + f + "' is not axis_a:axis_b:value");
    t.fluxes.push_back(x);
  }
  return t;
}

struct Start {
  GridPtr grid;
  ReferencePtr ref;
  MetricWeights w;
  double amplitude = 0.0;
  int modes = 1;
  std::string kind;
  std::uint64_t seed = 7;

  Connection build() const {
    const Connection flat = flat_connection(ref, w);
    if (amplitude == 0.0) return flat;
    const int n = ref->n;
    return flat.with_deviation(kind == "smooth" ? smooth_random_cochain(grid, 1, n, modes, amplitude, seed)
                                                : gaussian_cochain(grid, 1, n, amplitude, seed));
  }
};

std::uint64_t read_seed(Config& c) {
  const long s = c.integer("run.seed", 7);
  if (s < 0) config_error("run.seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

Start read_start(Config& c, const GridSpec& gs, const TwistSpec& tw, double amplitude, const std::string& kind) {
  Start s;
  s.seed = read_seed(c);
  s.amplitude = c.num("start.amplitude", amplitude);
  s.kind = c.choice("start.kind", kind, {"smooth", "gaussian"});
  s.modes = static_cast<int>(c.integer("start.modes", 1));
  if (s.modes < 1) config_error("start.modes must be >= 1");
  const double eps = c.num("metric.epsilon", 1.0);
  InnerProductSpec ip{c.num("metric.kappa", 1.0)};
  if (!(eps > 0.0) || !(ip.kappa > 0.0)) config_error("metric.epsilon and metric.kappa must be positive");
  s.grid = Grid::make(gs);
  s.ref = validated("twist", [&] { return build_twisted_reference(tw, s.grid); });
  s.w = hodge_weights(*s.grid, eps, ip);
  return s;
}

double positive(Config& c, const std::string& key, double def) {
  const double v = c.num(key, def);
  if (!(v > 0.0)) config_error(key + " must be positive");
  return v;
}

long at_least(Config& c, const std::string& key, long def, long lo) {
  const long v = c.integer(key, def);
  if (v < lo) config_error(key + " must be >= " + std::to_string(lo));
  return v;
}

bool decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

json report_json(const EstimateReport& r) {
  json pts = json::array();
  for (const auto& [x, y] : r.points) pts.push_back({x, y});
  return {{"name", r.name},   {"constants", r.constants}, {"slopes", r.slopes}, {"bands", r.bands},
          {"notes", r.notes}, {"points", pts},            {"pass", r.pass},     {"report_fingerprint", r.fingerprint}};
}

void points_out(Artifacts& art, const std::string& stem, const EstimateReport& r, const std::string& xl, const std::string& yl,
                bool log) {
  if (r.points.empty()) return;
  std::vector<std::vector<double>> rows;
  Series s{r.name, {}, {}};
  for (const auto& [x, y] : r.points) {
    rows.push_back({x, y});
    s.x.push_back(x);
    s.y.push_back(y);
  }
  art.csv(stem + ".csv", {xl, yl}, rows);
  art.svg(stem + ".svg", PlotSpec{r.name, xl, yl, {s}, log, log});
}

// ---- flow

Plan plan_flow(Config& c) {
  const GridSpec gs = read_grid(c, {6, 6}, {"sigma", "sigma"});
  const TwistSpec tw = read_twist(c, {"0:1:1"});
  const Start st = read_start(c, gs, tw, 0.3, "smooth");
  const double tau = positive(c, "flow.tau", 1.0);
  FlowOptions fo;
  fo.tol = positive(c, "flow.tol", fo.tol);
  fo.dt0 = positive(c, "flow.dt0", fo.dt0);
  fo.flat_capture = c.num("flow.capture", 0.0);
  fo.max_steps = at_least(c, "flow.max_steps", fo.max_steps, 1);
  const bool doubling = c.flag("flow.doubling", false);
  const bool checkpoint = c.flag("flow.checkpoint", false);
  if (doubling) validated("flow.doubling", [&] { return interval_axis(*st.grid); });
  return [=](Artifacts& art) {
    Connection c0 = st.build();
    if (doubling) {
      // the boundary normal layer must vanish
      Cochain a = c0.a();
      const Grid& g = *st.grid;
      const int p = interval_axis(g);
      std::vector<int> x(g.dim());
      for (long v = 0; v < g.vertices(); ++v) {
        g.coords(v, x.data());
        if (x[p] == g.length(p) - 1) std::fill_n(a.at(a.cell(p, v)), a.gdim(), 0.0);
      }
      c0 = c0.with_deviation(std::move(a));
    }
    const FlowState s = doubling ? double_and_flow(c0, tau, fo) : ym_flow(c0, tau, fo);
    // history energies live on the flowed manifold (the doubled one when doubling)
    std::vector<std::vector<double>> rows;
    double max_increase = 0.0;
    for (std::size_t k = 0; k < s.energy_history.size(); ++k) {
      const auto& [t, e] = s.energy_history[k];
      rows.push_back({static_cast<double>(k), t, e});
      if (k > 0) max_increase = std::max(max_increase, e - rows[k - 1][2]);
    }
    const double e0 = rows.empty() ? ym_energy(c0) : rows.front()[2];
    art.csv("energy.csv", {"step", "tau", "energy"}, rows);
    Series se{"energy", {}, {}};
    for (const auto& r : rows) {
      se.x.push_back(r[1]);
      se.y.push_back(r[2]);
    }
    art.svg("energy.svg", PlotSpec{"Yang-Mills energy along the flow", "tau", "energy", {se}, false, e0 > 0.0});
    json res = {{"energy_start", e0},
                {"energy_end", rows.empty() ? e0 : rows.back()[2]},
                {"tau", s.tau},
                {"accepted", s.accepted},
                {"rejected", s.rejected},
                {"monotone", max_increase <= 0.0},
                {"max_energy_increase", max_increase},
                {"flat_limit", s.flat_limit},
                {"final_curvature", norm(curvature(s.connection), s.connection.weights())}};
    if (doubling) {
      res["sigma_asymmetry"] = s.sigma_asymmetry;
      res["boundary_normal"] = s.boundary_normal;
    }
    if (checkpoint) {
      write_checkpoint(art.path("final.glcx"), art.path("final.manifest.json"), s.connection,
                       CheckpointMeta{st.w.epsilon, st.seed, st.w.ip, art.fingerprint()});
      art.note("final.glcx");
      art.note("final.manifest.json");
    }
    return res;
  };
}

// ---- ns

Plan plan_ns(Config& c) {
  const GridSpec gs = read_grid(c, {6, 6}, {"sigma", "sigma"});
  const TwistSpec tw = read_twist(c, {"0:1:1"});
  const Start st = read_start(c, gs, tw, 0.05, "gaussian");
  NSOptions ns;
  ns.tol = positive(c, "ns.tol", ns.tol);
  ns.max_iter = static_cast<int>(at_least(c, "ns.max_iter", ns.max_iter, 1));
  ns.eps0 = positive(c, "ns.eps0", ns.eps0);
  ns.flow_steps = static_cast<int>(at_least(c, "ns.flow_steps", ns.flow_steps, 1));
  const bool heat = c.flag("ns.compare_heat", false);
  const double heat_tau = positive(c, "ns.heat_tau", 1.0);
  const bool gauge = c.flag("ns.gauge_check", false);
  return [=](Artifacts& art) {
    const Connection c0 = st.build();
    const NSResult r = ns_newton(c0, ns);
    std::vector<std::vector<double>> rows;
    Series se{"L2 curvature", {}, {}};
    for (std::size_t k = 0; k < r.residuals.size(); ++k) {
      rows.push_back({static_cast<double>(k), r.residuals[k]});
      se.x.push_back(static_cast<double>(k));
      se.y.push_back(r.residuals[k]);
    }
    art.csv("residuals.csv", {"iteration", "residual"}, rows);
    art.svg("residuals.svg", PlotSpec{"Newton residuals", "iteration", "L2 curvature", {se}, false, true});
    json res = {{"iterations", r.iterations},
                {"residual", r.curvature_residual},
                {"terminal_slope", r.terminal_slope},
                {"xi_max", r.Xi.max_abs()},
                {"distance", norm(r.flat.a() - c0.a(), c0.weights())}};
    if (heat) {
      FlowOptions fo;
      fo.flat_capture = 1.0;
      fo.curvature_tol = 1e-11;
      const FlowState s = ym_flow(c0, heat_tau, fo);
      res["heat_flat_limit"] = s.flat_limit;
      res["orbit_discrepancy"] = orbit_compare(s.connection, r.flat).max_discrepancy;
    }
    if (gauge) {
      const GaugeField u = gauge_exp(gaussian_cochain(st.grid, 0, st.ref->n, 1.0, st.seed + 1));
      const NSResult ru = ns_newton(gauge_transform(c0, u), ns);
      res["equivariance_defect"] = (ru.Xi - gauge_act(u, r.Xi)).max_abs();
    }
    return res;
  };
}

// ---- adiabatic

Plan plan_adiabatic(Config& c) {
  ScalingConfig sc;
  sc.grid = read_grid(c, {4, 4, 6, 6}, {"s", "s", "sigma", "sigma"});
  sc.twist = read_twist(c, {"2:3:1"});
  sc.seed = read_seed(c);
  sc.amplitude = c.num("start.amplitude", sc.amplitude);
  sc.modes = static_cast<int>(at_least(c, "start.modes", sc.modes, 1));
  sc.slicewise_flat = c.flag("adiabatic.slicewise_flat", sc.slicewise_flat);
  sc.epsilons = c.nums("adiabatic.eps", sc.epsilons);
  sc.budget = positive(c, "adiabatic.budget", sc.budget);
  sc.residual_fraction = positive(c, "adiabatic.residual_fraction", sc.residual_fraction);
  sc.segments = static_cast<int>(at_least(c, "adiabatic.segments", sc.segments, 1));
  sc.flow.tol = positive(c, "adiabatic.flow_tol", sc.flow.tol);
  const double band_limit = positive(c, "adiabatic.band_limit", 4.0);
  if (sc.epsilons.empty() || !decreasing(sc.epsilons) || !(sc.epsilons.back() > 0.0))
    config_error("adiabatic.eps must be positive and strictly decreasing");
  if (!(sc.residual_fraction < 1.0)) config_error("adiabatic.residual_fraction must lie in (0, 1)");
  validated("twist", [&] { return build_twisted_reference(sc.twist, Grid::make(sc.grid)); });
  return [=](Artifacts& art) {
    const ScalingTable t = curvature_scaling_probe(sc);
    std::vector<std::vector<double>> rows;
    Series se{"rho", {}, {}};
    bool reached = true;
    for (const ScalingRow& r : t.rows) {
      rows.push_back({r.epsilon, r.rho, r.sup_slice_curvature, r.sup_gamma, r.tau, r.reached ? 1.0 : 0.0,
                      r.floor_triggered ? 1.0 : 0.0, r.identity_ratio_start, r.identity_ratio_end, r.energy_start, r.energy_end});
      se.x.push_back(r.epsilon);
      se.y.push_back(r.rho);
      reached = reached && r.reached;
    }
    art.csv("rho.csv",
            {"epsilon", "rho", "sup_slice_curvature", "sup_gamma", "tau", "reached", "floor_triggered", "identity_ratio_start",
             "identity_ratio_end", "energy_start", "energy_end"},
            rows);
    art.svg("rho.svg", PlotSpec{"slice curvature ratio", "epsilon", "rho", {se}, true, true});
    return json{{"rows", t.rows.size()},
                {"band", t.band},
                {"band_limit", band_limit},
                {"band_ok", t.band <= band_limit},
                {"all_reached", reached}};
  };
}

// ---- estimates

Plan plan_estimates(Config& c) {
  const std::string suite =
      c.choice("estimates.suite", "gslemma", {"gslemma", "ns_identity", "proj_lipschitz", "elliptic", "linearization", "complex", "bump"});
  const std::uint64_t seed = read_seed(c);
  if (suite == "gslemma") {
    const long trials = at_least(c, "estimates.trials", 1000, 1);
    const long samples = at_least(c, "estimates.samples", 401, 11);
    GsOptions go;
    go.tol = positive(c, "estimates.tol", go.tol);
    return [=](Artifacts& art) {
      const EstimateReport r = gslemma_suite(seed, static_cast<int>(trials), static_cast<int>(samples), go);
      art.json("report.json", report_json(r));
      return json{{"suite", suite}, {"pass", r.pass}, {"violations", r.constants.at("violations")}, {"trials", trials}};
    };
  }
  if (suite == "bump") {
    const double core = positive(c, "estimates.core", 1.0);
    const double support = positive(c, "estimates.support", 2.0);
    const long samples = at_least(c, "estimates.samples", 401, 3);
    const double half = c.num("estimates.half_width", 2.5);
    const double level = positive(c, "estimates.level", 1e-2);
    return [=](Artifacts& art) {
      const BumpProfile b = make_bump(core, support, static_cast<int>(samples), half, level);
      std::vector<std::vector<double>> rows;
      Series sh{"h", {}, {}};
      for (std::size_t i = 0; i < b.h.v.size(); ++i) {
        rows.push_back({b.h.x(i), b.h.v[i], b.dh[i], b.d2h[i]});
        sh.x.push_back(b.h.x(i));
        sh.y.push_back(b.h.v[i]);
      }
      art.csv("bump.csv", {"s", "h", "dh", "d2h"}, rows);
      art.svg("bump.svg", PlotSpec{"cutoff profile", "s", "h", {sh}, false, false});
      return json{{"suite", suite}, {"C0", b.C0}, {"C0_samples", b.C0_samples}, {"level", b.level}, {"pass", std::isfinite(b.C0)}};
    };
  }
  const GridSpec gs = read_grid(c, {6, 6}, {"sigma", "sigma"});
  if (gs.dims.size() != 2) config_error("estimates suites run on 2D grids");
  if (suite == "ns_identity") {
    const long dirs = at_least(c, "estimates.directions", 5, 1);
    const std::vector<double> ts = c.nums("estimates.t", {0.03, 0.01, 0.003, 0.001, 0.0003, 0.0});
    ScalingOptions so;
    so.band = positive(c, "estimates.band", so.band);
    const double c_band = positive(c, "estimates.c_band", 2.0);
    return [=](Artifacts& art) {
      GridPtr g = Grid::make(gs);
      const Connection flat = twisted_flat(g);
      json reps = json::array();
      std::vector<std::vector<double>> rows;
      PlotSpec p{"NS distance against curvature", "L2 curvature", "NS distance", {}, true, true};
      double cmin = INFINITY, cmax = 0.0;
      bool pass = true;
      for (long k = 0; k < dirs; ++k) {
        const EstimateReport r = ns_identity_scaling(flat, gaussian_cochain(g, 1, 2, 1.0, seed + k), ts, so);
        reps.push_back(report_json(r));
        Series s{"direction " + std::to_string(k), {}, {}};
        for (const auto& [x, y] : r.points) {
          rows.push_back({static_cast<double>(k), x, y});
          s.x.push_back(x);
          s.y.push_back(y);
        }
        p.series.push_back(s);
        cmin = std::min(cmin, r.constants.at("C"));
        cmax = std::max(cmax, r.constants.at("C"));
        pass = pass && r.pass;
      }
      art.json("report.json", {{"reports", reps}});
      art.csv("points.csv", {"direction", "curvature", "distance"}, rows);
      art.svg("points.svg", p);
      const bool stable = cmax <= c_band * cmin;
      return json{{"suite", suite}, {"C_min", cmin}, {"C_max", cmax}, {"C_stable", stable}, {"pass", pass && stable}};
    };
  }
  const std::vector<double> theta = c.nums("estimates.theta", {0.7 / 3, 1.1 / 3});
  if (theta.size() != 2) config_error("estimates.theta needs two angles");
  if (suite == "proj_lipschitz") {
    const std::vector<double> s = c.nums("estimates.s", {1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
    return [=](Artifacts& art) {
      GridPtr g = Grid::make(gs);
      const EstimateReport r = proj_lipschitz_family(diagonal_flat(g, theta[0], theta[1]), gaussian_cochain(g, 1, 2, 1.0, seed), s, 2);
      art.json("report.json", report_json(r));
      points_out(art, "points", r, "distance", "projector distance", true);
      return json{{"suite", suite}, {"pass", r.pass}, {"slope", r.slopes.at("op_norm_vs_distance")}};
    };
  }
  if (suite == "elliptic") {
    const std::vector<double> ts = c.nums("estimates.t", {0.1, 0.05, 0.02, 0.01, 0.005});
    const long probes = at_least(c, "estimates.probes", 10, 0);
    const double band = positive(c, "estimates.band", 2.0);
    return [=](Artifacts& art) {
      GridPtr g = Grid::make(gs);
      const Connection flat = twisted_flat(g);
      const Cochain w = gaussian_cochain(g, 1, 2, 1.0, seed);
      std::vector<Connection> fam;
      for (double t : ts) fam.push_back(flat.with_deviation(w * t));
      std::vector<Cochain> pr;
      for (long k = 0; k < probes; ++k) pr.push_back(gaussian_cochain(g, 1, 2, 1.0, seed + 1 + k));
      const EstimateReport r = elliptic_constant_probe(fam, 0, pr, band);
      art.json("report.json", report_json(r));
      points_out(art, "points", r, "curvature", "C1", false);
      return json{{"suite", suite}, {"pass", r.pass}, {"C1", r.constants.at("C1")}};
    };
  }
  FDOptions fd;
  fd.step = positive(c, "estimates.step", fd.step);
  fd.agreement = positive(c, "estimates.agreement", fd.agreement);
  if (suite == "linearization") {
    const std::vector<double> ts = c.nums("estimates.t", {0.004, 0.002, 0.001, 0.0004});
    const double ratio = positive(c, "estimates.ratio", 0.1);
    if (ts.size() < 2 || !decreasing(ts)) config_error("estimates.t must be strictly decreasing with at least two entries");
    return [=](Artifacts& art) {
      GridPtr g = Grid::make(gs);
      const Connection a = diagonal_flat(g, theta[0], theta[1]);
      const Cochain w = gaussian_cochain(g, 1, 2, 1.0, seed);
      std::vector<Connection> fam;
      for (double t : ts) fam.push_back(a.with_deviation(a.a() + w * t));
      const EstimateReport r = linearization_family(fam, 2, fd, ratio);
      art.json("report.json", report_json(r));
      points_out(art, "points", r, "curvature", "f", true);
      return json{{"suite", suite}, {"pass", r.pass}, {"f_start", r.constants.at("f_start")}, {"f_end", r.constants.at("f_end")}};
    };
  }
  // complex
  const double amp = positive(c, "estimates.amplitude", 0.002);
  const long probes = at_least(c, "estimates.probes", 3, 1);
  return [=](Artifacts& art) {
    GridPtr g = Grid::make(gs);
    const Connection a = diagonal_flat(g, theta[0], theta[1]);
    const CovariantComplex ops(a);
    const EstimateReport kernel = complex_linearity_check(
        a, 2, {ops.d(gaussian_cochain(g, 0, 2, 1.0, seed)), ops.dstar(gaussian_cochain(g, 2, 2, 1.0, seed + 1))}, fd);
    const Connection cc = a.with_deviation(a.a() + gaussian_cochain(g, 1, 2, amp, seed + 2));
    std::vector<Cochain> pr;
    for (long k = 0; k < probes; ++k) pr.push_back(gaussian_cochain(g, 1, 2, 1.0, seed + 3 + k));
    const EstimateReport r = complex_linearity_check(cc, 2, pr, fd);
    art.json("report.json", {{"kernel", report_json(kernel)}, {"random", report_json(r)}});
    return json{{"suite", suite},
                {"pass", r.pass && kernel.pass},
                {"kernel_max_derivative", kernel.constants.at("max_derivative")},
                {"relative_defect", r.constants.at("relative_defect")}};
  };
}

// ---- charge

Plan plan_charge(Config& c) {
  const GridSpec gs = read_grid(c, {4, 4, 4, 4}, {"s", "s", "sigma", "sigma"});
  const TwistSpec tw = read_twist(c, {"2:3:1"});
  const Start st = read_start(c, gs, tw, 0.3, "smooth");
  const long axis = c.integer("charge.axis", 0);
  if (axis < 0 || axis >= static_cast<long>(gs.dims.size())) config_error("charge.axis out of range");
  for (const Flux& f : tw.fluxes)
    if (f.axis_a == axis || f.axis_b == axis) config_error("charge.axis must carry no twist");
  return [=](Artifacts& art) {
    const Connection c0 = st.build();
    std::vector<std::vector<double>> rows;
    Series se{"Chern-Simons", {}, {}};
    if (gs.dims.size() == 4) {
      for (int l = 0; l < gs.dims[axis]; ++l) {
        const double cs = chern_simons(hyperslice(c0, static_cast<int>(axis), l));
        rows.push_back({static_cast<double>(l), cs});
        se.x.push_back(l);
        se.y.push_back(cs);
      }
      art.csv("chern_simons.csv", {"layer", "chern_simons"}, rows);
      art.svg("chern_simons.svg", PlotSpec{"Chern-Simons along the cylinder axis", "layer", "CS", {se}, false, false});
    }
    json res = {{"ym_energy", ym_energy(c0)}, {"topological_charge", topological_charge(c0, st.w.ip)}};
    if (gs.dims.size() == 4) {
      res["clover_pairing"] = clover_pairing(c0);
      CSEnergyOptions o;
      o.axis = static_cast<int>(axis);
      o.require_flat_ends = false;
      const CSEnergyReport r = chern_simons_energy_check(c0, o);
      res["inst_energy"] = r.inst_energy;
      res["cs_minus"] = r.cs_minus;
      res["cs_plus"] = r.cs_plus;
      res["pairing_energy"] = r.pairing_energy;
      res["pairing_defect"] = r.pairing_defect;
      res["end_curvature"] = r.end_curvature;
    }
    return res;
  };
}

// ---- report

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read " + path);
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> v;
    std::string cell;
    std::istringstream ss(l);
    while (std::getline(ss, cell, ',')) v.push_back(cell);
    return v;
  };
  if (!std::getline(in, line)) return t;
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    for (const std::string& s : split(line)) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      r.push_back(end != s.c_str() && *end == '\0' ? v : NAN);
    }
    r.resize(t.header.size(), NAN);
    t.rows.push_back(std::move(r));
  }
  return t;
}

Plan plan_report(Config& c) {
  const std::vector<std::string> inputs = c.words("report.inputs", {});
  if (inputs.empty()) config_error("report.inputs lists no run directories");
  const std::string log = c.choice("report.log", "auto", {"auto", "none", "x", "y", "xy"});
  for (const std::string& d : inputs)
    if (!std::filesystem::is_directory(d)) config_error("report input '" + d + "' is not a directory");
  return [=](Artifacts& art) {
    json runs = json::object();
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      namespace fs = std::filesystem;
      const fs::path dir(inputs[k]);
      std::string tag = dir.filename().string();
      if (tag.empty()) tag = dir.parent_path().filename().string();
      tag = std::to_string(k) + "_" + tag;
      json entry = {{"path", inputs[k]}, {"plots", json::array()}};
      if (fs::exists(dir / "summary.json")) {
        std::ifstream in(dir / "summary.json");
        try {
          entry["summary"] = json::parse(in);
        } catch (const json::exception& e) {
          throw Error(ErrorKind::Config, "summary.json in " + inputs[k] + ": " + e.what());
        }
      }
      std::vector<fs::path> csvs;
      for (const auto& f : fs::directory_iterator(dir))
        if (f.path().extension() == ".csv") csvs.push_back(f.path());
      std::sort(csvs.begin(), csvs.end());
      for (const fs::path& f : csvs) {
        const CsvTable t = read_csv(f.string());
        if (t.header.size() < 2) continue;
        PlotSpec p{f.stem().string(), t.header[0], "", {}, false, false};
        bool xpos = true, ypos = true;
        double ylo = INFINITY, yhi = 0.0, xlo = INFINITY, xhi = 0.0;
        for (std::size_t col = 1; col < t.header.size(); ++col) {
          if (t.header[col] == "fingerprint") continue;
          Series s{t.header[col], {}, {}};
          for (const auto& r : t.rows) {
            if (!std::isfinite(r[0]) || !std::isfinite(r[col])) continue;
            s.x.push_back(r[0]);
            s.y.push_back(r[col]);
            xpos = xpos && r[0] > 0;
            ypos = ypos && r[col] > 0;
            xlo = std::min(xlo, std::abs(r[0]));
            xhi = std::max(xhi, std::abs(r[0]));
            ylo = std::min(ylo, std::abs(r[col]));
            yhi = std::max(yhi, std::abs(r[col]));
          }
          if (!s.x.empty()) p.series.push_back(std::move(s));
        }
        if (p.series.empty()) continue;
        if (log == "auto") {
          p.logx = xpos && xhi > 100.0 * xlo;
          p.logy = ypos && yhi > 100.0 * ylo;
        } else {
          p.logx = log == "x" || log == "xy";
          p.logy = log == "y" || log == "xy";
        }
        const std::string name = tag + "_" + f.stem().string() + ".svg";
        art.svg(name, p);
        entry["plots"].push_back(name);
      }
      runs[tag] = entry;
    }
    const std::size_t plots = art.files().size();
    art.json("report.json", {{"runs", runs}});
    return json{{"inputs", inputs.size()}, {"plots", plots}};
  };
}

}  // namespace

Plan make_plan(const std::string& sub, Config& cfg) {
  if (sub == "flow") return plan_flow(cfg);
  if (sub == "ns") return plan_ns(cfg);
  if (sub == "adiabatic") return plan_adiabatic(cfg);
  if (sub == "estimates") return plan_estimates(cfg);
  if (sub == "charge") return plan_charge(cfg);
  if (sub == "report") return plan_report(cfg);
  config_error("unknown subcommand '" + sub + "'");
}

}  // namespace gaugelab::cli
