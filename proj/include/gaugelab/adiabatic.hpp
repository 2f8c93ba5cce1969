#pragma once

#include <cstdint>
#include <vector>

#include "gaugelab/nsflow.hpp"

namespace gaugelab {

// Inclusive base-vertex ranges per base axis. A cell with base vertex x and axis set K
// gets weight prod over base axes m of [lo <= x_m < hi] if m in K, else trapezoid(x_m).
// An empty window is the whole (periodic) base with unit weights.
struct BaseWindow {
  std::vector<int> lo, hi;
  bool empty() const { return lo.empty(); }
};

// base axes = non-Sigma axes, in grid order
std::vector<int> base_axes(const Grid& g);
double window_weight(const Grid& g, const BaseWindow& win, int degree, int combo, long v);

// Deterministic random deviation built from low Fourier modes (|k_i| <= modes on every axis).
Cochain smooth_random_cochain(GridPtr g, int degree, int n, int modes, double amplitude, std::uint64_t seed);

struct AsdResidual {
  double epsilon = 1.0;
  std::vector<Cochain> res1;  // [x] Sigma 1-cochain: beta_s + *beta_t, integrated over the mixed face
  std::vector<Cochain> res2;  // [x] Sigma 0-cochain: gamma + eps^-2 *F_alpha, integrated over the base face
  double norm1_sq = 0.0;      // eps-weighted
  double norm2_sq = 0.0;
  double energy = 0.0;        // ym_energy in eps-weights
  double pairing = 0.0;       // <F, *F>, oriented (base, Sigma)
  double identity_defect = 0.0;  // |norm1_sq + norm2_sq - 2 energy - pairing|, relative
};

// 4D product grid with two base axes and two Sigma axes
AsdResidual asd_residual(const Connection& c, double epsilon);

struct AdiabaticReport {
  double epsilon = 1.0;
  double tau = 0.0;
  std::vector<double> slice_curvature;  // per base point, sup density of F_alpha(x)
  double sup_slice_curvature = 0.0;
  double sup_gamma = 0.0;               // sup density of the base-plane curvature
  double res1 = 0.0, res2 = 0.0;        // eps-weighted L2 norms
  double identity_ratio = 0.0;          // |*F_alpha + eps^2 gamma| / |F_alpha|, L2 over the grid
  double holomorphic = -1.0;            // max over base of the holomorphic residual; -1 when not computed
  double inst_energy = 0.0;
  double symp_energy = -1.0;            // -1 when not computed
  double charge = 0.0;
};

struct RelaxOptions {
  FlowOptions flow;
  int snapshots = 4;
  bool with_ns = false;
  NSOptions ns;
};

struct RelaxResult {
  FlowState state;
  std::vector<AdiabaticReport> snapshots;  // tau = 0 and then evenly spaced up to the budget
};

AdiabaticReport adiabatic_report(const Connection& c, double epsilon, bool with_ns = false, const NSOptions& ns = {});
RelaxResult relax_epsilon_asd(const Connection& c0, double epsilon, double budget, const RelaxOptions& opt = {});

struct ScalingConfig {
  GridSpec grid;
  TwistSpec twist;
  std::uint64_t seed = 7;
  double amplitude = 0.3;
  int modes = 1;
  bool slicewise_flat = true;     // deviation on base edges only, so every slice starts at the reference
  std::vector<double> epsilons{1.0, 0.5, 0.25};
  double budget = 8.0;            // flow-time cap per epsilon
  double residual_fraction = 0.1;  // stop once the self-dual residual falls to this fraction of its start
  int segments = 80;               // residual checks per budget
  double floor = 1e-12;
  FlowOptions flow;
};

struct ScalingRow {
  double epsilon = 1.0;
  double rho = 0.0;
  double sup_slice_curvature = 0.0;
  double sup_gamma = 0.0;
  bool floor_triggered = false;
  double identity_ratio_start = 0.0;
  double identity_ratio_end = 0.0;
  double energy_start = 0.0;
  double energy_end = 0.0;
  double tau = 0.0;              // flow time at the matched residual level
  bool reached = false;          // false if the budget ran out first
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  double band = 0.0;  // max rho / min rho over rows with rho > 0
};

ScalingTable curvature_scaling_probe(const ScalingConfig& cfg);

struct NSSliceFamily {
  SliceDecomposition slices;
  std::vector<Cochain> flat;        // [x] projected Sigma deviation
  std::vector<Cochain> Xi;          // [x]
  std::vector<double> curvature;    // [x] |F_alpha(x)|
  std::vector<double> distance;     // [x] |NS(alpha) - alpha|
  std::vector<int> iterations;
  Connection slice_flat(long x) const;
};

NSSliceFamily ns_slice_family(const Connection& c, const NSOptions& opt = {});

// per base point: harmonic part of d_s a + *d_t a at the projected slice; 0 off the window interior
std::vector<double> holomorphic_residual(const NSSliceFamily& f, const BaseWindow& win = {});

// 1/2 sum_x (|proj d_s a|^2 + |proj d_t a|^2) h_s h_t over the window
double symp_energy(const NSSliceFamily& f, const BaseWindow& win = {});
// -1/2 int <F ^ F> from the clover density, orientation (base, Sigma)
double chern_weil_energy(const Connection& c, const BaseWindow& win = {});
double inst_energy(const Connection& c, double epsilon, const BaseWindow& win = {});

// 3D connection on the layer of a grid; the axis must carry no twist
Connection hyperslice(const Connection& c, int axis, int layer);

struct CSEnergyReport {
  double inst_energy = 0.0;
  double cs_minus = 0.0, cs_plus = 0.0;
  double pairing_energy = 0.0;   // -1/2 int <F ^ F> over the slab
  double end_curvature = 0.0;    // max of the two end-slice curvature norms
  double energy_defect = 0.0;    // |E - (CS- - CS+)|
  double pairing_defect = 0.0;   // |pairing_energy - (CS- - CS+)|
};

struct CSEnergyOptions {
  int axis = 0;          // the truncated R direction
  int first = 0, last = -1;  // end layers; last = -1 means length - 1
  double end_tol = 1e-8;
  bool require_flat_ends = true;
};

CSEnergyReport chern_simons_energy_check(const Connection& c, const CSEnergyOptions& opt = {});

struct NablaProbe {
  double constant = 0.0;
  double d1 = 0.0, d2 = 0.0, base = 0.0;  // |nabla_s F|_K, |nabla_s^2 F|_K, |F|_window
};

// K = layers [k0, k1] of base axis 0, window = K widened by rho layers
NablaProbe nabla_s_bound_probe(const Connection& c, double epsilon, int k0, int k1, int rho);

}  // namespace gaugelab
