#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gaugelab/nsflow.hpp"

namespace gaugelab {

struct EstimateReport {
  std::string name;
  std::map<std::string, double> constants;  // measured constants and counts
  std::map<std::string, double> slopes;     // log-log regression slopes
  std::map<std::string, double> bands;      // declared pass bands
  std::vector<std::pair<double, double>> points;  // regression points (x, y)
  std::vector<std::string> notes;
  std::string fingerprint;
  bool pass = false;
};

// 't Hooft twisted flat SU(2) connection on a 2D torus: irreducible, H^1 = 0
Connection twisted_flat(GridPtr g);
// constant diagonal holonomies on a 2D torus: reducible flat SU(2) connection with dim H^1 = 2
Connection diagonal_flat(GridPtr g, double th0 = 0.7 / 3, double th1 = 1.1 / 3);
// i.i.d. normal coordinates
Cochain gaussian_cochain(GridPtr g, int degree, int n, double scale, std::uint64_t seed);

// FNV-1a over a canonical description, as 16 hex digits
std::string fingerprint_hex(const std::string& canonical);
// least-squares slope of log y against log x; needs at least two positive points
double loglog_slope(const std::vector<std::pair<double, double>>& pts);

// uniform samples v[i] at lo + i (hi - lo) / (size - 1)
struct Sampled {
  double lo = 0.0, hi = 0.0;
  std::vector<double> v;
  double step() const { return (hi - lo) / static_cast<double>(v.size() - 1); }
  double x(std::size_t i) const { return lo + step() * static_cast<double>(i); }
};

struct GsOptions {
  double tol = 1e-8;          // absolute quadrature tolerance on the inequality
  double pre_tol = 1e-12;     // slack allowed in the sampled preconditions
};

// int_{B_R} g <= int_{B_{R+r}} f + 4/r^2 int_{B_{R+r} \ B_R} e, trapezoid quadrature and
// second differences for e''. Samples must cover [-(R+r), R+r] with +-R on nodes.
// Throws Precondition naming the violated assumption.
EstimateReport check_gslemma(const Sampled& e, const Sampled& f, const Sampled& g, double R, double r,
                             const GsOptions& opt = {});

struct GsTrial {
  Sampled e, f, g;
  double R = 1.0, r = 1.0;
};

// rejection-sampled smooth trio satisfying the preconditions; rejections counted in `rejected`
GsTrial random_gs_trial(std::uint64_t seed, int samples = 401, long* rejected = nullptr);
// `trials` random trios; constants: trials, violations, rejected, max_ratio (lhs / rhs), min_slack
EstimateReport gslemma_suite(std::uint64_t seed, int trials, int samples = 401, const GsOptions& opt = {});

struct ScalingOptions {
  NSOptions ns;
  double band = 0.05;  // slope >= 1 - band
};

// alpha_t = flat + t v; regression of log |NS(alpha_t) - alpha_t| on log |F_{alpha_t}|
EstimateReport ns_identity_scaling(const Connection& flat, const Cochain& v, std::vector<double> t_list,
                                   const ScalingOptions& opt = {});

// H^1 frame at c: the `dim` lowest 1-form Laplacian modes
HarmonicBasis harmonic_frame(const Connection& c, int dim);

// operator norm of the difference of two frame projectors (sine of the largest principal angle)
double projector_distance(const HarmonicBasis& a, const HarmonicBasis& b, const MetricWeights& w);

// sup over probes of |(proj_a - proj_a') eta| / |eta|, and C = that / |a - a'|
EstimateReport proj_lipschitz(const Connection& alpha, const Connection& alpha_prime, const std::vector<Cochain>& probes,
                              int dim);
// alpha'_s = alpha +- s w over s_list; regression of the two-sided projector distance
// max over the sign on |alpha - alpha'_s|
EstimateReport proj_lipschitz_family(const Connection& alpha, const Cochain& w, const std::vector<double>& s_list,
                                     int dim, double min_slope = 1.0);

struct FDOptions {
  FDOptions() {
    ns.tol = 1e-12;
    // NS lands on reducible flats, where a scalar mode falls through any fixed cut; no ambiguity band
    ns.spectral.gap = 1.0;
  }
  double step = 1e-3;
  double agreement = 0.1;  // step-halving relative agreement
  double floor = 1e-7;     // absolute floor below which derivatives count as FD noise
  NSOptions ns;
};

// central difference of Pi o NS along eta, expressed as a vector in the frame at NS(alpha).
// Throws Precondition when step halving disagrees by more than the agreement band.
struct FrameDerivative {
  std::vector<double> coords;  // in the frame basis
  double norm = 0.0;
  double halving_gap = 0.0;    // |D_h - D_{h/2}| / max(|D_{h/2}|, floor)
};

struct NSFrame {
  Connection flat;  // NS(alpha)
  HarmonicBasis basis;
};

NSFrame ns_frame(const Connection& alpha, int dim, const NSOptions& ns = {});
FrameDerivative frame_derivative(const Connection& alpha, const NSFrame& frame, const Cochain& eta,
                                 const FDOptions& opt = {});
// frame coordinates of a 1-cochain
std::vector<double> frame_coords(const NSFrame& frame, const Cochain& x);

// f(alpha) = max over probes of |proj_alpha eta - D(Pi o NS) eta| / |proj_alpha eta|, with proj_alpha eta
// carried into the NS(alpha) frame. Probes default to the H^1_alpha frame vectors.
EstimateReport linearization_defect(const Connection& alpha, int dim, const std::vector<Cochain>& probes = {},
                                    const FDOptions& opt = {});
// f along a family ordered by decreasing curvature; pass = strictly decreasing and end <= ratio * start
EstimateReport linearization_family(const std::vector<Connection>& family, int dim, const FDOptions& opt = {},
                                    double ratio = 0.1);

// |D(*eta) - * D(eta)| in the NS(alpha) frame; 2D grids
EstimateReport complex_linearity_check(const Connection& alpha, int dim, const std::vector<Cochain>& probes,
                                       const FDOptions& opt = {});

// C1 = sup |eta - proj eta| / (|d eta| + |d* eta|) over probes and 1 / sqrt(next eigenvalue);
// C0 = 1 / sqrt(lowest scalar eigenvalue). Stability band over the family.
EstimateReport elliptic_constant_probe(const std::vector<Connection>& family, int dim, const std::vector<Cochain>& probes,
                                       double band = 2.0);

struct BumpProfile {
  Sampled h;
  std::vector<double> dh, d2h;  // exact spline derivatives at the samples
  double core = 0.0, support = 0.0;
  double level = 0.0;
  double C0 = 0.0;          // sup of (|h'| + |h''|) / h over the ramp where h >= level, from the exact spline
  double C0_samples = 0.0;  // the same over the samples
};

// quintic smoothstep ramp on [-W, W]: 1 on |s| <= core, 0 on |s| >= support.
// core >= W gives the constant profile with C0 = 0. The ratio is unbounded at the support edge
// for any compactly supported profile, so C0 is taken on the superlevel set {h >= level}.
BumpProfile make_bump(double core, double support, int samples, double half_width = 0.0, double level = 1e-2);

}  // namespace gaugelab
