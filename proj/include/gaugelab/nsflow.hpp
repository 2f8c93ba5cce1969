#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "gaugelab/elliptic.hpp"

namespace gaugelab {

double ym_energy(const Connection& c, const MetricWeights& w);
double ym_energy(const Connection& c);
// d_alpha^* F_alpha in the weights of c
Cochain ym_grad(const Connection& c);

struct FlowOptions {
  double tol = 1e-8;             // local error per step, max-abs
  double dt0 = 1e-3;
  double dt_min = 1e-12;
  double flat_capture = 0.0;     // energy threshold; 0 disables capture
  double curvature_tol = 1e-10;  // L2 target once captured
  double capture_budget = 1e3;   // extra flow time allowed after capture
  long max_steps = 2000000;
  int checkpoint_every = 0;
};

struct FlowState;
using FlowCallback = std::function<void(const FlowState&)>;

struct FlowState {
  Connection connection;
  double tau = 0.0;
  std::vector<std::pair<double, double>> energy_history;  // (tau, energy), one per accepted step
  long accepted = 0;
  long rejected = 0;
  double dt = 0.0;
  bool flat_limit = false;
  double sigma_asymmetry = 0.0;  // doubling runs only
  double boundary_normal = 0.0;  // doubling runs only
};

class FlowError : public Error {
 public:
  FlowError(const std::string& what, FlowState last)
      : Error(ErrorKind::Integrator, what), last_(std::make_shared<FlowState>(std::move(last))) {}
  const FlowState& last_state() const { return *last_; }

 private:
  std::shared_ptr<FlowState> last_;
};

FlowState ym_flow(const Connection& c, double tau_end, const FlowOptions& opt = {}, const FlowCallback& checkpoint = {});

struct NSOptions {
  double tol = 1e-10;      // L2 curvature target
  int max_iter = 30;
  double eps0 = 1.0;       // L2 curvature admissible at the start
  int flow_steps = 4;      // RK4 steps per imaginary gauge move
  double solve_tol = 1e-13;
  SpectralOptions spectral;
};

struct NSResult {
  Cochain Xi;
  Connection flat;
  int iterations = 0;
  double curvature_residual = 0.0;
  std::vector<double> residuals;  // L2 curvature before each step and at the end
  double terminal_slope = 0.0;    // slope of log r_{k+1} against log r_k near the end
};

NSResult ns_newton(const Connection& c, const NSOptions& opt = {});
double newton_terminal_slope(const std::vector<double>& residuals, double floor = 1e-13);

struct OrbitReport {
  double max_discrepancy = 0.0;
  int loops = 0;
};

struct WilsonLoop {
  long start = 0;
  LoopPath path;
};

// generators at several offsets, generator products, plaquettes and 2x2 squares
std::vector<WilsonLoop> spanning_loops(const Grid& g, int offsets = 3);
OrbitReport orbit_compare(const Connection& a, const Connection& b, const std::vector<WilsonLoop>& loops);
OrbitReport orbit_compare(const Connection& a, const Connection& b);

// Doubling across the I axis. The wrap I-edge in storage is the boundary normal layer.
int interval_axis(const Grid& g);
double boundary_normal_defect(const Connection& c);
Connection double_connection(const Connection& c);
Connection restrict_doubled(const Connection& doubled, const Connection& like);
double sigma_asymmetry(const Connection& doubled, int axis);
FlowState double_and_flow(const Connection& c, double tau_end, const FlowOptions& opt = {});

struct RestrictionReport {
  std::vector<double> curvature;             // L2 curvature of each input
  std::vector<std::array<double, 3>> gaps;   // L^q gaps q = 1, 2, 4
  std::vector<double> holder;                // vol^{1/4} |gap|_4 - |gap|_2 >= 0
  bool monotone = false;
};

// L^q norm of a slice 1-cochain, pointwise density from a / h over the edges at each vertex
double slice_lq_norm(const Cochain& x, double q, const InnerProductSpec& ip = {});
Cochain sigma_slice(const Connection& c, int layer);
RestrictionReport boundary_restriction_continuity(const std::vector<Connection>& family, int layer, double tau_end,
                                                  const FlowOptions& opt = {});

// base-direction links set to the reference except the wrap layer, which keeps the holonomy
Connection temporal_gauge(const Connection& c, int axis);
GaugeField temporal_gauge_transform(const Connection& c, int axis);

}  // namespace gaugelab
