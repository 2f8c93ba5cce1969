#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gaugelab/connection.hpp"

namespace gaugelab {

// Linear map on flat coordinate vectors, self-adjoint for the diagonal metric.
struct LinearOperator {
  long size = 0;
  Eigen::VectorXd metric;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
};

struct SpectralOptions {
  double rel_tol = 1e-8;     // kernel cut relative to lambda_max
  double gap = 1e2;          // required separation factor around the cut
  long dense_limit = 1200;   // dense eigensolve up to this size, LOBPCG above
  int block = 0;             // LOBPCG block, 0 = automatic
  int max_iter = 4000;
};

// eigenpairs of the operator below rel_tol * lambda_max, metric-orthonormal
struct SpectralCluster {
  std::vector<Eigen::VectorXd> vectors;
  std::vector<double> values;
  double lambda_max = 0.0;
  double cut = 0.0;
  double next = 0.0;  // smallest eigenvalue above the cut
};

SpectralCluster low_cluster(const LinearOperator& op, const SpectralOptions& opt = {});
// the `count` smallest eigenvalues, ascending
std::vector<double> smallest_eigenvalues(const LinearOperator& op, int count, const SpectralOptions& opt = {});
// the same with metric-orthonormal vectors; cut = largest returned value, next = the one after
SpectralCluster lowest_eigenpairs(const LinearOperator& op, int count, const SpectralOptions& opt = {});
double largest_eigenvalue(const LinearOperator& op);

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;      // relative, on the kernel-free part of the right side
  int kernel_dim = 0;
  double removed = 0.0;       // relative norm of the removed kernel component
  bool kernel_removed = false;
};

// conjugate gradients in the operator metric, deflating `kernel`; throws Solver at the cap
SolveReport cg_solve(const LinearOperator& op, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int max_iter,
                     const SpectralCluster* kernel = nullptr);

// d, d* and Hodge Laplacians for a fixed connection
class CovariantComplex {
 public:
  explicit CovariantComplex(const Connection& c);
  CovariantComplex(GridPtr grid, int n, EdgeTransport ad, MetricWeights w);

  Cochain d(const Cochain& x) const { return covariant_d(ad_, x); }
  Cochain dstar(const Cochain& y) const { return covariant_d_adjoint(ad_, w_, y); }
  // d d* + d* d, with the terms that exist in this degree
  Cochain laplacian(const Cochain& x) const;

  LinearOperator laplacian_operator(int degree) const;
  Eigen::VectorXd metric(int degree) const;
  Cochain zeros(int degree) const { return Cochain(grid_, degree, n_); }

  const GridPtr& grid() const { return grid_; }
  int n() const { return n_; }
  const MetricWeights& weights() const { return w_; }
  const EdgeTransport& transport() const { return ad_; }

 private:
  GridPtr grid_;
  int n_ = 2;
  EdgeTransport ad_;
  MetricWeights w_;
};

Cochain laplacian0(const Connection& c, const Cochain& xi);
Cochain hodge_laplacian(const Connection& c, const Cochain& x);

// deflated solve of the degree-k Hodge Laplacian; minimum-norm kernel-orthogonal solution
std::pair<Cochain, SolveReport> solve_laplacian(const CovariantComplex& ops, const Cochain& rhs, double tol,
                                                const SpectralOptions& opt = {}, int max_iter = 20000);
std::pair<Cochain, SolveReport> solve_poisson(const Connection& c, const Cochain& rhs, double tol);

struct HarmonicBasis {
  std::vector<Cochain> vectors;
  int dim = 0;
  std::vector<double> values;
  double lambda_max = 0.0;
  double next = 0.0;
};

HarmonicBasis harmonic_basis(const Connection& c, const SpectralOptions& opt = {});
HarmonicBasis harmonic_basis(const CovariantComplex& ops, const SpectralOptions& opt = {});
// span of the `dim` lowest 1-form Laplacian modes: H^1 at small curvature, where the
// kernel of a reducible flat connection lifts to a low cluster
HarmonicBasis harmonic_cluster(const Connection& c, int dim, const SpectralOptions& opt = {});
Cochain harmonic_project(const HarmonicBasis& h, const Cochain& eta, const MetricWeights& w);
Cochain harmonic_project(const Connection& c, const Cochain& eta, const SpectralOptions& opt = {});

struct HodgeOptions {
  double tol = 1e-12;
  double curvature_threshold = 0.5;  // L2 bound on F, recorded when exceeded
  SpectralOptions spectral;
  int max_iter = 20000;
};

struct HodgeDecomposition {
  Cochain harmonic;
  Cochain exact;
  Cochain coexact;
  Cochain xi;     // exact = d xi
  Cochain omega;  // coexact = d* omega
  double residual = 0.0;       // |input - sum| / |input|
  double orthogonality = 0.0;  // max pairwise |<.,.>| / |input|^2
  double curvature = 0.0;
  bool curvature_exceeded = false;
  int harmonic_dim = 0;
  SolveReport solve;
};

HodgeDecomposition hodge_decompose(const Connection& c, const Cochain& eta, const HodgeOptions& opt = {});

}  // namespace gaugelab
