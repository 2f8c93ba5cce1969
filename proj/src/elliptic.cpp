#include "gaugelab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gaugelab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double mdot(const VectorXd& m, const VectorXd& x, const VectorXd& y) { return (m.array() * x.array() * y.array()).sum(); }

// symmetric form S = M^{1/2} A M^{-1/2} acting on Euclidean vectors
struct Symmetrized {
  const LinearOperator& op;
  VectorXd sq, isq;
  VectorXd tmp_in, tmp_out;
  explicit Symmetrized(const LinearOperator& o) : op(o) {
    sq = o.metric.array().sqrt();
    isq = sq.cwiseInverse();
  }
  void operator()(const VectorXd& u, VectorXd& out) {
    tmp_in = isq.cwiseProduct(u);
    tmp_out.resize(op.size);
    op.apply(tmp_in, tmp_out);
    out = sq.cwiseProduct(tmp_out);
  }
};

// orthonormal basis of the column span, dropping near-dependent directions
MatrixXd orthonormalize(const MatrixXd& V, double rel = 1e-12) {
  if (V.cols() == 0) return V;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(V.transpose() * V);
  const double top = es.eigenvalues().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < V.cols(); ++i)
    if (es.eigenvalues()[i] > rel * top && es.eigenvalues()[i] > 0.0) keep.push_back(i);
  MatrixXd Q(V.rows(), keep.size());
  for (size_t j = 0; j < keep.size(); ++j)
    Q.col(j) = V * es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()[keep[j]]);
  // one re-orthogonalization pass for stability
  Eigen::HouseholderQR<MatrixXd> qr(Q);
  MatrixXd R = qr.householderQ() * MatrixXd::Identity(Q.rows(), Q.cols());
  return R;
}

struct EigenResult {
  VectorXd values;
  MatrixXd vectors;  // Euclidean orthonormal, symmetrized coordinates
};

EigenResult dense_eigen(Symmetrized& S, long N) {
  MatrixXd A(N, N);
  VectorXd e = VectorXd::Zero(N), col(N);
  for (long j = 0; j < N; ++j) {
    e[j] = 1.0;
    S(e, col);
    A.col(j) = col;
    e[j] = 0.0;
  }
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  return {es.eigenvalues(), es.eigenvectors()};
}

// LOBPCG for the b lowest eigenpairs; `need` leading pairs must reach the residual tolerance
EigenResult lobpcg(Symmetrized& S, long N, int b, double lam_max, int max_iter, std::mt19937_64& rng,
                   const std::function<int(const VectorXd&)>& need) {
  std::normal_distribution<double> nd;
  MatrixXd X(N, b);
  for (long i = 0; i < N; ++i)
    for (int j = 0; j < b; ++j) X(i, j) = nd(rng);
  X = orthonormalize(X);
  MatrixXd P(N, 0);
  VectorXd theta;
  VectorXd col(N);
  auto applyS = [&](const MatrixXd& V) {
    MatrixXd AV(N, V.cols());
    for (int j = 0; j < V.cols(); ++j) {
      S(V.col(j), col);
      AV.col(j) = col;
    }
    return AV;
  };
  MatrixXd AX = applyS(X);
  const double tol = 1e-12 * lam_max;
  for (int it = 0; it < max_iter; ++it) {
    MatrixXd H = X.transpose() * AX;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    X = (X * es.eigenvectors()).eval();
    AX = (AX * es.eigenvectors()).eval();
    theta = es.eigenvalues();
    MatrixXd R = AX - X * theta.asDiagonal();
    const int m = std::min<int>(need(theta), b);
    bool done = true;
    for (int j = 0; j < m; ++j)
      if (R.col(j).norm() > tol) done = false;
    if (done) return {theta, X};
    // residual and direction blocks, orthogonal to X
    MatrixXd W(N, R.cols() + P.cols());
    W << R, P;
    for (int pass = 0; pass < 2; ++pass) W -= X * (X.transpose() * W);
    W = orthonormalize(W, 1e-14);
    for (int pass = 0; pass < 1; ++pass) W -= X * (X.transpose() * W);
    W = orthonormalize(W, 1e-14);
    MatrixXd V(N, X.cols() + W.cols());
    V << X, W;
    MatrixXd AW = applyS(W);
    MatrixXd AV(N, V.cols());
    AV << AX, AW;
    MatrixXd G = V.transpose() * AV;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> gs(G);
    MatrixXd C = gs.eigenvectors().leftCols(b);
    MatrixXd Xn = V * C;
    P = W * C.bottomRows(W.cols());
    AX = AV * C;
    X = Xn;
  }
  throw Error(ErrorKind::Solver, "LOBPCG eigensolve did not converge");
}

SpectralCluster classify(const EigenResult& r, const Symmetrized& S, double lam_max, const SpectralOptions& opt,
                         int available) {
  SpectralCluster c;
  c.lambda_max = lam_max;
  c.cut = opt.rel_tol * lam_max;
  const double root = std::sqrt(opt.gap);
  int k = 0;
  while (k < available && r.values[k] <= c.cut) ++k;
  if (k > 0 && r.values[k - 1] > c.cut / root)
    throw Error(ErrorKind::Solver, "spectral-gap ambiguity: eigenvalue just below the kernel cut");
  c.next = k < available ? r.values[k] : lam_max;
  if (k < available && r.values[k] < c.cut * root)
    throw Error(ErrorKind::Solver, "spectral-gap ambiguity: eigenvalue just above the kernel cut");
  for (int j = 0; j < k; ++j) {
    c.values.push_back(std::max(0.0, r.values[j]));
    c.vectors.push_back(S.isq.cwiseProduct(r.vectors.col(j)));
  }
  return c;
}

}  // namespace

double largest_eigenvalue(const LinearOperator& op) {
  Symmetrized S(op);
  const long N = op.size;
  const int m = static_cast<int>(std::min<long>(N, 40));
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> nd;
  MatrixXd Q(N, m);
  VectorXd q(N), w(N);
  for (long i = 0; i < N; ++i) q[i] = nd(rng);
  q.normalize();
  MatrixXd T = MatrixXd::Zero(m, m);
  int used = 0;
  for (int j = 0; j < m; ++j) {
    Q.col(j) = q;
    ++used;
    S(q, w);
    for (int i = 0; i <= j; ++i) {
      const double h = Q.col(i).dot(w);
      if (i >= j - 1) T(i, j) = T(j, i) = h;
      w -= h * Q.col(i);
    }
    for (int i = 0; i <= j; ++i) w -= Q.col(i).dot(w) * Q.col(i);
    const double beta = w.norm();
    if (j + 1 < m) {
      if (beta < 1e-13) break;
      T(j, j + 1) = T(j + 1, j) = beta;
      q = w / beta;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(T.topLeftCorner(used, used));
  return es.eigenvalues().maxCoeff();
}

SpectralCluster low_cluster(const LinearOperator& op, const SpectralOptions& opt) {
  Symmetrized S(op);
  const long N = op.size;
  if (N <= opt.dense_limit) {
    const EigenResult r = dense_eigen(S, N);
    return classify(r, S, r.values[N - 1], opt, static_cast<int>(N));
  }
  const double lam_max = 1.02 * largest_eigenvalue(op);
  const double cut = opt.rel_tol * lam_max;
  const double root = std::sqrt(opt.gap);
  std::mt19937_64 rng(0xc1u);
  int b = opt.block > 0 ? opt.block : 8;
  for (;;) {
    auto need = [&](const VectorXd& th) {
      int k = 0;
      while (k < th.size() && th[k] <= 10.0 * cut * root) ++k;
      return k + 1;
    };
    const EigenResult r = lobpcg(S, N, b, lam_max, opt.max_iter, rng, need);
    int k = 0;
    while (k < b && r.values[k] <= cut * root) ++k;
    if (k < b) return classify(r, S, lam_max, opt, b);
    if (2 * b > N) throw Error(ErrorKind::Solver, "kernel larger than the iterative block allows");
    b *= 2;
  }
}

SpectralCluster lowest_eigenpairs(const LinearOperator& op, int count, const SpectralOptions& opt) {
  Symmetrized S(op);
  const long N = op.size;
  count = static_cast<int>(std::min<long>(count, N));
  EigenResult r;
  double lam_max = 0.0;
  if (N <= opt.dense_limit) {
    r = dense_eigen(S, N);
    lam_max = r.values[N - 1];
  } else {
    lam_max = largest_eigenvalue(op);
    std::mt19937_64 rng(0xa11u);
    const int b = std::max(count + 2, opt.block);
    r = lobpcg(S, N, b, lam_max, opt.max_iter, rng, [&](const VectorXd&) { return count + 1; });
  }
  SpectralCluster c;
  c.lambda_max = lam_max;
  for (int j = 0; j < count; ++j) {
    c.values.push_back(std::max(0.0, r.values[j]));
    c.vectors.push_back(S.isq.cwiseProduct(r.vectors.col(j)));
  }
  c.cut = count > 0 ? c.values.back() : 0.0;
  c.next = count < r.values.size() ? r.values[count] : lam_max;
  return c;
}

std::vector<double> smallest_eigenvalues(const LinearOperator& op, int count, const SpectralOptions& opt) {
  return lowest_eigenpairs(op, count, opt).values;
}

SolveReport cg_solve(const LinearOperator& op, const VectorXd& b_in, VectorXd& x, double tol, int max_iter,
                     const SpectralCluster* kernel) {
  const VectorXd& m = op.metric;
  auto deflate = [&](VectorXd& v) {
    if (!kernel) return;
    for (const VectorXd& k : kernel->vectors) v -= mdot(m, k, v) * k;
  };
  SolveReport rep;
  rep.kernel_dim = kernel ? static_cast<int>(kernel->vectors.size()) : 0;
  VectorXd b = b_in;
  deflate(b);
  const double bn0 = std::sqrt(std::max(0.0, mdot(m, b_in, b_in)));
  const double bn = std::sqrt(std::max(0.0, mdot(m, b, b)));
  if (bn0 > 0.0) {
    const VectorXd diff = b_in - b;
    rep.removed = std::sqrt(std::max(0.0, mdot(m, diff, diff))) / bn0;
    rep.kernel_removed = rep.removed > 1e-12;
  }
  x = VectorXd::Zero(op.size);
  // nothing left beyond round-off once the kernel is removed
  if (bn <= 1e-13 * bn0 || bn == 0.0) return rep;
  VectorXd r = b, p = r, Ap(op.size);
  double rr = mdot(m, r, r);
  for (int it = 1; it <= max_iter; ++it) {
    op.apply(p, Ap);
    deflate(Ap);
    const double pAp = mdot(m, p, Ap);
    if (!(pAp > 0.0)) throw Error(ErrorKind::Solver, "conjugate gradients lost positivity");
    const double alpha = rr / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    // periodic true-residual refresh
    if (it % 50 == 0) {
      VectorXd Ax(op.size);
      op.apply(x, Ax);
      r = b - Ax;
      deflate(r);
    }
    const double rr_new = mdot(m, r, r);
    rep.iterations = it;
    rep.residual = std::sqrt(rr_new) / bn;
    if (rep.residual <= tol) {
      VectorXd Ax(op.size);
      op.apply(x, Ax);
      VectorXd tr = b - Ax;
      deflate(tr);
      rep.residual = std::sqrt(std::max(0.0, mdot(m, tr, tr))) / bn;
      if (rep.residual <= 10.0 * tol) {
        deflate(x);
        return rep;
      }
      r = tr;
      p = r;
      rr = mdot(m, r, r);
      continue;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  throw Error(ErrorKind::Solver, "conjugate gradients hit the iteration cap");
}

CovariantComplex::CovariantComplex(const Connection& c)
    : grid_(c.grid_ptr()), n_(c.n()), ad_(edge_adjoint(links(c))), w_(c.weights()) {}

CovariantComplex::CovariantComplex(GridPtr grid, int n, EdgeTransport ad, MetricWeights w)
    : grid_(std::move(grid)), n_(n), ad_(std::move(ad)), w_(std::move(w)) {}

Cochain CovariantComplex::laplacian(const Cochain& x) const {
  const int k = x.degree();
  Cochain r = x.zeros_like();
  if (k < grid_->dim()) r += dstar(d(x));
  if (k > 0) r += d(dstar(x));
  return r;
}

VectorXd CovariantComplex::metric(int degree) const {
  Cochain z(grid_, degree, n_);
  VectorXd m(z.data().size());
  const long nv = grid_->vertices();
  const int gd = z.gdim();
  for (int c = 0; c < grid_->num_combos(degree); ++c) {
    const double wt = 0.5 * w_.ip.kappa * w_.weight(degree, c);
    m.segment(c * nv * gd, nv * gd).setConstant(wt);
  }
  return m;
}

LinearOperator CovariantComplex::laplacian_operator(int degree) const {
  LinearOperator op;
  op.metric = metric(degree);
  op.size = op.metric.size();
  op.apply = [this, degree](const VectorXd& in, VectorXd& out) {
    Cochain x(grid_, degree, n_);
    std::copy(in.data(), in.data() + in.size(), x.data().begin());
    const Cochain y = laplacian(x);
    out = Eigen::Map<const VectorXd>(y.data().data(), y.data().size());
  };
  return op;
}

Cochain laplacian0(const Connection& c, const Cochain& xi) {
  if (xi.degree() != 0) throw Error(ErrorKind::Dimension, "laplacian0 takes a 0-cochain");
  return covariant_d_adjoint(c, covariant_d(c, xi));
}

Cochain hodge_laplacian(const Connection& c, const Cochain& x) { return CovariantComplex(c).laplacian(x); }

namespace {

Cochain to_cochain(const CovariantComplex& ops, int degree, const VectorXd& v) {
  Cochain x = ops.zeros(degree);
  std::copy(v.data(), v.data() + v.size(), x.data().begin());
  return x;
}

VectorXd to_vector(const Cochain& x) { return Eigen::Map<const VectorXd>(x.data().data(), x.data().size()); }

}  // namespace

std::pair<Cochain, SolveReport> solve_laplacian(const CovariantComplex& ops, const Cochain& rhs, double tol,
                                                const SpectralOptions& opt, int max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Precondition, "solve tolerance must be positive");
  const LinearOperator op = ops.laplacian_operator(rhs.degree());
  const SpectralCluster ker = low_cluster(op, opt);
  VectorXd x;
  const SolveReport rep = cg_solve(op, to_vector(rhs), x, tol, max_iter, &ker);
  return {to_cochain(ops, rhs.degree(), x), rep};
}

std::pair<Cochain, SolveReport> solve_poisson(const Connection& c, const Cochain& rhs, double tol) {
  if (rhs.degree() != 0) throw Error(ErrorKind::Dimension, "solve_poisson takes a 0-cochain");
  return solve_laplacian(CovariantComplex(c), rhs, tol);
}

HarmonicBasis harmonic_basis(const CovariantComplex& ops, const SpectralOptions& opt) {
  const LinearOperator op = ops.laplacian_operator(1);
  const SpectralCluster cl = low_cluster(op, opt);
  // dimension must not depend on halving the cut
  SpectralOptions half = opt;
  half.rel_tol *= 0.5;
  int half_dim = 0;
  for (double v : cl.values)
    if (v <= half.rel_tol * cl.lambda_max) ++half_dim;
  if (half_dim != static_cast<int>(cl.values.size()))
    throw Error(ErrorKind::Solver, "harmonic dimension changes under cut halving");
  HarmonicBasis h;
  h.dim = static_cast<int>(cl.vectors.size());
  h.values = cl.values;
  h.lambda_max = cl.lambda_max;
  h.next = cl.next;
  for (const VectorXd& v : cl.vectors) h.vectors.push_back(to_cochain(ops, 1, v));
  return h;
}

HarmonicBasis harmonic_basis(const Connection& c, const SpectralOptions& opt) {
  return harmonic_basis(CovariantComplex(c), opt);
}

HarmonicBasis harmonic_cluster(const Connection& c, int dim, const SpectralOptions& opt) {
  const CovariantComplex ops(c);
  const SpectralCluster cl = lowest_eigenpairs(ops.laplacian_operator(1), dim, opt);
  HarmonicBasis h;
  h.dim = dim;
  h.values = cl.values;
  h.lambda_max = cl.lambda_max;
  h.next = cl.next;
  for (const VectorXd& v : cl.vectors) h.vectors.push_back(to_cochain(ops, 1, v));
  return h;
}

Cochain harmonic_project(const HarmonicBasis& h, const Cochain& eta, const MetricWeights& w) {
  Cochain r = eta.zeros_like();
  for (const Cochain& v : h.vectors) r.axpy(inner_product(v, eta, w), v);
  return r;
}

Cochain harmonic_project(const Connection& c, const Cochain& eta, const SpectralOptions& opt) {
  return harmonic_project(harmonic_basis(c, opt), eta, c.weights());
}

HodgeDecomposition hodge_decompose(const Connection& c, const Cochain& eta, const HodgeOptions& opt) {
  if (eta.degree() != 1) throw Error(ErrorKind::Dimension, "hodge_decompose takes a 1-cochain");
  const CovariantComplex ops(c);
  const MetricWeights& w = c.weights();
  HodgeDecomposition out;
  if (c.grid().dim() >= 2) {
    const Cochain F = curvature(c);
    out.curvature = norm(F, w);
    out.curvature_exceeded = out.curvature > opt.curvature_threshold;
  }
  const LinearOperator op = ops.laplacian_operator(1);
  const SpectralCluster ker = low_cluster(op, opt.spectral);
  out.harmonic_dim = static_cast<int>(ker.vectors.size());
  VectorXd y;
  out.solve = cg_solve(op, to_vector(eta), y, opt.tol, opt.max_iter, &ker);
  const Cochain Y = to_cochain(ops, 1, y);
  out.xi = ops.dstar(Y);
  out.exact = ops.d(out.xi);
  if (c.grid().dim() >= 2) {
    out.omega = ops.d(Y);
    out.coexact = ops.dstar(out.omega);
  } else {
    out.omega = Cochain();
    out.coexact = eta.zeros_like();
  }
  // harmonic part read from the cluster, the remainder from the solve
  Cochain proj = eta.zeros_like();
  for (const VectorXd& v : ker.vectors) {
    const Cochain vc = to_cochain(ops, 1, v);
    proj.axpy(inner_product(vc, eta, w), vc);
  }
  out.harmonic = proj;
  const double en = norm(eta, w);
  const Cochain sum = out.harmonic + out.exact + out.coexact;
  out.residual = en > 0.0 ? norm(eta - sum, w) / en : norm(sum, w);
  const double scale = en > 0.0 ? en * en : 1.0;
  out.orthogonality = std::max({std::abs(inner_product(out.harmonic, out.exact, w)),
                                std::abs(inner_product(out.harmonic, out.coexact, w)),
                                std::abs(inner_product(out.exact, out.coexact, w))}) /
                      scale;
  return out;
}

}  // namespace gaugelab
