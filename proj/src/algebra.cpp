#include "gaugelab/algebra.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

namespace gaugelab {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::CutLocus: return "cut_locus";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Integrator: return "integrator";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

namespace {

void check_rank(long rows, long cols) {
  if (rows != cols || rows < 1 || rows > kMaxRank)
    throw Error(ErrorKind::Dimension, "matrix must be square with 1 <= n <= 4");
}

void check_same(int a, int b) {
  if (a != b) throw Error(ErrorKind::Dimension, "rank mismatch");
}

}  // namespace

AlgebraElement::AlgebraElement(const Mat& m) : m_(m) {
  check_rank(m.rows(), m.cols());
  const double scale = std::max(1.0, m.norm());
  if ((m + m.adjoint()).norm() > 1e-12 * scale || std::abs(m.trace()) > 1e-12 * scale)
    throw Error(ErrorKind::Dimension, "not an anti-Hermitian traceless matrix");
}

AlgebraElement AlgebraElement::operator+(const AlgebraElement& o) const {
  check_same(n(), o.n());
  return AlgebraElement(Mat(m_ + o.m_), Unchecked{});
}

AlgebraElement AlgebraElement::operator-(const AlgebraElement& o) const {
  check_same(n(), o.n());
  return AlgebraElement(Mat(m_ - o.m_), Unchecked{});
}

AlgebraElement AlgebraElement::operator-() const { return AlgebraElement(Mat(-m_), Unchecked{}); }

AlgebraElement AlgebraElement::operator*(double s) const {
  return AlgebraElement(Mat(m_ * s), Unchecked{});
}

AlgebraElement& AlgebraElement::operator+=(const AlgebraElement& o) {
  check_same(n(), o.n());
  m_ += o.m_;
  return *this;
}

GroupElement::GroupElement(const Mat& m) : m_(m) {
  check_rank(m.rows(), m.cols());
  const long n = m.rows();
  if ((m.adjoint() * m - Mat::Identity(n, n)).norm() > 1e-10)
    throw Error(ErrorKind::Dimension, "not unitary");
  if (std::abs(m.determinant() - Complex(1.0, 0.0)) > 1e-10)
    throw Error(ErrorKind::Dimension, "determinant is not 1");
}

GroupElement GroupElement::identity(int n) {
  check_rank(n, n);
  return GroupElement(Mat(Mat::Identity(n, n)), Unchecked{});
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
  check_same(n(), o.n());
  return GroupElement(Mat(m_ * o.m_), Unchecked{});
}

GroupElement GroupElement::inverse() const { return GroupElement(Mat(m_.adjoint()), Unchecked{}); }

AlgebraElement unchecked_algebra(const Mat& m) { return AlgebraElement(m, AlgebraElement::Unchecked{}); }
GroupElement unchecked_group(const Mat& m) { return GroupElement(m, GroupElement::Unchecked{}); }

LieAlgebra::LieAlgebra(int n) : n_(n) {
  const Complex I(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      Mat s = Mat::Zero(n, n);
      s(j, k) = 1.0;
      s(k, j) = 1.0;
      Mat a = Mat::Zero(n, n);
      a(j, k) = -I;
      a(k, j) = I;
      basis_.push_back(Mat(-0.5 * I * s));
      basis_.push_back(Mat(-0.5 * I * a));
    }
  }
  for (int l = 1; l < n; ++l) {
    Mat d = Mat::Zero(n, n);
    const double c = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int j = 0; j < l; ++j) d(j, j) = c;
    d(l, l) = -c * l;
    basis_.push_back(Mat(-0.5 * I * d));
  }
  const int g = dim();
  f_.assign(static_cast<size_t>(g) * g * g, 0.0);
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b) {
      Coords c = coords(Mat(basis_[a] * basis_[b] - basis_[b] * basis_[a]));
      for (int k = 0; k < g; ++k) f_[(a * g + b) * g + k] = c[k];
    }
}

const LieAlgebra& LieAlgebra::get(int n) {
  check_rank(n, n);
  static std::array<std::unique_ptr<LieAlgebra>, kMaxRank + 1> cache;
  static std::once_flag flags[kMaxRank + 1];
  std::call_once(flags[n], [n] { cache[n].reset(new LieAlgebra(n)); });
  return *cache[n];
}

Coords LieAlgebra::coords(const Mat& x) const {
  Coords c(dim());
  coords(x, c.data());
  return c;
}

void LieAlgebra::coords(const Mat& x, double* out) const {
  for (int a = 0; a < dim(); ++a) out[a] = -2.0 * (basis_[a].cwiseProduct(x.transpose())).sum().real();
}

Mat LieAlgebra::matrix(const Coords& c) const { return matrix(c.data()); }

Mat LieAlgebra::matrix(const double* c) const {
  Mat m = Mat::Zero(n_, n_);
  for (int a = 0; a < dim(); ++a) m += c[a] * basis_[a];
  return m;
}

AdMat LieAlgebra::adjoint_matrix(const Mat& g) const {
  const int d = dim();
  AdMat r(d, d);
  const Mat gi = g.adjoint();
  for (int b = 0; b < d; ++b) {
    Mat y = g * basis_[b] * gi;
    for (int a = 0; a < d; ++a) r(a, b) = -2.0 * (basis_[a].cwiseProduct(y.transpose())).sum().real();
  }
  return r;
}

void LieAlgebra::bracket(const double* x, const double* y, double* out) const {
  const int g = dim();
  if (n_ == 2) {
    out[0] = x[1] * y[2] - x[2] * y[1];
    out[1] = x[2] * y[0] - x[0] * y[2];
    out[2] = x[0] * y[1] - x[1] * y[0];
    return;
  }
  for (int c = 0; c < g; ++c) out[c] = 0.0;
  for (int a = 0; a < g; ++a) {
    if (x[a] == 0.0) continue;
    for (int b = 0; b < g; ++b) {
      const double xy = x[a] * y[b];
      if (xy == 0.0) continue;
      const double* f = &f_[(a * g + b) * g];
      for (int c = 0; c < g; ++c) out[c] += xy * f[c];
    }
  }
}

const Mat& su2_basis(int k) { return LieAlgebra::get(2).basis(k); }

AlgebraElement basis_element(int n, int a) { return unchecked_algebra(LieAlgebra::get(n).basis(a)); }

AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  check_same(x.n(), y.n());
  const Mat& a = x.matrix();
  const Mat& b = y.matrix();
  return unchecked_algebra(Mat(a * b - b * a));
}

double inner(const AlgebraElement& x, const AlgebraElement& y, const InnerProductSpec& spec) {
  check_same(x.n(), y.n());
  return -spec.kappa * (x.matrix().cwiseProduct(y.matrix().transpose())).sum().real();
}

Mat exp_matrix(const Mat& x) {
  const long n = x.rows();
  if (n == 2) {
    // x^2 = -(|x|_F^2 / 2) I
    const double th = std::sqrt(0.5) * x.norm();
    const double c = std::cos(th);
    const double s = th < 1e-8 ? 1.0 - th * th / 6.0 : std::sin(th) / th;
    Mat r = s * x;
    r(0, 0) += c;
    r(1, 1) += c;
    return r;
  }
  const Complex I(0.0, 1.0);
  Mat h = I * x;
  h = 0.5 * (h + h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Mat d = Mat::Zero(n, n);
  for (long k = 0; k < n; ++k) d(k, k) = std::exp(-I * es.eigenvalues()[k]);
  return es.eigenvectors() * d * es.eigenvectors().adjoint();
}

Mat log_matrix(const Mat& u) {
  const long n = u.rows();
  if (n == 2) {
    if ((u + Mat::Identity(2, 2)).norm() <= 1e-6)
      throw Error(ErrorKind::CutLocus, "logarithm at the cut locus (U = -I)");
    const double c = 0.5 * u.trace().real();
    Mat y = 0.5 * (u - u.adjoint());
    const Complex tr = 0.5 * y.trace();
    y(0, 0) -= tr;
    y(1, 1) -= tr;
    const double s = std::sqrt(0.5) * y.norm();
    const double phi = std::atan2(s, c);
    const double f = s < 1e-12 ? 1.0 / c : phi / s;
    return f * y;
  }
  Eigen::ComplexSchur<Mat> schur(u);
  const Mat& t = schur.matrixT();
  const Complex I(0.0, 1.0);
  Mat d = Mat::Zero(n, n);
  double sum = 0.0;
  for (long k = 0; k < n; ++k) {
    if (std::abs(t(k, k) + 1.0) <= 1e-6) throw Error(ErrorKind::CutLocus, "logarithm at the cut locus (eigenvalue -1)");
    const double a = std::arg(t(k, k));
    sum += a;
    d(k, k) = I * a;
  }
  if (std::abs(sum) > 1e-8) throw Error(ErrorKind::CutLocus, "principal logarithm is not traceless");
  Mat l = schur.matrixU() * d * schur.matrixU().adjoint();
  l = 0.5 * (l - l.adjoint()).eval();
  const Complex tr = l.trace() / static_cast<double>(n);
  for (long k = 0; k < n; ++k) l(k, k) -= tr;
  return l;
}

GroupElement exp_map(const AlgebraElement& x) { return unchecked_group(exp_matrix(x.matrix())); }

AlgebraElement log_map(const GroupElement& u) { return unchecked_algebra(log_matrix(u.matrix())); }

AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& x) {
  check_same(g.n(), x.n());
  return unchecked_algebra(Mat(g.matrix() * x.matrix() * g.matrix().adjoint()));
}

void dexpinv(int n, const double* sigma, const double* x, double* out) {
  const LieAlgebra& L = LieAlgebra::get(n);
  const int g = L.dim();
  double t1[kMaxAlgebraDim], t2[kMaxAlgebraDim], t3[kMaxAlgebraDim], t4[kMaxAlgebraDim];
  L.bracket(sigma, x, t1);
  L.bracket(sigma, t1, t2);
  L.bracket(sigma, t2, t3);
  L.bracket(sigma, t3, t4);
  for (int a = 0; a < g; ++a) out[a] = x[a] - 0.5 * t1[a] + t2[a] / 12.0 - t4[a] / 720.0;
}

}  // namespace gaugelab
