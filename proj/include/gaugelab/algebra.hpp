#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "gaugelab/error.hpp"

namespace gaugelab {

using Complex = std::complex<double>;

inline constexpr int kMaxRank = 4;
inline constexpr int kMaxAlgebraDim = kMaxRank * kMaxRank - 1;

// n x n complex matrix with n <= 4, stored inline
using Mat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRank, kMaxRank>;
// real coordinates in the basis e_a, and real (n^2-1)-square matrices acting on them
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAlgebraDim, 1>;
using AdMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAlgebraDim, kMaxAlgebraDim>;

struct InnerProductSpec {
  double kappa = 1.0;
};

class AlgebraElement {
 public:
  AlgebraElement() = default;
  explicit AlgebraElement(int n) : m_(Mat::Zero(n, n)) {}
  // throws Dimension if m is not square, n > kMaxRank, or not anti-Hermitian traceless
  explicit AlgebraElement(const Mat& m);

  static AlgebraElement zero(int n) { return AlgebraElement(n); }

  int n() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }

  AlgebraElement operator+(const AlgebraElement& o) const;
  AlgebraElement operator-(const AlgebraElement& o) const;
  AlgebraElement operator-() const;
  AlgebraElement operator*(double s) const;
  AlgebraElement& operator+=(const AlgebraElement& o);

  double frobenius() const { return m_.norm(); }

 private:
  struct Unchecked {};
  AlgebraElement(const Mat& m, Unchecked) : m_(m) {}
  friend AlgebraElement unchecked_algebra(const Mat& m);

  Mat m_;
};

class GroupElement {
 public:
  GroupElement() = default;
  explicit GroupElement(const Mat& m);  // throws if not special unitary

  static GroupElement identity(int n);

  int n() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }

  GroupElement operator*(const GroupElement& o) const;
  GroupElement inverse() const;

 private:
  struct Unchecked {};
  GroupElement(const Mat& m, Unchecked) : m_(m) {}
  friend GroupElement unchecked_group(const Mat& m);

  Mat m_;
};

// skip validation; for hot loops where the result is known to be in the algebra/group
AlgebraElement unchecked_algebra(const Mat& m);
GroupElement unchecked_group(const Mat& m);

// Orthogonal basis e_a of su(n) with -tr(e_a e_b) = delta_ab / 2.
// n = 2: e_k = -(i/2) sigma_k, so [e_1, e_2] = e_3.
class LieAlgebra {
 public:
  static const LieAlgebra& get(int n);

  int n() const { return n_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const Mat& basis(int a) const { return basis_[a]; }
  // structure constants [e_a, e_b] = f(a,b,c) e_c
  double structure(int a, int b, int c) const { return f_[(a * dim() + b) * dim() + c]; }

  Coords coords(const Mat& x) const;
  Mat matrix(const Coords& c) const;
  Mat matrix(const double* c) const;
  void coords(const Mat& x, double* out) const;

  // Ad(g) as a matrix on coordinates; orthogonal
  AdMat adjoint_matrix(const Mat& g) const;
  // [x, y] on coordinates
  void bracket(const double* x, const double* y, double* out) const;

 private:
  explicit LieAlgebra(int n);
  int n_;
  std::vector<Mat> basis_;
  std::vector<double> f_;
};

const Mat& su2_basis(int k);  // k = 0, 1, 2

AlgebraElement basis_element(int n, int a);

AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y);
double inner(const AlgebraElement& x, const AlgebraElement& y, const InnerProductSpec& spec = {});

GroupElement exp_map(const AlgebraElement& x);
AlgebraElement log_map(const GroupElement& u);

AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& x);

// raw matrix versions used by the lattice kernels
Mat exp_matrix(const Mat& x);
// throws CutLocus near -I (n = 2) or when the principal logarithm leaves su(n)
Mat log_matrix(const Mat& u);

// inverse of the derivative of exp, truncated after the ad^4 term, on coordinates
void dexpinv(int n, const double* sigma, const double* x, double* out);

}  // namespace gaugelab
