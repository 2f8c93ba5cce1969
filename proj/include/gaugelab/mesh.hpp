#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gaugelab/algebra.hpp"

namespace gaugelab {

enum class AxisBlock { S, Sigma, I };

const char* to_string(AxisBlock b);
AxisBlock axis_block_from_string(const std::string& s);

struct GridSpec {
  std::vector<int> dims;        // vertices (= cells) per periodic axis
  std::vector<double> spacing;  // h_i
  std::vector<AxisBlock> blocks;

  void validate() const;  // throws Precondition
  bool operator==(const GridSpec& o) const = default;
};

// Periodic cubical grid. A k-cell is a pair (axis set K, base vertex v), spanning
// v + sum_{i in K} [0, 1] e_i. Axis sets of each degree are kept in lexicographic order.
class Grid {
 public:
  explicit Grid(GridSpec spec);
  static std::shared_ptr<const Grid> make(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return static_cast<int>(spec_.dims.size()); }
  long vertices() const { return nv_; }
  int length(int axis) const { return spec_.dims[axis]; }
  double spacing(int axis) const { return spec_.spacing[axis]; }
  AxisBlock block(int axis) const { return spec_.blocks[axis]; }
  std::vector<int> axes_of(AxisBlock b) const;

  int num_combos(int k) const { return static_cast<int>(combos_[k].size()); }
  const std::vector<int>& combo(int k, int c) const { return combos_[k][c]; }
  unsigned combo_mask(int k, int c) const { return masks_[k][c]; }
  int combo_index(unsigned mask) const { return index_of_mask_[mask]; }
  long cells(int k) const { return num_combos(k) * nv_; }

  long step(long v, int axis) const { return fwd_[axis][v]; }
  long step_back(long v, int axis) const { return bwd_[axis][v]; }
  long offset(long v, int axis, int delta) const;
  void coords(long v, int* out) const;
  long index(const int* x) const;  // coordinates taken modulo the axis lengths

  bool same(const Grid& o) const { return spec_ == o.spec_; }

 private:
  GridSpec spec_;
  long nv_ = 1;
  std::vector<long> stride_;
  std::vector<std::vector<std::vector<int>>> combos_;
  std::vector<std::vector<unsigned>> masks_;
  std::vector<int> index_of_mask_;
  std::vector<std::vector<long>> fwd_, bwd_;
};

using GridPtr = std::shared_ptr<const Grid>;

// sign of the permutation (a..., b...) of the union of two disjoint sorted axis sets
int shuffle_sign(const std::vector<int>& a, const std::vector<int>& b);

// Degree-k field with one su(n) value per k-cell, stored as real coordinates in the
// basis e_a. Values are integrated over their cell and live in the fiber of the base vertex.
class Cochain {
 public:
  Cochain() = default;
  Cochain(GridPtr grid, int degree, int n);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int degree() const { return degree_; }
  int n() const { return n_; }
  int gdim() const { return g_; }
  long cells() const { return cells_; }
  long cell(int combo, long v) const { return combo * grid_->vertices() + v; }

  double* at(long cell) { return data_.data() + cell * g_; }
  const double* at(long cell) const { return data_.data() + cell * g_; }
  AlgebraElement value(long cell) const;
  void set(long cell, const AlgebraElement& x);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void check_compatible(const Cochain& o) const;  // throws Dimension
  Cochain zeros_like() const { return Cochain(grid_, degree_, n_); }

  Cochain& operator+=(const Cochain& o);
  Cochain& operator-=(const Cochain& o);
  Cochain& operator*=(double s);
  Cochain& axpy(double s, const Cochain& o);
  Cochain operator+(const Cochain& o) const { Cochain r(*this); return r += o; }
  Cochain operator-(const Cochain& o) const { Cochain r(*this); return r -= o; }
  Cochain operator*(double s) const { Cochain r(*this); return r *= s; }

  double max_abs() const;

 private:
  GridPtr grid_;
  int degree_ = 0;
  int n_ = 2;
  int g_ = 3;
  long cells_ = 0;
  std::vector<double> data_;
};

// Diagonal DEC metric. Physical axis lengths are l_i = h_i / eps on S axes and h_i otherwise;
// a k-cell with axis set K has weight prod_{j not in K} l_j / prod_{i in K} l_i.
struct MetricWeights {
  double epsilon = 1.0;
  InnerProductSpec ip;
  std::vector<double> lengths;
  std::vector<std::vector<double>> w;  // [k][combo]

  double weight(int k, int combo) const { return w[k][combo]; }
  double volume(const Grid& g) const;
};

MetricWeights hodge_weights(const Grid& grid, double epsilon, InnerProductSpec ip = {});

Cochain coboundary(const Cochain& x);

// sum over cells of weight * <x, y>
double inner_product(const Cochain& x, const Cochain& y, const MetricWeights& w);
double norm(const Cochain& x, const MetricWeights& w);
// unweighted sum of <x, y> over cells
double pairing(const Cochain& x, const Cochain& y, const InnerProductSpec& ip = {});

// per-vertex Ad matrices for transporting a value at v + e_axis back to v
using EdgeTransport = std::vector<AdMat>;  // indexed like 1-cells

// [a ^ b] on faces, [a_i, b_j] - [a_j, b_i] with parallel-edge means. With a transport,
// the far edge is carried back to the base fiber before averaging.
Cochain wedge_bracket(const Cochain& a, const Cochain& b, const EdgeTransport* transport = nullptr);

// Zero-shift diagonal star: (*x)(v, K^c) = sign(K, K^c) prod_{K^c} l / prod_K l * x(v, K).
Cochain hodge_star(const Cochain& x, const MetricWeights& w);

// omega(mu, nu) = sum <mu_x, nu_y> - <mu_y, nu_x> on a 2D grid
double symplectic_form(const Cochain& mu, const Cochain& nu, const InnerProductSpec& ip = {});

}  // namespace gaugelab
