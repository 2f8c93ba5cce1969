#include "gaugelab/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace gaugelab {

const char* to_string(AxisBlock b) {
  switch (b) {
    case AxisBlock::S: return "S";
    case AxisBlock::Sigma: return "Sigma";
    case AxisBlock::I: return "I";
  }
  return "?";
}

AxisBlock axis_block_from_string(const std::string& s) {
  if (s == "S") return AxisBlock::S;
  if (s == "Sigma" || s == "sigma") return AxisBlock::Sigma;
  if (s == "I") return AxisBlock::I;
  throw Error(ErrorKind::Config, "unknown axis tag '" + s + "'");
}

void GridSpec::validate() const {
  const size_t d = dims.size();
  if (d < 1 || d > 4) throw Error(ErrorKind::Precondition, "grid dimension must be 1..4");
  if (spacing.size() != d || blocks.size() != d)
    throw Error(ErrorKind::Precondition, "dims, spacing and axis tags must have equal length");
  for (size_t i = 0; i < d; ++i) {
    if (dims[i] < 2) throw Error(ErrorKind::Precondition, "axis length must be >= 2");
    if (!(spacing[i] > 0.0)) throw Error(ErrorKind::Precondition, "spacing must be positive");
  }
  if (std::count(blocks.begin(), blocks.end(), AxisBlock::Sigma) > 2)
    throw Error(ErrorKind::Precondition, "at most two Sigma axes");
}

Grid::Grid(GridSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int d = dim();
  stride_.assign(d, 1);
  for (int a = d - 1; a >= 0; --a) {
    stride_[a] = nv_;
    nv_ *= spec_.dims[a];
  }
  combos_.assign(d + 1, {});
  masks_.assign(d + 1, {});
  index_of_mask_.assign(1u << d, -1);
  // lexicographic axis subsets per degree
  for (unsigned m = 0; m < (1u << d); ++m) {
    std::vector<int> axes;
    for (int a = 0; a < d; ++a)
      if (m & (1u << a)) axes.push_back(a);
    combos_[axes.size()].push_back(axes);
  }
  for (int k = 0; k <= d; ++k) {
    std::sort(combos_[k].begin(), combos_[k].end());
    for (size_t c = 0; c < combos_[k].size(); ++c) {
      unsigned m = 0;
      for (int a : combos_[k][c]) m |= 1u << a;
      masks_[k].push_back(m);
      index_of_mask_[m] = static_cast<int>(c);
    }
  }
  fwd_.assign(d, std::vector<long>(nv_));
  bwd_.assign(d, std::vector<long>(nv_));
  std::vector<int> x(d);
  for (long v = 0; v < nv_; ++v) {
    coords(v, x.data());
    for (int a = 0; a < d; ++a) {
      const int L = spec_.dims[a];
      const long base = v - x[a] * stride_[a];
      fwd_[a][v] = base + ((x[a] + 1) % L) * stride_[a];
      bwd_[a][v] = base + ((x[a] + L - 1) % L) * stride_[a];
    }
  }
}

std::shared_ptr<const Grid> Grid::make(GridSpec spec) { return std::make_shared<const Grid>(std::move(spec)); }

std::vector<int> Grid::axes_of(AxisBlock b) const {
  std::vector<int> r;
  for (int a = 0; a < dim(); ++a)
    if (spec_.blocks[a] == b) r.push_back(a);
  return r;
}

long Grid::offset(long v, int axis, int delta) const {
  while (delta > 0) { v = fwd_[axis][v]; --delta; }
  while (delta < 0) { v = bwd_[axis][v]; ++delta; }
  return v;
}

void Grid::coords(long v, int* out) const {
  for (int a = 0; a < dim(); ++a) {
    out[a] = static_cast<int>(v / stride_[a]);
    v -= out[a] * stride_[a];
  }
}

long Grid::index(const int* x) const {
  long v = 0;
  for (int a = 0; a < dim(); ++a) {
    const int L = spec_.dims[a];
    v += ((x[a] % L + L) % L) * stride_[a];
  }
  return v;
}

int shuffle_sign(const std::vector<int>& a, const std::vector<int>& b) {
  int inv = 0;
  for (int x : a)
    for (int y : b)
      if (x > y) ++inv;
  return (inv % 2) ? -1 : 1;
}

Cochain::Cochain(GridPtr grid, int degree, int n) : grid_(std::move(grid)), degree_(degree), n_(n) {
  if (!grid_) throw Error(ErrorKind::Dimension, "cochain without grid");
  if (degree < 0 || degree > grid_->dim()) throw Error(ErrorKind::Dimension, "degree exceeds grid dimension");
  g_ = LieAlgebra::get(n).dim();
  cells_ = grid_->cells(degree);
  data_.assign(static_cast<size_t>(cells_) * g_, 0.0);
}

AlgebraElement Cochain::value(long cell) const {
  return unchecked_algebra(LieAlgebra::get(n_).matrix(at(cell)));
}

void Cochain::set(long cell, const AlgebraElement& x) {
  if (x.n() != n_) throw Error(ErrorKind::Dimension, "rank mismatch");
  LieAlgebra::get(n_).coords(x.matrix(), at(cell));
}

void Cochain::check_compatible(const Cochain& o) const {
  if (degree_ != o.degree_ || n_ != o.n_ || !grid_ || !o.grid_ || !grid_->same(*o.grid_))
    throw Error(ErrorKind::Dimension, "cochains differ in degree, rank or grid");
}

Cochain& Cochain::operator+=(const Cochain& o) { return axpy(1.0, o); }
Cochain& Cochain::operator-=(const Cochain& o) { return axpy(-1.0, o); }

Cochain& Cochain::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Cochain& Cochain::axpy(double s, const Cochain& o) {
  check_compatible(o);
  const size_t m = data_.size();
  for (size_t i = 0; i < m; ++i) data_[i] += s * o.data_[i];
  return *this;
}

double Cochain::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double MetricWeights::volume(const Grid& g) const {
  return w[0][0] * static_cast<double>(g.vertices());
}

MetricWeights hodge_weights(const Grid& grid, double epsilon, InnerProductSpec ip) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Precondition, "epsilon must be positive");
  if (!(ip.kappa > 0.0)) throw Error(ErrorKind::Precondition, "kappa must be positive");
  MetricWeights m;
  m.epsilon = epsilon;
  m.ip = ip;
  const int d = grid.dim();
  for (int a = 0; a < d; ++a)
    m.lengths.push_back(grid.block(a) == AxisBlock::S ? grid.spacing(a) / epsilon : grid.spacing(a));
  m.w.assign(d + 1, {});
  for (int k = 0; k <= d; ++k) {
    for (int c = 0; c < grid.num_combos(k); ++c) {
      const unsigned mask = grid.combo_mask(k, c);
      double w = 1.0;
      for (int a = 0; a < d; ++a) w = (mask & (1u << a)) ? w / m.lengths[a] : w * m.lengths[a];
      m.w[k].push_back(w);
    }
  }
  return m;
}

Cochain coboundary(const Cochain& x) {
  const Grid& g = x.grid();
  const int k = x.degree();
  if (k >= g.dim()) throw Error(ErrorKind::Dimension, "coboundary of a top-degree cochain");
  Cochain r(x.grid_ptr(), k + 1, x.n());
  const int gd = x.gdim();
  const long nv = g.vertices();
  for (int c = 0; c < g.num_combos(k + 1); ++c) {
    const auto& axes = g.combo(k + 1, c);
    const unsigned mask = g.combo_mask(k + 1, c);
    for (size_t l = 0; l < axes.size(); ++l) {
      const int m = axes[l];
      const int face = g.combo_index(mask & ~(1u << m));
      const double sgn = (l % 2) ? -1.0 : 1.0;
      for (long v = 0; v < nv; ++v) {
        double* out = r.at(r.cell(c, v));
        const double* far = x.at(x.cell(face, g.step(v, m)));
        const double* near = x.at(x.cell(face, v));
        for (int a = 0; a < gd; ++a) out[a] += sgn * (far[a] - near[a]);
      }
    }
  }
  return r;
}

double inner_product(const Cochain& x, const Cochain& y, const MetricWeights& w) {
  x.check_compatible(y);
  const Grid& g = x.grid();
  const int k = x.degree();
  const long nv = g.vertices();
  const int gd = x.gdim();
  double total = 0.0;
  for (int c = 0; c < g.num_combos(k); ++c) {
    double s = 0.0;
    const double* a = x.at(x.cell(c, 0));
    const double* b = y.at(y.cell(c, 0));
    const long m = nv * gd;
    for (long i = 0; i < m; ++i) s += a[i] * b[i];
    total += w.weight(k, c) * s;
  }
  return 0.5 * w.ip.kappa * total;
}

double norm(const Cochain& x, const MetricWeights& w) { return std::sqrt(std::max(0.0, inner_product(x, x, w))); }

double pairing(const Cochain& x, const Cochain& y, const InnerProductSpec& ip) {
  x.check_compatible(y);
  double s = 0.0;
  for (size_t i = 0; i < x.data().size(); ++i) s += x.data()[i] * y.data()[i];
  return 0.5 * ip.kappa * s;
}

Cochain wedge_bracket(const Cochain& a, const Cochain& b, const EdgeTransport* transport) {
  a.check_compatible(b);
  if (a.degree() != 1) throw Error(ErrorKind::Dimension, "wedge_bracket takes 1-cochains");
  const Grid& g = a.grid();
  const LieAlgebra& L = LieAlgebra::get(a.n());
  const int gd = a.gdim();
  const long nv = g.vertices();
  Cochain r(a.grid_ptr(), 2, a.n());
  Coords ai(gd), aj(gd), bi(gd), bj(gd), t(gd), u(gd), tmp(gd);
  auto mean = [&](const Cochain& x, int axis, int across, long v, Coords& out) {
    const long w = g.step(v, across);
    Eigen::Map<const Eigen::VectorXd> near(x.at(x.cell(axis, v)), gd), far(x.at(x.cell(axis, w)), gd);
    if (transport)
      out = 0.5 * (near + (*transport)[across * nv + v] * far);
    else
      out = 0.5 * (near + far);
  };
  for (int c = 0; c < g.num_combos(2); ++c) {
    const int i = g.combo(2, c)[0];
    const int j = g.combo(2, c)[1];
    for (long v = 0; v < nv; ++v) {
      mean(a, i, j, v, ai);
      mean(a, j, i, v, aj);
      mean(b, i, j, v, bi);
      mean(b, j, i, v, bj);
      L.bracket(ai.data(), bj.data(), t.data());
      L.bracket(aj.data(), bi.data(), u.data());
      double* out = r.at(r.cell(c, v));
      for (int q = 0; q < gd; ++q) out[q] = t[q] - u[q];
    }
  }
  return r;
}

Cochain hodge_star(const Cochain& x, const MetricWeights& w) {
  const Grid& g = x.grid();
  const int d = g.dim();
  const int k = x.degree();
  Cochain r(x.grid_ptr(), d - k, x.n());
  const long block = g.vertices() * x.gdim();
  for (int c = 0; c < g.num_combos(k); ++c) {
    const unsigned mask = g.combo_mask(k, c);
    const unsigned comp = ((1u << d) - 1) & ~mask;
    const int cc = g.combo_index(comp);
    double f = shuffle_sign(g.combo(k, c), g.combo(d - k, cc));
    for (int a = 0; a < d; ++a) f = (mask & (1u << a)) ? f / w.lengths[a] : f * w.lengths[a];
    const double* src = x.at(x.cell(c, 0));
    double* dst = r.at(r.cell(cc, 0));
    for (long i = 0; i < block; ++i) dst[i] = f * src[i];
  }
  return r;
}

double symplectic_form(const Cochain& mu, const Cochain& nu, const InnerProductSpec& ip) {
  mu.check_compatible(nu);
  if (mu.degree() != 1 || mu.grid().dim() != 2) throw Error(ErrorKind::Dimension, "symplectic form needs 1-cochains on a 2D grid");
  const long nv = mu.grid().vertices();
  const long m = nv * mu.gdim();
  const double* mx = mu.at(0);
  const double* my = mu.at(nv);
  const double* nx = nu.at(0);
  const double* ny = nu.at(nv);
  double s = 0.0;
  for (long i = 0; i < m; ++i) s += mx[i] * ny[i] - my[i] * nx[i];
  return 0.5 * ip.kappa * s;
}

}  // namespace gaugelab
