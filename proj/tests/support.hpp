#pragma once

#include <random>

#include "gaugelab/connection.hpp"

namespace gaugelab::testing {

inline AlgebraElement random_algebra(std::mt19937_64& rng, int n = 2, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  const LieAlgebra& L = LieAlgebra::get(n);
  Coords c(L.dim());
  for (int a = 0; a < L.dim(); ++a) c[a] = nd(rng);
  return unchecked_algebra(L.matrix(c));
}

inline GroupElement random_group(std::mt19937_64& rng, int n = 2, double scale = 1.0) {
  return exp_map(random_algebra(rng, n, scale));
}

inline Cochain random_cochain(std::mt19937_64& rng, GridPtr g, int degree, int n = 2, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Cochain x(std::move(g), degree, n);
  for (double& v : x.data()) v = nd(rng);
  return x;
}

inline GaugeField random_gauge(std::mt19937_64& rng, const Grid& g, int n = 2, double scale = 1.0) {
  GaugeField u(g.vertices());
  for (auto& m : u) m = random_group(rng, n, scale).matrix();
  return u;
}

inline GridPtr torus(std::vector<int> dims, std::vector<AxisBlock> blocks = {}, std::vector<double> h = {}) {
  GridSpec s;
  s.dims = dims;
  s.spacing = h.empty() ? std::vector<double>(dims.size(), 1.0) : h;
  if (blocks.empty()) {
    blocks.assign(dims.size(), AxisBlock::S);
    for (size_t i = 0; i < std::min<size_t>(2, dims.size()); ++i) blocks[i] = AxisBlock::Sigma;
  }
  s.blocks = blocks;
  return Grid::make(s);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace gaugelab::testing
