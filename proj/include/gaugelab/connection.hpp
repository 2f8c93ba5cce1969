#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "gaugelab/mesh.hpp"

namespace gaugelab {

struct Flux {
  int axis_a = 0;
  int axis_b = 1;
  int value = 1;  // element of Z_n
};

struct TwistSpec {
  int n = 2;
  std::vector<Flux> fluxes;
};

// Clock/shift pair with Omega_a Omega_b Omega_a^-1 Omega_b^-1 = exp(2 pi i value / n) I.
// n = 2, value 1: Omega_1 = -i sigma_1, Omega_2 = -i sigma_2.
std::pair<GroupElement, GroupElement> twist_matrices(int n, int value);

struct ReferenceTransport {
  GridPtr grid;
  int n = 2;
  TwistSpec twist;
  std::vector<Mat> links;        // per 1-cell
  std::vector<Complex> center;   // per 2-cell, plaquette holonomy = center * I
  EdgeTransport ad;              // Ad(U0) per 1-cell
};

using ReferencePtr = std::shared_ptr<const ReferenceTransport>;

ReferencePtr build_twisted_reference(const TwistSpec& spec, GridPtr grid);
// validates that every plaquette is central
ReferencePtr reference_from_links(GridPtr grid, int n, std::vector<Mat> links, TwistSpec twist = {});

struct LinkField {
  GridPtr grid;
  int n = 2;
  std::vector<Mat> U;  // per 1-cell, transport from head to tail fiber
};

class Connection {
 public:
  Connection() = default;
  Connection(ReferencePtr ref, Cochain a, MetricWeights weights);

  const ReferencePtr& ref() const { return ref_; }
  const Cochain& a() const { return a_; }
  const MetricWeights& weights() const { return w_; }
  const Grid& grid() const { return *ref_->grid; }
  const GridPtr& grid_ptr() const { return ref_->grid; }
  int n() const { return ref_->n; }

  Connection with_deviation(Cochain a) const { return Connection(ref_, std::move(a), w_); }
  Connection with_weights(MetricWeights w) const { return Connection(ref_, a_, std::move(w)); }

 private:
  ReferencePtr ref_;
  Cochain a_;
  MetricWeights w_;
};

Connection flat_connection(ReferencePtr ref, const MetricWeights& w);

LinkField links(const Connection& c);
// deviation re-extracted by log(U U0^-1); throws CutLocus with the edge index
Connection from_links(const ReferencePtr& ref, const LinkField& U, const MetricWeights& w);
EdgeTransport edge_adjoint(const LinkField& U);

Cochain curvature(const Connection& c);
Cochain curvature(const ReferenceTransport& ref, const LinkField& U);
Cochain curvature_algebraic(const Connection& c);
// d_{alpha0} v + [a ^ v], the linear part of curvature_algebraic at a
Cochain algebraic_covariant_d(const Connection& c, const Cochain& v);

Cochain covariant_d(const Connection& c, const Cochain& x);
Cochain covariant_d(const EdgeTransport& ad, const Cochain& x);
Cochain covariant_d_adjoint(const Connection& c, const Cochain& y);
Cochain covariant_d_adjoint(const EdgeTransport& ad, const MetricWeights& w, const Cochain& y);

using GaugeField = std::vector<Mat>;  // one group element per vertex

Connection gauge_transform(const Connection& c, const GaugeField& u);
LinkField gauge_transform(const LinkField& U, const GaugeField& u);
// x(v, K) -> Ad(u(v)^-1) x(v, K)
Cochain gauge_act(const GaugeField& u, const Cochain& x);
GaugeField gauge_exp(const Cochain& xi);

// path steps are (axis, +1 | -1)
using LoopPath = std::vector<std::pair<int, int>>;
Complex wilson_loop(const LinkField& U, long start, const LoopPath& path);

// right-trivialized link velocity field and generic RKMK stepping on links
using LinkVectorField = std::function<Cochain(const LinkField&)>;
struct ButcherTableau {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> b_low;  // empty for non-embedded schemes
  int order = 4;
};
const ButcherTableau& rk4_tableau();
const ButcherTableau& dormand_prince_tableau();
// one step; if err is non-null and the tableau is embedded, receives the per-edge max error
LinkField rkmk_step(const LinkField& U, double dt, const LinkVectorField& f, const ButcherTableau& tab,
                    double* err = nullptr);
LinkField left_multiply_exp(const LinkField& U, const Cochain& sigma);

// imaginary gauge direction on a surface: *d_alpha zeta realized as -d_alpha^*(star zeta)
Cochain imaginary_gauge_direction(const Connection& c, const Cochain& zeta);
Connection complex_gauge_flow(const Connection& c, const Cochain& zeta, double tau, int steps);

double chern_simons(const Connection& c);
// sum over faces sign <F_ij, F_kl> at the same base vertex (the star pairing <F, *F>)
double star_pairing(const Cochain& F, const InnerProductSpec& ip);
// clover pairing: sum over sites of sign <F_ij, F_kl> with site-centred transported averages
double clover_pairing(const Connection& c);
// per-site contribution to clover_pairing
std::vector<double> clover_density(const Connection& c);
double topological_charge(const Connection& c, const InnerProductSpec& ip);

struct SliceDecomposition {
  GridPtr grid;
  GridPtr sigma_grid;
  GridPtr base_grid;
  std::vector<int> base_axes;
  std::vector<int> sigma_axes;
  ReferencePtr ref;
  ReferencePtr sigma_ref;
  MetricWeights weights;
  std::vector<Cochain> alpha;                     // [x] Sigma 1-cochain
  std::vector<std::vector<Cochain>> phi;          // [m][x] base components (phi, psi, ...)
  std::vector<std::vector<Cochain>> beta;         // [m][x] mixed plaquettes, Sigma 1-cochain
  std::vector<Cochain> gamma;                     // [x] base plaquette of the first two base axes
  std::vector<std::vector<Cochain>> beta_centered;
  std::vector<Cochain> gamma_centered;

  long num_base() const { return base_grid->vertices(); }
  long full_vertex(long x, long y) const;  // base index, Sigma index -> vertex
};

SliceDecomposition slice_extract(const Connection& c);
Connection slice_assemble(const SliceDecomposition& s);
Connection slice_connection(const SliceDecomposition& s, long x);

}  // namespace gaugelab
