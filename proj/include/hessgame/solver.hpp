#pragma once
// Monotone semi-Lagrangian finite-difference solver for the Dirichlet
// problem  inf_beta sup_alpha [ tr(a(alpha,beta) D^2 u) ] + f = 0 in D,
// u = g on the boundary, via Howard policy iteration over finite control
// sets. Second differences run along the columns of the diffusion factor;
// off-lattice feet are evaluated by multilinear interpolation, which keeps
// every neighbor weight nonnegative (monotone scheme).
//
// Foot length: interpolation of a foot at distance t costs O(h^2 M2 / t^2)
// while the second-difference truncation costs O(t^2 M4); t ~ sqrt(h)
// balances the two at O(h). Near the boundary t shrinks toward h so feet
// stay inside the ghost layer and boundary data enters at O(h). Feet along
// a coordinate axis snap to exact lattice steps and carry no interpolation
// error at all.

#include <memory>
#include <ostream>
#include <vector>

#include "hessgame/domain.hpp"
#include "hessgame/fields.hpp"
#include "hessgame/operators.hpp"

namespace hg::solver {

class Grid {
 public:
  // Cartesian lattice of spacing h covering the domain plus a ghost margin
  // wide enough for every stencil foot. Ghost nodes carry g evaluated at
  // their projection onto the boundary along the barrier gradient.
  static std::shared_ptr<const Grid> make(const domain::BarrierDomain& domain, double h,
                                          double margin, const fields::ScalarField& g);

  int dim() const { return dim_; }
  double h() const { return h_; }
  long node_count() const { return total_; }
  long interior_count() const { return static_cast<long>(interior_nodes_.size()); }
  const std::vector<long>& interior_nodes() const { return interior_nodes_; }
  bool is_interior(long flat) const { return interior_[flat] != 0; }

  Eigen::VectorXd point(long flat) const;
  long flat_index(const std::vector<int>& coords) const;
  void coords_of(long flat, std::vector<int>& coords) const;
  // Lattice neighbor `steps` nodes away along one axis; caller keeps the
  // result inside the box (guaranteed for feet, which the ghost margin covers).
  long shift(long flat, int axis, int steps) const { return flat + strides_[axis] * steps; }
  int extent(int axis) const { return shape_[axis]; }
  int axis_coord(long flat, int axis) const {
    return static_cast<int>((flat / strides_[axis]) % shape_[axis]);
  }

  // Initial values: ghost data everywhere (boundary values extended inward).
  const Eigen::VectorXd& boundary_data() const { return boundary_data_; }

  const domain::BarrierDomain& domain() const { return domain_; }
  // Boundary data as a field, needed when stencil feet are clipped to exact
  // boundary crossings between lattice nodes.
  const fields::ScalarField& boundary_field() const { return gfield_; }

  // Multilinear interpolation of nodal data at y; y is clamped to the
  // lattice hull (callers keep feet inside by construction).
  double interpolate(const Eigen::VectorXd& nodal, const Eigen::VectorXd& y) const;

  // Enumerates the interpolation weights of y: cb(flat_index, weight).
  template <typename F>
  void for_each_weight(const Eigen::VectorXd& y, F&& cb) const;

  bool inside_hull(const Eigen::VectorXd& y, double pad) const;

 private:
  Grid()
      : domain_(domain::BarrierDomain::unit_ball(2)),
        gfield_(fields::ScalarField::constant(2, 0.0)) {}

  int dim_ = 0;
  double h_ = 0.0;
  Eigen::VectorXd lo_;
  std::vector<int> shape_;
  std::vector<long> strides_;
  long total_ = 0;
  std::vector<std::uint8_t> interior_;
  std::vector<long> interior_nodes_;
  Eigen::VectorXd boundary_data_;
  domain::BarrierDomain domain_;
  fields::ScalarField gfield_;
};

struct ValueField {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd values;  // one entry per lattice node; ghosts fixed
  double residual = 0.0;
  int iterations = 0;
  double delta = 0.0;
  bool converged = false;
  long degenerate_nodes = 0;

  double value_at(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient_at(const Eigen::VectorXd& x) const;
  linalg::SymMatrix hessian_fd(const Eigen::VectorXd& x, double step) const;
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 60;
  int haar_controls = 64;
  std::uint64_t seed = 20240915;
  double foot_scale = 1.0;     // global foot length sqrt(h * foot_scale)
  int max_linear_sweeps = 20000;
  double relax = 1.6;          // SOR factor, halved toward 1 on divergence
  int refresh_max_seeds = 192; // nodal-Hessian spectral candidates per pass
};

// One evaluation of the discrete generator for a single control pair at an
// interior node, following the published stencil exactly: second
// differences along the columns of psd_sqrt(2 a(pair)) plus the delta-term
// discrete Laplacian. Used by consistency tests and diagnostics; the
// policy-iteration inner loop shares the same geometry per projection.
double discretize_generator(const ops::OperatorSpec& spec, const ops::ControlPair& pair,
                            const ValueField& field, long node_flat, double delta,
                            double foot_scale = 1.0);

// Howard iteration: freeze the per-node argmin/argmax controls, solve the
// frozen linear system with relaxed Gauss-Seidel sweeps to tol/10,
// re-optimize; control sets are refreshed every outer pass with spectral
// candidates harvested from the current iterate's nodal Hessians.
ValueField policy_iteration(const ops::OperatorSpec& spec,
                            std::shared_ptr<const Grid> grid,
                            const fields::ScalarField& f, double delta,
                            const ops::FiniteControlSet& control_sets,
                            const SolveOptions& opts,
                            const Eigen::VectorXd* warm_start = nullptr);

// Convenience wrapper: builds the grid (ghost margin sized from h and the
// operator), assembles default control sets, and solves.
ValueField solve_dirichlet(const ops::OperatorSpec& spec,
                           const domain::BarrierDomain& domain,
                           const fields::ScalarField& f, const fields::ScalarField& g,
                           double h, double delta, const SolveOptions& opts);

struct ContinuationResult {
  std::vector<ValueField> fields;
  std::vector<double> gaps;  // sup-norm distance to the last (smallest-delta) field
};

// Solves along a descending delta sequence, warm-starting each solve from
// the previous one.
ContinuationResult delta_continuation(const ops::OperatorSpec& spec,
                                      const domain::BarrierDomain& domain,
                                      const fields::ScalarField& f,
                                      const fields::ScalarField& g, double h,
                                      const std::vector<double>& deltas,
                                      const SolveOptions& opts);

struct ResidualReport {
  double max_residual = 0.0;
  Eigen::VectorXd argmax_node;
};

ResidualReport residual_report(const ops::OperatorSpec& spec, const ValueField& field,
                               const fields::ScalarField& f,
                               const ops::FiniteControlSet& control_sets);

// CSV (node coordinates, value) for interior nodes, plus a plain-text
// diagnostics block.
void write_field_csv(const ValueField& field, std::ostream& os);
void write_field_diagnostics(const ValueField& field, std::ostream& os);

// Ghost margin the grid needs for the widest stencil of this operator.
double ghost_margin(const ops::OperatorSpec& spec, double h, double foot_scale);

template <typename F>
void Grid::for_each_weight(const Eigen::VectorXd& y, F&& cb) const {
  // Clamp into the hull, then locate the cell and fan out the 2^d corners.
  int base[8];
  double frac[8];
  for (int i = 0; i < dim_; ++i) {
    double t = (y[i] - lo_[i]) / h_;
    if (t < 0.0) t = 0.0;
    if (t > shape_[i] - 1.0) t = shape_[i] - 1.0;
    int c = static_cast<int>(t);
    if (c > shape_[i] - 2) c = shape_[i] - 2;
    base[i] = c;
    frac[i] = t - c;
  }
  const int corners = 1 << dim_;
  for (int mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    long flat = 0;
    for (int i = 0; i < dim_; ++i) {
      const int bit = (mask >> i) & 1;
      w *= bit ? frac[i] : 1.0 - frac[i];
      flat += strides_[i] * (base[i] + bit);
    }
    if (w != 0.0) cb(flat, w);
  }
}

}  // namespace hg::solver
