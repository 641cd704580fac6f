#include "hessgame/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <utility>

#include "hessgame/errors.hpp"
#include "hessgame/rng.hpp"

namespace hg::solver {

namespace {

constexpr double kInteriorPsi = 1e-12;
constexpr long kMaxNodes = 40L * 1000 * 1000;

// One diffusion atom: fixed second-difference directions with coefficients.
// The discrete generator contribution of the atom at u is
//   sum_cols c2 * (second difference of u along e at arclength steps s+, s-).
struct Plan {
  struct Col {
    Eigen::VectorXd e;  // unit direction
    double cnorm = 0.0; // original sigma-column norm
    double c2 = 0.0;    // coefficient on the directional second derivative
    int axis = -1;      // lattice axis when e is coordinate-aligned
  };
  std::vector<Col> cols;
  double cmax = 0.0;  // max column norm, controls the foot reach
};

Plan plan_from_columns(const Eigen::MatrixXd& sigma, double weight_scale) {
  Plan plan;
  for (int j = 0; j < sigma.cols(); ++j) {
    const double c = sigma.col(j).norm();
    if (c * c <= 1e-18) continue;
    Plan::Col col;
    col.e = sigma.col(j) / c;
    col.cnorm = c;
    col.c2 = weight_scale * c * c;
    int nonzero = -1;
    bool aligned = true;
    for (int i = 0; i < sigma.rows(); ++i) {
      if (std::abs(col.e[i]) > 1e-9) {
        if (nonzero >= 0) { aligned = false; break; }
        nonzero = i;
      }
    }
    col.axis = (aligned && nonzero >= 0) ? nonzero : -1;
    plan.cmax = std::max(plan.cmax, c);
    plan.cols.push_back(std::move(col));
  }
  return plan;
}

Plan plan_from_projection(const linalg::Projection& p) {
  // tr(P D2u) = sum_i q_i' D2u q_i over an orthonormal frame of range(P).
  return plan_from_columns(p.frame(), 1.0);
}

Plan plan_from_pair(const ops::OperatorSpec& spec, const ops::ControlPair& pair) {
  const linalg::SymMatrix a = ops::diffusion_matrix(spec, pair);
  const linalg::SymMatrix root = linalg::psd_sqrt(linalg::SymMatrix(2.0 * a.mat()));
  return plan_from_columns(root.mat(), 0.5);
}

Plan delta_plan(int dim, double delta) {
  Plan plan;
  if (delta <= 0.0) return plan;
  for (int i = 0; i < dim; ++i) {
    Plan::Col col;
    col.e = Eigen::VectorXd::Zero(dim);
    col.e[i] = 1.0;
    col.cnorm = 1.0;
    col.c2 = 0.5 * delta * delta;
    col.axis = i;
    plan.cols.push_back(std::move(col));
  }
  plan.cmax = 1.0;
  return plan;
}

struct Scratch {
  Eigen::VectorXd yp, ym, bp;
};

// Resolved stencil foot on one side of the node.
struct Side {
  enum Kind { Node, Interp, Boundary } kind = Node;
  long flat = 0;       // Kind::Node
  double s = 0.0;      // arclength to the foot
  double data = 0.0;   // boundary value, Kind::Boundary
};

// Emits the second difference of one column as weighted taps. tap(flat, w)
// accumulates lattice dependencies, data(w * g_b) accumulates fixed
// boundary contributions from clipped feet.
template <typename TapFn, typename DataFn>
void column_terms(const Grid& grid, const Eigen::VectorXd& x, long flat, double t,
                  const Plan::Col& col, Scratch& scr, TapFn&& tap, DataFn&& data) {
  const auto& dom = grid.domain();
  const auto& gfield = grid.boundary_field();
  const double h = grid.h();

  int m = 0;
  double s_nom;
  if (col.axis >= 0) {
    m = std::max(1L, std::lround(t * col.cnorm / h));
    s_nom = m * h;
  } else {
    s_nom = t * col.cnorm;
  }

  Side sides[2];
  const double s_floor = 1e-8 * h;
  for (int k = 0; k < 2; ++k) {
    const double sgn = k == 0 ? 1.0 : -1.0;
    Eigen::VectorXd& y = k == 0 ? scr.yp : scr.ym;
    y = x + (sgn * s_nom) * col.e;
    Side& side = sides[k];
    if (dom.psi(y) >= 0.0) {
      side.s = s_nom;
      if (col.axis >= 0) {
        side.kind = Side::Node;
        int steps = (k == 0) ? m : -m;
        if (col.e[col.axis] < 0.0) steps = -steps;
        side.flat = grid.shift(flat, col.axis, steps);
      } else {
        side.kind = Side::Interp;
      }
    } else {
      // Foot crossed the boundary: shorten it to the exact crossing and use
      // the boundary datum there (first order at the boundary, exact on
      // quadratics).
      scr.bp = sgn * col.e;
      const double s = std::max(dom.boundary_crossing(x, scr.bp), s_floor);
      scr.bp = x + s * scr.bp;
      side.kind = Side::Boundary;
      side.s = s;
      side.data = gfield.value(scr.bp);
    }
  }

  const double sp = sides[0].s, sm = sides[1].s;
  const double wp = 2.0 * col.c2 / (sp * (sp + sm));
  const double wm = 2.0 * col.c2 / (sm * (sp + sm));
  const double wc = -2.0 * col.c2 / (sp * sm);
  tap(flat, wc);
  for (int k = 0; k < 2; ++k) {
    const Side& side = sides[k];
    const double w = k == 0 ? wp : wm;
    switch (side.kind) {
      case Side::Node:
        tap(side.flat, w);
        break;
      case Side::Interp:
        grid.for_each_weight(k == 0 ? scr.yp : scr.ym,
                             [&](long f, double iw) { tap(f, w * iw); });
        break;
      case Side::Boundary:
        data(w * side.data);
        break;
    }
  }
}

double foot_step(double h, double t_global, double psi, double gnorm, double cmax) {
  double t = t_global;
  if (gnorm * cmax > 0.0) t = std::min(t, psi / (gnorm * cmax + 1e-300));
  return std::max(t, h);
}

double plan_value(const Grid& grid, const Eigen::VectorXd& values, const Eigen::VectorXd& x,
                  long flat, double t, const Plan& plan, Scratch& scr) {
  double acc = 0.0;
  for (const auto& col : plan.cols) {
    column_terms(
        grid, x, flat, t, col, scr,
        [&](long f, double w) { acc += w * values[f]; },
        [&](double v) { acc += v; });
  }
  return acc;
}

struct NodeCtx {
  long flat = 0;
  double psi = 0.0;
  double gnorm = 0.0;
  double fval = 0.0;
  Eigen::VectorXd x;
};

struct PlanCache {
  // Separable (eigenvalue-sum extremes): per-projection atoms, an argmax
  // over alphas plus an argmin over betas. Otherwise per-pair atoms indexed
  // a * n_beta + b, with alpha conjugated into the range of beta first: the
  // inner maximizer only ranges over subspaces of the minimizer's plane, so
  // a raw alpha candidate is used through its image under beta. Combos whose
  // image collapses (alpha nearly orthogonal to the plane) are skipped.
  bool separable = true;
  std::vector<Plan> alphas;
  std::vector<Plan> betas;
  std::vector<Plan> pairs;
  std::vector<char> pair_ok;
  int n_alpha = 0;
  int n_beta = 0;

  void build(const ops::OperatorSpec& spec, const ops::FiniteControlSet& sets) {
    separable = spec.kind() == ops::OperatorKind::SumExtremes;
    n_alpha = static_cast<int>(sets.alphas.size());
    n_beta = static_cast<int>(sets.betas.size());
    alphas.clear();
    betas.clear();
    pairs.clear();
    pair_ok.clear();
    if (separable) {
      alphas.reserve(sets.alphas.size());
      betas.reserve(sets.betas.size());
      for (const auto& a : sets.alphas) alphas.push_back(plan_from_projection(a));
      for (const auto& b : sets.betas) betas.push_back(plan_from_projection(b));
      return;
    }
    pairs.resize(sets.alphas.size() * sets.betas.size());
    pair_ok.assign(pairs.size(), 0);
    const int rank = spec.alpha_rank();
    std::vector<Eigen::VectorXd> cols(rank);
    for (std::size_t ai = 0; ai < sets.alphas.size(); ++ai) {
      const Eigen::MatrixXd& vframe = sets.alphas[ai].frame();
      for (std::size_t bi = 0; bi < sets.betas.size(); ++bi) {
        const auto& beta = sets.betas[bi];
        for (int c = 0; c < rank; ++c) cols[c] = beta.mat() * vframe.col(c);
        try {
          const linalg::Projection inside = linalg::projection_from_frame(cols);
          pairs[ai * sets.betas.size() + bi] =
              plan_from_pair(spec, ops::ControlPair{inside, beta});
          pair_ok[ai * sets.betas.size() + bi] = 1;
        } catch (const DegenerateFrameError&) {
          // alpha has no usable image inside this beta; leave the combo out.
        }
      }
    }
  }
};

struct Improvement {
  double max_res = 0.0;
  long argmax_flat = -1;
};

// One policy-improvement sweep: picks the discrete saddle controls per node
// against the current values and records the Isaacs residual.
Improvement improve(const Grid& grid, const std::vector<NodeCtx>& nodes,
                    const Eigen::VectorXd& values, const PlanCache& cache,
                    const Plan& dplan, double t_global, std::vector<int>& pol_a,
                    std::vector<int>& pol_b, Scratch& scr, bool freeze_beta = false) {
  Improvement out;
  const double h = grid.h();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeCtx& nc = nodes[i];
    const double dval =
        dplan.cols.empty() ? 0.0 : plan_value(grid, values, nc.x, nc.flat, h, dplan, scr);
    double res;
    if (cache.separable) {
      double best_a = -std::numeric_limits<double>::infinity();
      double best_b = std::numeric_limits<double>::infinity();
      int ia = 0, ib = 0;
      for (int a = 0; a < cache.n_alpha; ++a) {
        const Plan& plan = cache.alphas[a];
        const double t = foot_step(h, t_global, nc.psi, nc.gnorm, plan.cmax);
        const double v = plan_value(grid, values, nc.x, nc.flat, t, plan, scr);
        if (v > best_a) { best_a = v; ia = a; }
      }
      const int b_lo = freeze_beta ? pol_b[i] : 0;
      const int b_hi = freeze_beta ? pol_b[i] + 1 : cache.n_beta;
      for (int b = b_lo; b < b_hi; ++b) {
        const Plan& plan = cache.betas[b];
        const double t = foot_step(h, t_global, nc.psi, nc.gnorm, plan.cmax);
        const double v = plan_value(grid, values, nc.x, nc.flat, t, plan, scr);
        if (v < best_b) { best_b = v; ib = b; }
      }
      pol_a[i] = ia;
      pol_b[i] = ib;
      res = best_a + best_b + dval + nc.fval;
    } else {
      double outer = std::numeric_limits<double>::infinity();
      int best_pair_a = -1, best_pair_b = -1;
      const int b_lo = freeze_beta ? pol_b[i] : 0;
      const int b_hi = freeze_beta ? pol_b[i] + 1 : cache.n_beta;
      for (int b = b_lo; b < b_hi; ++b) {
        double inner = -std::numeric_limits<double>::infinity();
        int inner_a = -1;
        for (int a = 0; a < cache.n_alpha; ++a) {
          if (!cache.pair_ok[static_cast<std::size_t>(a) * cache.n_beta + b]) continue;
          const Plan& plan = cache.pairs[static_cast<std::size_t>(a) * cache.n_beta + b];
          const double t = foot_step(h, t_global, nc.psi, nc.gnorm,
                                     plan.cmax > 0.0 ? plan.cmax : 1.0);
          const double v = plan_value(grid, values, nc.x, nc.flat, t, plan, scr);
          if (v > inner) { inner = v; inner_a = a; }
        }
        if (inner_a >= 0 && inner < outer) { outer = inner; best_pair_a = inner_a; best_pair_b = b; }
      }
      if (best_pair_a < 0) throw Error("every control pair degenerated, configuration bug");
      pol_a[i] = best_pair_a;
      pol_b[i] = best_pair_b;
      res = outer + dval + nc.fval;
    }
    const double mag = std::abs(res);
    if (!std::isfinite(mag)) throw NonFiniteError("policy improvement produced a non-finite residual");
    if (mag > out.max_res) {
      out.max_res = mag;
      out.argmax_flat = nc.flat;
    }
  }
  return out;
}

struct LinearSystem {
  // Row-compressed frozen-policy operator over interior nodes; column
  // indices are lattice flats so ghost data participates directly.
  std::vector<long> start;
  std::vector<long> cols;
  std::vector<double> wts;
  std::vector<double> diag;
  std::vector<double> rhs;
  long degenerate = 0;
};

void assemble(const Grid& grid, const std::vector<NodeCtx>& nodes,
              const Eigen::VectorXd& values, const PlanCache& cache, const Plan& dplan,
              double t_global, const std::vector<int>& pol_a, const std::vector<int>& pol_b,
              Scratch& scr, LinearSystem& sys) {
  const double h = grid.h();
  const std::size_t n = nodes.size();
  sys.start.assign(n + 1, 0);
  sys.cols.clear();
  sys.wts.clear();
  sys.diag.assign(n, 0.0);
  sys.rhs.assign(n, 0.0);
  sys.degenerate = 0;

  std::vector<std::pair<long, double>> row;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeCtx& nc = nodes[i];
    row.clear();
    double rhs_data = 0.0;
    auto tap = [&](long f, double w) { row.emplace_back(f, w); };
    auto data = [&](double v) { rhs_data += v; };

    auto emit_plan = [&](const Plan& plan, double t) {
      for (const auto& col : plan.cols) column_terms(grid, nc.x, nc.flat, t, col, scr, tap, data);
    };
    if (cache.separable) {
      const Plan& pa = cache.alphas[pol_a[i]];
      const Plan& pb = cache.betas[pol_b[i]];
      emit_plan(pa, foot_step(h, t_global, nc.psi, nc.gnorm, pa.cmax));
      emit_plan(pb, foot_step(h, t_global, nc.psi, nc.gnorm, pb.cmax));
    } else {
      const Plan& pp = cache.pairs[static_cast<std::size_t>(pol_a[i]) * cache.n_beta + pol_b[i]];
      emit_plan(pp, foot_step(h, t_global, nc.psi, nc.gnorm, pp.cmax > 0.0 ? pp.cmax : 1.0));
    }
    if (!dplan.cols.empty()) emit_plan(dplan, h);

    std::sort(row.begin(), row.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    double d = 0.0;
    double wscale = 0.0;
    for (const auto& e : row) wscale = std::max(wscale, std::abs(e.second));
    for (std::size_t k = 0; k < row.size();) {
      long f = row[k].first;
      double w = 0.0;
      while (k < row.size() && row[k].first == f) w += row[k++].second;
      if (f == nc.flat) {
        d += w;
      } else if (w != 0.0) {
        // Neighbor weights are sums of nonnegative interpolation weights;
        // a materially negative one indicates a configuration bug.
        if (w < -1e-12 * wscale)
          throw Error("non-monotone stencil weight, configuration bug");
        sys.cols.push_back(f);
        sys.wts.push_back(w);
      }
    }
    if (std::abs(d) < 1e-300) {
      // Fully degenerate diffusion at this node (possible for middle-sum
      // pairs with disjoint ranges and delta = 0): freeze the value.
      sys.cols.resize(sys.start[i]);
      sys.wts.resize(sys.start[i]);
      sys.diag[i] = -1.0;
      sys.rhs[i] = -values[nc.flat];
      ++sys.degenerate;
    } else {
      if (d > 0.0) throw Error("stencil diagonal must be negative, configuration bug");
      sys.diag[i] = d;
      sys.rhs[i] = -nc.fval - rhs_data;
    }
    sys.start[i + 1] = static_cast<long>(sys.cols.size());
  }
}

// Relaxed Gauss-Seidel on the frozen system; returns the final residual in
// the same units as the policy-iteration check (no diagonal scaling, since
// clipped boundary feet make some diagonals hundreds of times larger than
// interior ones and a scaled stop would leave those rows under-solved).
// Relaxation backs off toward 1 if the residual grows.
double gauss_seidel(const std::vector<NodeCtx>& nodes, const LinearSystem& sys,
                    Eigen::VectorXd& values, double tol, int max_sweeps, double relax) {
  const std::size_t n = nodes.size();
  double omega = relax;
  double last_check = std::numeric_limits<double>::infinity();
  double res = last_check;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (long k = sys.start[i]; k < sys.start[i + 1]; ++k)
        sum += sys.wts[k] * values[sys.cols[k]];
      const double gs = (sys.rhs[i] - sum) / sys.diag[i];
      const long f = nodes[i].flat;
      values[f] += omega * (gs - values[f]);
    }
    if (sweep % 8 == 0 || sweep == max_sweeps) {
      res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (long k = sys.start[i]; k < sys.start[i + 1]; ++k)
          sum += sys.wts[k] * values[sys.cols[k]];
        const double r = std::abs(sys.rhs[i] - sum - sys.diag[i] * values[nodes[i].flat]);
        res = std::max(res, r);
      }
      if (!std::isfinite(res)) throw NonFiniteError("linear sweep diverged to non-finite values");
      if (res <= tol) return res;
      if (res > 1.02 * last_check && omega > 1.0) omega = 1.0 + 0.5 * (omega - 1.0);
      last_check = res;
    }
  }
  return res;
}

// Spectral control candidates harvested from lattice second differences of
// the current iterate, at a deterministic subsample of interior nodes.
std::vector<linalg::SymMatrix> hessian_seeds(const Grid& grid,
                                             const std::vector<NodeCtx>& nodes,
                                             const Eigen::VectorXd& values, int max_seeds) {
  std::vector<linalg::SymMatrix> seeds;
  if (max_seeds <= 0) return seeds;
  const int d = grid.dim();
  const double h = grid.h();
  const std::size_t stride = std::max<std::size_t>(1, nodes.size() / max_seeds);
  Eigen::MatrixXd hess(d, d);
  for (std::size_t i = 0; i < nodes.size(); i += stride) {
    const NodeCtx& nc = nodes[i];
    if (nc.psi < 3.0 * h * std::max(nc.gnorm, 1.0)) continue;
    const long f = nc.flat;
    const double u0 = values[f];
    for (int a = 0; a < d; ++a) {
      hess(a, a) =
          (values[grid.shift(f, a, 1)] - 2.0 * u0 + values[grid.shift(f, a, -1)]) / (h * h);
      for (int b = a + 1; b < d; ++b) {
        const double upp = values[grid.shift(grid.shift(f, a, 1), b, 1)];
        const double umm = values[grid.shift(grid.shift(f, a, -1), b, -1)];
        const double upm = values[grid.shift(grid.shift(f, a, 1), b, -1)];
        const double ump = values[grid.shift(grid.shift(f, a, -1), b, 1)];
        hess(a, b) = hess(b, a) = (upp + umm - upm - ump) / (4.0 * h * h);
      }
    }
    if (!hess.allFinite()) continue;
    seeds.emplace_back(hess);
    if (static_cast<int>(seeds.size()) >= max_seeds) break;
  }
  return seeds;
}

std::vector<NodeCtx> collect_nodes(const Grid& grid, const fields::ScalarField& f) {
  if (f.dim() != grid.dim()) throw DimError("forcing term dimension does not match the grid");
  std::vector<NodeCtx> nodes;
  nodes.reserve(grid.interior_nodes().size());
  const auto& dom = grid.domain();
  for (long flat : grid.interior_nodes()) {
    NodeCtx nc;
    nc.flat = flat;
    nc.x = grid.point(flat);
    nc.psi = dom.psi(nc.x);
    nc.gnorm = dom.grad_psi(nc.x).norm();
    nc.fval = f.value(nc.x);
    nodes.push_back(std::move(nc));
  }
  return nodes;
}

}  // namespace

std::shared_ptr<const Grid> Grid::make(const domain::BarrierDomain& domain, double h,
                                       double margin, const fields::ScalarField& g) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be positive");
  if (!(margin >= 0.0)) throw ConfigError("ghost margin must be nonnegative");
  if (g.dim() != domain.dim())
    throw DimError("boundary data dimension does not match the domain");

  auto grid = std::shared_ptr<Grid>(new Grid());
  Grid& gr = *grid;
  gr.dim_ = domain.dim();
  gr.h_ = h;
  gr.domain_ = domain;
  gr.gfield_ = g;
  gr.lo_.resize(gr.dim_);
  gr.shape_.resize(gr.dim_);
  long total = 1;
  for (int i = 0; i < gr.dim_; ++i) {
    const long half = static_cast<long>(std::ceil((domain.semi_axes()[i] + margin) / h));
    gr.shape_[i] = static_cast<int>(2 * half + 1);
    gr.lo_[i] = -static_cast<double>(half) * h;
    total *= gr.shape_[i];
    if (total > kMaxNodes) throw ConfigError("grid too large; coarsen h or shrink the margin");
  }
  gr.total_ = total;
  gr.strides_.assign(gr.dim_, 1);
  for (int i = gr.dim_ - 2; i >= 0; --i) gr.strides_[i] = gr.strides_[i + 1] * gr.shape_[i + 1];

  gr.interior_.assign(total, 0);
  gr.boundary_data_.resize(total);
  std::vector<int> coords(gr.dim_, 0);
  Eigen::VectorXd x(gr.dim_);
  for (long flat = 0; flat < total; ++flat) {
    for (int i = 0; i < gr.dim_; ++i) x[i] = gr.lo_[i] + coords[i] * h;
    const double psi = domain.psi(x);
    if (psi > kInteriorPsi) {
      gr.interior_[flat] = 1;
      gr.interior_nodes_.push_back(flat);
    }
    gr.boundary_data_[flat] = g.value(domain.project_to_boundary(x));
    for (int i = gr.dim_ - 1; i >= 0; --i) {
      if (++coords[i] < gr.shape_[i]) break;
      coords[i] = 0;
    }
  }
  return grid;
}

Eigen::VectorXd Grid::point(long flat) const {
  Eigen::VectorXd x(dim_);
  for (int i = 0; i < dim_; ++i)
    x[i] = lo_[i] + static_cast<double>((flat / strides_[i]) % shape_[i]) * h_;
  return x;
}

long Grid::flat_index(const std::vector<int>& coords) const {
  if (static_cast<int>(coords.size()) != dim_) throw DimError("coordinate rank mismatch");
  long flat = 0;
  for (int i = 0; i < dim_; ++i) {
    if (coords[i] < 0 || coords[i] >= shape_[i]) throw OutOfGridError("lattice coordinate out of range");
    flat += strides_[i] * coords[i];
  }
  return flat;
}

void Grid::coords_of(long flat, std::vector<int>& coords) const {
  coords.resize(dim_);
  for (int i = 0; i < dim_; ++i) coords[i] = static_cast<int>((flat / strides_[i]) % shape_[i]);
}

double Grid::interpolate(const Eigen::VectorXd& nodal, const Eigen::VectorXd& y) const {
  double acc = 0.0;
  for_each_weight(y, [&](long f, double w) { acc += w * nodal[f]; });
  return acc;
}

bool Grid::inside_hull(const Eigen::VectorXd& y, double pad) const {
  for (int i = 0; i < dim_; ++i) {
    const double hi = lo_[i] + (shape_[i] - 1) * h_;
    if (y[i] < lo_[i] + pad - 1e-12 || y[i] > hi - pad + 1e-12) return false;
  }
  return true;
}

double ValueField::value_at(const Eigen::VectorXd& x) const {
  if (x.size() != grid->dim()) throw DimError("query point dimension mismatch");
  if (!grid->inside_hull(x, 0.0)) throw OutOfGridError("query point outside the lattice hull");
  return grid->interpolate(values, x);
}

Eigen::VectorXd ValueField::gradient_at(const Eigen::VectorXd& x) const {
  if (x.size() != grid->dim()) throw DimError("query point dimension mismatch");
  const double q = 0.5 * grid->h();
  Eigen::VectorXd g(grid->dim());
  Eigen::VectorXd y = x;
  for (int i = 0; i < grid->dim(); ++i) {
    y[i] = x[i] + q;
    const double up = grid->interpolate(values, y);
    y[i] = x[i] - q;
    const double um = grid->interpolate(values, y);
    y[i] = x[i];
    g[i] = (up - um) / (2.0 * q);
  }
  return g;
}

linalg::SymMatrix ValueField::hessian_fd(const Eigen::VectorXd& x, double step) const {
  if (x.size() != grid->dim()) throw DimError("query point dimension mismatch");
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  const int d = grid->dim();
  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd y = x;
  const double u0 = grid->interpolate(values, x);
  for (int i = 0; i < d; ++i) {
    y[i] = x[i] + step;
    const double up = grid->interpolate(values, y);
    y[i] = x[i] - step;
    const double um = grid->interpolate(values, y);
    y[i] = x[i];
    hess(i, i) = (up - 2.0 * u0 + um) / (step * step);
    for (int j = i + 1; j < d; ++j) {
      y[i] = x[i] + step; y[j] = x[j] + step;
      const double upp = grid->interpolate(values, y);
      y[j] = x[j] - step;
      const double upm = grid->interpolate(values, y);
      y[i] = x[i] - step;
      const double umm = grid->interpolate(values, y);
      y[j] = x[j] + step;
      const double ump = grid->interpolate(values, y);
      y[i] = x[i]; y[j] = x[j];
      hess(i, j) = hess(j, i) = (upp + umm - upm - ump) / (4.0 * step * step);
    }
  }
  return linalg::SymMatrix(hess);
}

double ghost_margin(const ops::OperatorSpec& spec, double h, double foot_scale) {
  const double t_global = std::sqrt(h * foot_scale);
  const double cmax = spec.kind() == ops::OperatorKind::SumExtremes ? 2.0 : std::sqrt(2.0);
  return t_global * cmax + 3.0 * h;
}

// Pair plans grow as the product of the two control counts for the
// non-separable family, so the random cloud stays small there; the
// coordinate subsets plus spectral refresh carry the saddle candidates.
int haar_budget(const ops::OperatorSpec& spec, const SolveOptions& opts) {
  if (spec.kind() == ops::OperatorKind::SumExtremes) return opts.haar_controls;
  return std::min(opts.haar_controls, 12);
}

double discretize_generator(const ops::OperatorSpec& spec, const ops::ControlPair& pair,
                            const ValueField& field, long node_flat, double delta,
                            double foot_scale) {
  const Grid& grid = *field.grid;
  if (!grid.is_interior(node_flat)) throw OutOfGridError("generator node must be interior");
  ops::validate_pair(spec, pair);
  const Plan plan = plan_from_pair(spec, pair);
  const Plan dplan_ = delta_plan(grid.dim(), delta);
  const Eigen::VectorXd x = grid.point(node_flat);
  const auto& dom = grid.domain();
  const double t_global = std::sqrt(grid.h() * foot_scale);
  const double t = foot_step(grid.h(), t_global, dom.psi(x), dom.grad_psi(x).norm(),
                             plan.cmax > 0.0 ? plan.cmax : 1.0);
  Scratch scr;
  double acc = plan_value(grid, field.values, x, node_flat, t, plan, scr);
  if (!dplan_.cols.empty())
    acc += plan_value(grid, field.values, x, node_flat, grid.h(), dplan_, scr);
  return acc;
}

ValueField policy_iteration(const ops::OperatorSpec& spec, std::shared_ptr<const Grid> grid,
                            const fields::ScalarField& f, double delta,
                            const ops::FiniteControlSet& control_sets,
                            const SolveOptions& opts, const Eigen::VectorXd* warm_start) {
  if (!grid) throw ConfigError("policy iteration requires a grid");
  if (spec.dim() != grid->dim()) throw DimError("operator dimension does not match the grid");
  if (control_sets.alphas.empty() || control_sets.betas.empty())
    throw ConfigError("control sets must be nonempty");
  if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");

  const Grid& gr = *grid;
  ValueField field;
  field.grid = grid;
  field.delta = delta;
  if (warm_start) {
    if (warm_start->size() != gr.node_count()) throw DimError("warm start size mismatch");
    field.values = *warm_start;
  } else {
    field.values = gr.boundary_data();
  }

  const std::vector<NodeCtx> nodes = collect_nodes(gr, f);
  const double t_global = std::sqrt(gr.h() * opts.foot_scale);
  const Plan dplan_ = delta_plan(gr.dim(), delta);

  const ops::FiniteControlSet base_sets = control_sets;
  ops::FiniteControlSet sets = base_sets;
  PlanCache cache;
  cache.build(spec, sets);
  // Pair plans grow quadratically for the non-separable family; keep the
  // refresh lean there.
  const int refresh_budget =
      cache.separable ? opts.refresh_max_seeds : std::min(opts.refresh_max_seeds, 16);

  std::vector<int> pol_a(nodes.size(), 0), pol_b(nodes.size(), 0);
  Scratch scr;
  LinearSystem sys;
  double damp = 1.0;
  int nondecrease = 0;
  double prev_res = std::numeric_limits<double>::infinity();

  const auto trace = [&](const char* tag, int it, const Improvement& imp) {
    if (!std::getenv("HG_TRACE")) return;
    Eigen::VectorXd ax = imp.argmax_flat >= 0 ? gr.point(imp.argmax_flat)
                                              : Eigen::VectorXd::Zero(gr.dim());
    std::fprintf(stderr, "[trace] %s %d res %.6e damp %.2f deg %ld argmax", tag, it,
                 imp.max_res, damp, sys.degenerate);
    for (int q = 0; q < ax.size(); ++q) std::fprintf(stderr, " %.3f", ax[q]);
    std::fprintf(stderr, "\n");
  };
  const auto refresh_sets = [&](const Improvement&) {
    sets = base_sets;
    ops::add_spectral_candidates(spec, hessian_seeds(gr, nodes, field.values, refresh_budget),
                                 sets, 1e-4);
    cache.build(spec, sets);
  };

  if (!cache.separable) {
    // Simultaneous policy updates for both players cycle (the minimizer and
    // maximizer chase each other through the same linear solves), so the
    // minimizer only moves in an outer loop wrapped around a fully solved
    // maximizer problem with its policy frozen.
    for (int outer = 1; outer <= opts.max_iter; ++outer) {
      const Improvement imp =
          improve(gr, nodes, field.values, cache, dplan_, t_global, pol_a, pol_b, scr);
      field.residual = imp.max_res;
      field.iterations = outer;
      trace("outer", outer, imp);
      if (imp.max_res <= opts.tol) {
        field.converged = true;
        break;
      }
      const double inner_tol = std::max(0.1 * opts.tol, std::min(0.05 * imp.max_res, 0.1));
      for (int inner = 0; inner < 40; ++inner) {
        assemble(gr, nodes, field.values, cache, dplan_, t_global, pol_a, pol_b, scr, sys);
        field.degenerate_nodes = sys.degenerate;
        gauss_seidel(nodes, sys, field.values, opts.tol / 10.0, opts.max_linear_sweeps,
                     opts.relax);
        const Improvement ia = improve(gr, nodes, field.values, cache, dplan_, t_global, pol_a,
                                       pol_b, scr, /*freeze_beta=*/true);
        trace("  inner", inner, ia);
        if (ia.max_res <= inner_tol) break;
      }
      if (outer < opts.max_iter) refresh_sets(imp);
    }
    return field;
  }

  for (int it = 1; it <= opts.max_iter; ++it) {
    const Improvement imp =
        improve(gr, nodes, field.values, cache, dplan_, t_global, pol_a, pol_b, scr);
    field.residual = imp.max_res;
    field.iterations = it;
    trace("it", it, imp);
    if (imp.max_res <= opts.tol) {
      field.converged = true;
      break;
    }
    if (imp.max_res >= prev_res - 1e-15) {
      if (++nondecrease >= 2) damp = 0.5;
    } else {
      nondecrease = 0;
    }
    prev_res = imp.max_res;

    assemble(gr, nodes, field.values, cache, dplan_, t_global, pol_a, pol_b, scr, sys);
    field.degenerate_nodes = sys.degenerate;
    if (damp < 1.0) {
      Eigen::VectorXd before = field.values;
      gauss_seidel(nodes, sys, field.values, opts.tol / 10.0, opts.max_linear_sweeps, opts.relax);
      for (const auto& nc : nodes)
        field.values[nc.flat] = before[nc.flat] + damp * (field.values[nc.flat] - before[nc.flat]);
    } else {
      gauss_seidel(nodes, sys, field.values, opts.tol / 10.0, opts.max_linear_sweeps, opts.relax);
    }

    if (it < opts.max_iter) {
      sets = base_sets;
      ops::add_spectral_candidates(spec, hessian_seeds(gr, nodes, field.values, refresh_budget),
                                   sets, 1e-4);
      cache.build(spec, sets);
    }
  }
  return field;
}

ValueField solve_dirichlet(const ops::OperatorSpec& spec, const domain::BarrierDomain& domain,
                           const fields::ScalarField& f, const fields::ScalarField& g,
                           double h, double delta, const SolveOptions& opts) {
  auto grid = Grid::make(domain, h, ghost_margin(spec, h, opts.foot_scale), g);
  RandomStream rng(opts.seed);
  const ops::FiniteControlSet sets = ops::make_control_set(spec, {}, haar_budget(spec, opts), rng);
  return policy_iteration(spec, grid, f, delta, sets, opts);
}

ContinuationResult delta_continuation(const ops::OperatorSpec& spec,
                                      const domain::BarrierDomain& domain,
                                      const fields::ScalarField& f,
                                      const fields::ScalarField& g, double h,
                                      const std::vector<double>& deltas,
                                      const SolveOptions& opts) {
  if (deltas.empty()) throw ConfigError("delta continuation needs at least one delta");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0)) throw ConfigError("deltas must be nonnegative");
    if (i + 1 < deltas.size() && deltas[i + 1] > deltas[i])
      throw ConfigError("deltas must be non-increasing");
  }
  auto grid = Grid::make(domain, h, ghost_margin(spec, h, opts.foot_scale), g);
  RandomStream rng(opts.seed);
  const ops::FiniteControlSet sets = ops::make_control_set(spec, {}, haar_budget(spec, opts), rng);

  ContinuationResult out;
  const Eigen::VectorXd* warm = nullptr;
  for (double d : deltas) {
    ValueField fld = policy_iteration(spec, grid, f, d, sets, opts, warm);
    out.fields.push_back(std::move(fld));
    warm = &out.fields.back().values;
  }
  const ValueField& last = out.fields.back();
  for (const ValueField& fld : out.fields) {
    double gap = 0.0;
    for (long flat : grid->interior_nodes())
      gap = std::max(gap, std::abs(fld.values[flat] - last.values[flat]));
    out.gaps.push_back(gap);
  }
  return out;
}

ResidualReport residual_report(const ops::OperatorSpec& spec, const ValueField& field,
                               const fields::ScalarField& f,
                               const ops::FiniteControlSet& control_sets) {
  if (!field.grid) throw ConfigError("residual report requires a solved field");
  if (control_sets.alphas.empty() || control_sets.betas.empty())
    throw ConfigError("control sets must be nonempty");
  const Grid& gr = *field.grid;
  const std::vector<NodeCtx> nodes = collect_nodes(gr, f);
  PlanCache cache;
  cache.build(spec, control_sets);
  const Plan dplan_ = delta_plan(gr.dim(), field.delta);
  std::vector<int> pa(nodes.size(), 0), pb(nodes.size(), 0);
  Scratch scr;
  const Improvement imp =
      improve(gr, nodes, field.values, cache, dplan_, std::sqrt(gr.h()), pa, pb, scr);
  ResidualReport rep;
  rep.max_residual = imp.max_res;
  rep.argmax_node = imp.argmax_flat >= 0 ? gr.point(imp.argmax_flat)
                                         : Eigen::VectorXd::Zero(gr.dim());
  return rep;
}

void write_field_csv(const ValueField& field, std::ostream& os) {
  const Grid& gr = *field.grid;
  for (int i = 0; i < gr.dim(); ++i) os << "x" << i + 1 << ",";
  os << "value\n";
  char buf[64];
  for (long flat : gr.interior_nodes()) {
    const Eigen::VectorXd x = gr.point(flat);
    for (int i = 0; i < gr.dim(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      os << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", field.values[flat]);
    os << buf << "\n";
  }
}

void write_field_diagnostics(const ValueField& field, std::ostream& os) {
  const Grid& gr = *field.grid;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (long flat : gr.interior_nodes()) {
    vmin = std::min(vmin, field.values[flat]);
    vmax = std::max(vmax, field.values[flat]);
  }
  os << "{\n"
     << "  \"dim\": " << gr.dim() << ",\n"
     << "  \"h\": " << gr.h() << ",\n"
     << "  \"nodes\": " << gr.node_count() << ",\n"
     << "  \"interior\": " << gr.interior_count() << ",\n"
     << "  \"delta\": " << field.delta << ",\n"
     << "  \"iterations\": " << field.iterations << ",\n"
     << "  \"residual\": " << field.residual << ",\n"
     << "  \"converged\": " << (field.converged ? "true" : "false") << ",\n"
     << "  \"degenerate_nodes\": " << field.degenerate_nodes << ",\n"
     << "  \"value_min\": " << vmin << ",\n"
     << "  \"value_max\": " << vmax << "\n"
     << "}\n";
}

}  // namespace hg::solver
