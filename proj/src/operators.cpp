#include "hessgame/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hg::ops {

using linalg::EigenPair;
using linalg::Projection;
using linalg::SymMatrix;

namespace {

Projection frame_slice(const Eigen::MatrixXd& vectors, int first, int count) {
  std::vector<Eigen::VectorXd> cols;
  cols.reserve(count);
  for (int i = 0; i < count; ++i) cols.push_back(vectors.col(first + i));
  return linalg::projection_from_frame(cols);
}

// Sum of the j largest eigenvalues of the compression of gamma onto the
// range of beta (an m x m problem, m = rank(beta)).
double compressed_sum_largest(const Projection& beta, const SymMatrix& gamma, int j) {
  const Eigen::MatrixXd& u = beta.frame();
  const Eigen::MatrixXd comp = u.transpose() * gamma.mat() * u;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (comp + comp.transpose()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  double s = 0.0;
  for (int i = 0; i < j; ++i) s += lam[lam.size() - 1 - i];
  return s;
}

bool near_duplicate(const std::vector<Projection>& list, const Eigen::MatrixXd& p,
                    double tol) {
  for (const auto& q : list) {
    if (q.mat().rows() == p.rows() && linalg::max_abs_diff(q.mat(), p) <= tol) return true;
  }
  return false;
}

void push_unique(std::vector<Projection>& list, Projection p, double tol) {
  if (!near_duplicate(list, p.mat(), tol)) list.push_back(std::move(p));
}

}  // namespace

OperatorSpec OperatorSpec::sum_extremes(int dim, int k1, int k2) {
  if (dim < linalg::kMinDim || dim > linalg::kMaxDim)
    throw DimError("operator dimension outside [2, 8]");
  if (k1 < 1 || k1 > dim || k2 < 1 || k2 > dim)
    throw RankError("SumExtremes requires 1 <= k1, k2 <= d");
  OperatorSpec s;
  s.kind_ = OperatorKind::SumExtremes;
  s.dim_ = dim;
  s.k1_ = k1;
  s.k2_ = k2;
  return s;
}

OperatorSpec OperatorSpec::middle_sum(int dim, int k, int j, bool degenerate_ok) {
  if (dim < linalg::kMinDim || dim > linalg::kMaxDim)
    throw DimError("operator dimension outside [2, 8]");
  if (k < 1 || j < 1 || k + j >= dim)
    throw RankError("MiddleSum requires 0 < k < k+j < d");
  if (k + 2 * j <= dim && !degenerate_ok)
    throw RankError(
        "MiddleSum with k+2j <= d: control ranges can be disjoint, so the "
        "game machinery degenerates; pass degenerate_ok to evaluate anyway");
  OperatorSpec s;
  s.kind_ = OperatorKind::MiddleSum;
  s.dim_ = dim;
  s.k_ = k;
  s.j_ = j;
  s.degenerate_ok_ = degenerate_ok;
  return s;
}

int OperatorSpec::alpha_rank() const {
  return kind_ == OperatorKind::SumExtremes ? k2_ : j_;
}

int OperatorSpec::beta_rank() const {
  return kind_ == OperatorKind::SumExtremes ? k1_ : k_ + j_;
}

double sum_smallest(const SymMatrix& gamma, int k) {
  if (k < 1 || k > gamma.dim()) throw RankError("sum_smallest needs 1 <= k <= d");
  const EigenPair ep = linalg::eig_sym(gamma);
  return ep.values.head(k).sum();
}

double sum_largest(const SymMatrix& gamma, int k) {
  if (k < 1 || k > gamma.dim()) throw RankError("sum_largest needs 1 <= k <= d");
  const EigenPair ep = linalg::eig_sym(gamma);
  return ep.values.tail(k).sum();
}

double middle_sum(const SymMatrix& gamma, int k, int j) {
  if (k < 1 || j < 1 || k + j > gamma.dim())
    throw RankError("middle_sum needs k >= 1, j >= 1, k+j <= d");
  const EigenPair ep = linalg::eig_sym(gamma);
  return ep.values.segment(k, j).sum();
}

double operator_eval(const OperatorSpec& spec, const SymMatrix& gamma) {
  if (gamma.dim() != spec.dim()) throw DimError("operator/matrix dimension mismatch");
  if (spec.kind() == OperatorKind::SumExtremes)
    return sum_smallest(gamma, spec.k1()) + sum_largest(gamma, spec.k2());
  return middle_sum(gamma, spec.k(), spec.j());
}

ControlPair optimal_controls(const OperatorSpec& spec, const SymMatrix& gamma) {
  if (gamma.dim() != spec.dim()) throw DimError("operator/matrix dimension mismatch");
  const EigenPair ep = linalg::eig_sym(gamma);
  const int d = spec.dim();
  if (spec.kind() == OperatorKind::SumExtremes) {
    Projection beta = frame_slice(ep.vectors, 0, spec.k1());
    Projection alpha = frame_slice(ep.vectors, d - spec.k2(), spec.k2());
    return ControlPair{std::move(alpha), std::move(beta)};
  }
  // MiddleSum: beta spans the k+j lowest eigenvectors, alpha the j of them
  // with indices k+1 .. k+j; alpha's range sits inside beta's.
  Projection beta = frame_slice(ep.vectors, 0, spec.k() + spec.j());
  Projection alpha = frame_slice(ep.vectors, spec.k(), spec.j());
  return ControlPair{std::move(alpha), std::move(beta)};
}

SymMatrix diffusion_matrix(const OperatorSpec& spec, const ControlPair& pair) {
  validate_pair(spec, pair);
  if (spec.kind() == OperatorKind::SumExtremes)
    return SymMatrix(pair.alpha.mat() + pair.beta.mat());
  return SymMatrix(pair.beta.mat() * pair.alpha.mat() * pair.beta.mat());
}

double pair_trace_form(const OperatorSpec& spec, const ControlPair& pair,
                       const SymMatrix& gamma) {
  return (diffusion_matrix(spec, pair).mat() * gamma.mat()).trace();
}

void validate_pair(const OperatorSpec& spec, const ControlPair& pair) {
  if (pair.alpha.dim() != spec.dim() || pair.beta.dim() != spec.dim())
    throw DimError("control pair dimension mismatch");
  if (pair.alpha.rank() != spec.alpha_rank())
    throw RankError("alpha rank does not match the operator");
  if (pair.beta.rank() != spec.beta_rank())
    throw RankError("beta rank does not match the operator");
}

std::pair<double, double> saddle_gap(const OperatorSpec& spec, const SymMatrix& gamma,
                                     int n_samples, RandomStream& rng) {
  if (n_samples < 1) throw Error("saddle_gap needs n_samples >= 1");
  if (gamma.dim() != spec.dim()) throw DimError("operator/matrix dimension mismatch");
  const double h = operator_eval(spec, gamma);
  const ControlPair spectral = optimal_controls(spec, gamma);
  const int d = spec.dim();

  // Best alpha response to a fixed beta, exact over the full alpha set.
  const auto inner_sup = [&](const Projection& beta) {
    if (spec.kind() == OperatorKind::SumExtremes)
      return sum_largest(gamma, spec.k2()) + (beta.mat() * gamma.mat()).trace();
    return compressed_sum_largest(beta, gamma, spec.j());
  };

  double beta_gap = inner_sup(spectral.beta) - h;
  for (int s = 0; s < n_samples; ++s) {
    const Projection beta = linalg::haar_projection(d, spec.beta_rank(), rng);
    beta_gap = std::min(beta_gap, inner_sup(beta) - h);
  }

  // Alpha deviations against the spectral beta. For MiddleSum the draws are
  // conjugated into the range of beta: outside that range, beta annihilates
  // the deviation, making full-space draws uninformative.
  const auto value_against_spectral_beta = [&](const Projection& alpha) {
    return pair_trace_form(spec, ControlPair{alpha, spectral.beta}, gamma);
  };

  double alpha_gap = value_against_spectral_beta(spectral.alpha) - h;
  for (int s = 0; s < n_samples; ++s) {
    if (spec.kind() == OperatorKind::SumExtremes) {
      const Projection alpha = linalg::haar_projection(d, spec.alpha_rank(), rng);
      alpha_gap = std::max(alpha_gap, value_against_spectral_beta(alpha) - h);
    } else {
      const int m = spec.beta_rank();
      const Eigen::MatrixXd& u = spectral.beta.frame();
      const Projection small = linalg::haar_projection(m, spec.j(), rng);
      const Eigen::MatrixXd lifted = u * small.mat() * u.transpose();
      const double value = (spectral.beta.mat() * lifted * spectral.beta.mat() *
                            gamma.mat())
                               .trace();
      alpha_gap = std::max(alpha_gap, value - h);
    }
  }
  return {beta_gap, alpha_gap};
}

double check_orthogonal_invariance(const OperatorSpec& spec, const SymMatrix& gamma,
                                   const Eigen::MatrixXd& q) {
  if (!linalg::is_orthogonal(q, 1e-10))
    throw NotOrthogonalError("conjugating matrix fails the 1e-10 orthogonality check");
  const SymMatrix rotated(q.transpose() * gamma.mat() * q);
  return std::abs(operator_eval(spec, rotated) - operator_eval(spec, gamma));
}

FiniteControlSet make_control_set(const OperatorSpec& spec,
                                  const std::vector<SymMatrix>& hessian_seeds,
                                  int n_haar, RandomStream& rng) {
  FiniteControlSet set;
  add_spectral_candidates(spec, hessian_seeds, set);

  const int d = spec.dim();
  const auto coordinate_frames = [&](int rank, std::vector<Projection>& out) {
    // Every rank-sized subset of the coordinate axes, lexicographically.
    std::vector<int> pick(rank);
    for (int i = 0; i < rank; ++i) pick[i] = i;
    for (;;) {
      std::vector<Eigen::VectorXd> cols;
      for (int i = 0; i < rank; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e[pick[i]] = 1.0;
        cols.push_back(std::move(e));
      }
      push_unique(out, linalg::projection_from_frame(cols), 1e-9);
      int i = rank - 1;
      while (i >= 0 && pick[i] == d - rank + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int k = i + 1; k < rank; ++k) pick[k] = pick[k - 1] + 1;
    }
  };
  coordinate_frames(spec.alpha_rank(), set.alphas);
  coordinate_frames(spec.beta_rank(), set.betas);

  for (int s = 0; s < n_haar; ++s) {
    push_unique(set.alphas, linalg::haar_projection(d, spec.alpha_rank(), rng), 1e-9);
    push_unique(set.betas, linalg::haar_projection(d, spec.beta_rank(), rng), 1e-9);
  }
  return set;
}

void add_spectral_candidates(const OperatorSpec& spec,
                             const std::vector<SymMatrix>& hessian_seeds,
                             FiniteControlSet& set, double dedup_tol) {
  for (const auto& m : hessian_seeds) {
    if (m.dim() != spec.dim()) throw DimError("hessian seed dimension mismatch");
    const ControlPair pair = optimal_controls(spec, m);
    push_unique(set.alphas, pair.alpha, dedup_tol);
    push_unique(set.betas, pair.beta, dedup_tol);
  }
}

}  // namespace hg::ops
