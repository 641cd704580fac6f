#pragma once
// Eigenvalue-sum operators on symmetric matrices and their inf-sup
// representations over rank-k projection controls. Two families:
//
//   SumExtremes(k1, k2): sum of the k1 smallest plus the k2 largest
//     eigenvalues; minimizer plays rank-k1 projections, maximizer rank-k2,
//     diffusion matrix alpha + beta.
//
//   MiddleSum(k, j): sum of eigenvalues k+1 .. k+j (ascending); minimizer
//     plays rank-(k+j) projections, maximizer rank-j, diffusion matrix
//     beta * alpha * beta.

#include <utility>
#include <vector>

#include "hessgame/linalg.hpp"

namespace hg::ops {

enum class OperatorKind { SumExtremes, MiddleSum };

class OperatorSpec {
 public:
  static OperatorSpec sum_extremes(int dim, int k1, int k2);
  // MiddleSum evaluation is defined for any 0 < k < k+j < d, but the game
  // machinery needs k + 2j > d (control ranges forced to intersect);
  // constructing a spec with k + 2j <= d requires degenerate_ok.
  static OperatorSpec middle_sum(int dim, int k, int j, bool degenerate_ok = false);

  OperatorKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int k1() const { return k1_; }
  int k2() const { return k2_; }
  int k() const { return k_; }
  int j() const { return j_; }
  bool degenerate_ok() const { return degenerate_ok_; }

  // Control ranks: maximizer (alpha) and minimizer (beta).
  int alpha_rank() const;
  int beta_rank() const;

 private:
  OperatorSpec() = default;

  OperatorKind kind_ = OperatorKind::SumExtremes;
  int dim_ = 0;
  int k1_ = 0, k2_ = 0;  // SumExtremes
  int k_ = 0, j_ = 0;    // MiddleSum
  bool degenerate_ok_ = false;
};

struct ControlPair {
  linalg::Projection alpha;
  linalg::Projection beta;
};

double sum_smallest(const linalg::SymMatrix& gamma, int k);
double sum_largest(const linalg::SymMatrix& gamma, int k);

// Sum of eigenvalues k+1 .. k+j in ascending order. Unlike OperatorSpec,
// accepts k + j == d (the full-dimension edge case reduces the inf player
// to the identity).
double middle_sum(const linalg::SymMatrix& gamma, int k, int j);

double operator_eval(const OperatorSpec& spec, const linalg::SymMatrix& gamma);

// The spectral saddle pair: projections onto eigenvector blocks of gamma.
// tr over the returned pair reproduces operator_eval within 1e-9.
ControlPair optimal_controls(const OperatorSpec& spec, const linalg::SymMatrix& gamma);

// Diffusion matrix a assembled from a control pair: alpha + beta for
// SumExtremes, beta * alpha * beta for MiddleSum.
linalg::SymMatrix diffusion_matrix(const OperatorSpec& spec, const ControlPair& pair);

// tr(a(pair) * gamma), the payoff of one control pair against gamma.
double pair_trace_form(const OperatorSpec& spec, const ControlPair& pair,
                       const linalg::SymMatrix& gamma);

// Throws RankError/DimError when the pair's ranks or dims do not match the spec.
void validate_pair(const OperatorSpec& spec, const ControlPair& pair);

// One-sided saddle certificate against the spectral pair using n_samples
// Haar draws per side. Returns (beta_gap, alpha_gap):
//   beta_gap  = min over sampled beta of (best alpha response) - H, >= -1e-9
//               when the representation holds (no beta pushes below H);
//   alpha_gap = max over sampled alpha of value against spectral beta - H,
//               <= 1e-9 (no alpha beats H once beta is spectral).
// For MiddleSum the alpha samples live inside the range of the spectral
// beta, which is where optimal play is attained.
std::pair<double, double> saddle_gap(const OperatorSpec& spec,
                                     const linalg::SymMatrix& gamma, int n_samples,
                                     RandomStream& rng);

// |H(q' gamma q) - H(gamma)|; throws NotOrthogonalError when q fails the
// 1e-10 orthogonality tolerance.
double check_orthogonal_invariance(const OperatorSpec& spec,
                                   const linalg::SymMatrix& gamma,
                                   const Eigen::MatrixXd& q);

// Finite control sets for discrete inf-sup consumers: spectral candidates
// from supplied matrices, coordinate-frame projections, and Haar samples.
struct FiniteControlSet {
  std::vector<linalg::Projection> alphas;
  std::vector<linalg::Projection> betas;
};

FiniteControlSet make_control_set(const OperatorSpec& spec,
                                  const std::vector<linalg::SymMatrix>& hessian_seeds,
                                  int n_haar, RandomStream& rng);

// Extends `set` with the spectral candidates of the given matrices,
// skipping near-duplicates (max-norm tolerance `dedup_tol`).
void add_spectral_candidates(const OperatorSpec& spec,
                             const std::vector<linalg::SymMatrix>& hessian_seeds,
                             FiniteControlSet& set, double dedup_tol = 1e-6);

}  // namespace hg::ops
