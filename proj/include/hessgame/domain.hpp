#pragma once
// Barrier description of the domain and its region stratification. The
// domain is D = {psi > 0} for an analytic barrier psi that vanishes on the
// boundary with |grad psi| >= 1 there and a strictly negative-definite
// Hessian, so that tr(a * psi_xx) <= -1 holds for every admissible
// diffusion matrix (the geometry assumption checked below).

#include <optional>

#include "hessgame/operators.hpp"

namespace hg::domain {

enum class DomainKind { UnitBall, Ellipsoid };

class BarrierDomain {
 public:
  // psi(x) = (1 - |x|^2) / 2.
  static BarrierDomain unit_ball(int dim);
  // psi(x) = (a_max / 2) * (1 - sum (x_i / a_i)^2); the a_max scaling keeps
  // |grad psi| >= 1 on the boundary.
  static BarrierDomain ellipsoid(const Eigen::VectorXd& semi_axes);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Eigen::VectorXd& semi_axes() const { return semi_axes_; }

  double psi(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad_psi(const Eigen::VectorXd& x) const;
  // Constant for both supported kinds.
  const linalg::SymMatrix& hess_psi() const { return hess_; }
  // max over the closed domain, attained at the center.
  double sup_psi() const { return sup_psi_; }

  bool contains(const Eigen::VectorXd& x) const { return psi(x) > 0.0; }

  // Nearest point of {psi = 0} along the barrier gradient direction
  // through x (closed form: psi is quadratic along any line).
  Eigen::VectorXd project_to_boundary(const Eigen::VectorXd& x) const;

  // Smallest s >= 0 with psi(x + s * dir) = 0 for x in the closure; exact
  // quadratic root. Used to clip stencil feet and simulated paths to the
  // boundary.
  double boundary_crossing(const Eigen::VectorXd& x, const Eigen::VectorXd& dir) const;

 private:
  BarrierDomain(DomainKind kind, int dim, Eigen::VectorXd semi_axes);

  DomainKind kind_;
  int dim_;
  Eigen::VectorXd semi_axes_;
  double scale_;  // a_max; 1 for the unit ball
  linalg::SymMatrix hess_;
  double sup_psi_;
};

// Thresholds 0 < kappa < lambda^2 < lambda < 1 separating the collar,
// overlap, and deep regions used by the regime-switching machinery.
struct RegionParams {
  double kappa = 1e-3;
  double lambda = 0.5;

  void validate() const;
};

enum class Region { Outside, Collar, Overlap, Deep };

// Outside: psi <= 0; Collar: psi <= lambda^2; Overlap: lambda^2 < psi <
// lambda; Deep: psi >= lambda. Ties resolve downward (<= on the lower
// threshold).
Region classify(const BarrierDomain& domain, const RegionParams& params,
                const Eigen::VectorXd& x);

struct GeometryReport {
  double max_violation = 0.0;  // max of tr(a psi_xx) + 1; pass iff <= 0
  bool pass = false;
  // Control pair attaining the max (the witness when the check fails).
  std::optional<ops::ControlPair> witness;
  Eigen::VectorXd witness_point;
};

// Samples control pairs (Haar draws, coordinate slices, and for MiddleSum
// with k+2j <= d the explicit disjoint-range pair) and points of the closed
// domain; reports the largest value of tr(a psi_xx) + 1.
GeometryReport check_geometry_assumption(const BarrierDomain& domain,
                                         const ops::OperatorSpec& spec, int n_controls,
                                         int n_points, RandomStream& rng);

struct InvarianceReport {
  double max_residual = 0.0;
  bool pass = false;
};

// Max over sampled (gamma, q) of |H(q' gamma q) - H(gamma)|; passes at 1e-8.
InvarianceReport check_invariance_assumption(const ops::OperatorSpec& spec,
                                             int n_samples, RandomStream& rng);

// n! * (sup psi)^(n-1) * psi(x): the analytic bound on E[tau^n] for the
// exit time of any admissible diffusion started at x.
double exit_moment_bound(const BarrierDomain& domain, const Eigen::VectorXd& x, int n);

}  // namespace hg::domain
