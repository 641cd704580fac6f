#include "hessgame/domain.hpp"

#include <cmath>
#include <limits>

namespace hg::domain {

using linalg::Projection;
using linalg::SymMatrix;

BarrierDomain::BarrierDomain(DomainKind kind, int dim, Eigen::VectorXd semi_axes)
    : kind_(kind),
      dim_(dim),
      semi_axes_(std::move(semi_axes)),
      scale_(semi_axes_.maxCoeff()),
      hess_(SymMatrix::zero(dim)),
      sup_psi_(0.0) {
  Eigen::VectorXd diag(dim_);
  for (int i = 0; i < dim_; ++i) diag[i] = -scale_ / (semi_axes_[i] * semi_axes_[i]);
  hess_ = SymMatrix::diag(diag);
  sup_psi_ = scale_ / 2.0;
}

BarrierDomain BarrierDomain::unit_ball(int dim) {
  if (dim < linalg::kMinDim || dim > linalg::kMaxDim)
    throw DimError("domain dimension outside [2, 8]");
  return BarrierDomain(DomainKind::UnitBall, dim, Eigen::VectorXd::Ones(dim));
}

BarrierDomain BarrierDomain::ellipsoid(const Eigen::VectorXd& semi_axes) {
  const int dim = static_cast<int>(semi_axes.size());
  if (dim < linalg::kMinDim || dim > linalg::kMaxDim)
    throw DimError("domain dimension outside [2, 8]");
  if (!(semi_axes.minCoeff() > 0.0))
    throw OutsideDomainError("ellipsoid semi-axes must be positive");
  return BarrierDomain(DomainKind::Ellipsoid, dim, semi_axes);
}

double BarrierDomain::psi(const Eigen::VectorXd& x) const {
  double q = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double t = x[i] / semi_axes_[i];
    q += t * t;
  }
  return 0.5 * scale_ * (1.0 - q);
}

Eigen::VectorXd BarrierDomain::grad_psi(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g(dim_);
  for (int i = 0; i < dim_; ++i)
    g[i] = -scale_ * x[i] / (semi_axes_[i] * semi_axes_[i]);
  return g;
}

Eigen::VectorXd BarrierDomain::project_to_boundary(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = grad_psi(x);
  if (g.norm() < 1e-14) {
    // Center of the domain: any direction reaches the boundary; use e1.
    g = Eigen::VectorXd::Zero(dim_);
    g[0] = 1.0;
  }
  // psi(x + t g) is quadratic in t: psi(x) + t g.psi_x(x) + t^2/2 g.H.g.
  const double c0 = psi(x);
  const double c1 = grad_psi(x).dot(g);
  const double c2 = 0.5 * g.dot(hess_.mat() * g);
  // c2 < 0 always (negative-definite Hessian), so real roots exist
  // whenever the line meets the boundary, which it does for every x.
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  const double sq = std::sqrt(std::max(disc, 0.0));
  const double r1 = (-c1 + sq) / (2.0 * c2);
  const double r2 = (-c1 - sq) / (2.0 * c2);
  const double t = std::abs(r1) <= std::abs(r2) ? r1 : r2;
  return x + t * g;
}

double BarrierDomain::boundary_crossing(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& dir) const {
  const double p = psi(x);
  if (p < -1e-12) throw OutsideDomainError("boundary_crossing: start point outside the domain");
  // psi(x + s dir) = p + s g + s^2 q / 2 with q < 0 (concave barrier), so
  // the discriminant g^2 - 2 q p is nonnegative for p >= 0 and the smallest
  // nonnegative root is (g + sqrt(g^2 - 2 q p)) / (-q).
  const double g = grad_psi(x).dot(dir);
  const double q = dir.dot(hess_.mat() * dir);
  if (!(q < 0.0)) throw DimError("boundary_crossing: direction must be nonzero");
  const double disc = std::max(g * g - 2.0 * q * p, 0.0);
  const double s = (g + std::sqrt(disc)) / (-q);
  return std::max(s, 0.0);
}

void RegionParams::validate() const {
  if (!(0.0 < kappa && kappa < lambda * lambda && lambda < 1.0))
    throw ConfigError("region thresholds must satisfy 0 < kappa < lambda^2 < lambda < 1");
}

Region classify(const BarrierDomain& domain, const RegionParams& params,
                const Eigen::VectorXd& x) {
  params.validate();
  const double p = domain.psi(x);
  if (p <= 0.0) return Region::Outside;
  if (p <= params.lambda * params.lambda) return Region::Collar;
  if (p < params.lambda) return Region::Overlap;
  return Region::Deep;
}

namespace {

// Uniform sample of the closed domain via rejection from the bounding box.
Eigen::VectorXd sample_point(const BarrierDomain& domain, RandomStream& rng) {
  const int d = domain.dim();
  for (;;) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i)
      x[i] = (2.0 * rng.uniform01() - 1.0) * domain.semi_axes()[i];
    if (domain.psi(x) >= 0.0) return x;
  }
}

Projection coordinate_slice(int dim, int first, int rank) {
  std::vector<Eigen::VectorXd> cols;
  for (int i = 0; i < rank; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[(first + i) % dim] = 1.0;
    cols.push_back(e);
  }
  return linalg::projection_from_frame(cols);
}

}  // namespace

GeometryReport check_geometry_assumption(const BarrierDomain& domain,
                                         const ops::OperatorSpec& spec, int n_controls,
                                         int n_points, RandomStream& rng) {
  if (domain.dim() != spec.dim()) throw DimError("domain/operator dimension mismatch");
  const int d = domain.dim();

  std::vector<ops::ControlPair> pairs;
  // Deterministic coordinate-aligned candidates, including, when rank
  // budgets allow it (k+2j <= d for MiddleSum), the disjoint-range pair
  // that witnesses failure: beta on the first k+j axes, alpha on the next j.
  const int ra = spec.alpha_rank();
  const int rb = spec.beta_rank();
  for (int shift = 0; shift < d; ++shift) {
    pairs.push_back(ops::ControlPair{coordinate_slice(d, (shift + rb) % d, ra),
                                     coordinate_slice(d, shift, rb)});
  }
  if (rb + ra <= d) {
    pairs.push_back(
        ops::ControlPair{coordinate_slice(d, rb, ra), coordinate_slice(d, 0, rb)});
  }
  for (int s = 0; s < n_controls; ++s) {
    pairs.push_back(ops::ControlPair{linalg::haar_projection(d, ra, rng),
                                     linalg::haar_projection(d, rb, rng)});
  }

  // The supported barriers have constant psi_xx and the operator families
  // have b = 0, so tr(a psi_xx) + b.psi_x does not vary over the domain;
  // points are still sampled so the report can name a concrete witness.
  std::vector<Eigen::VectorXd> points;
  points.push_back(Eigen::VectorXd::Zero(d));
  for (int s = 0; s < n_points; ++s) points.push_back(sample_point(domain, rng));

  GeometryReport report;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& pair : pairs) {
    const SymMatrix a = ops::diffusion_matrix(spec, pair);
    const double value = (a.mat() * domain.hess_psi().mat()).trace() + 1.0;
    if (value > report.max_violation) {
      report.max_violation = value;
      report.witness = pair;
      report.witness_point = points[points.size() > 1 ? 1 : 0];
    }
  }
  report.pass = report.max_violation <= 0.0;
  return report;
}

InvarianceReport check_invariance_assumption(const ops::OperatorSpec& spec,
                                             int n_samples, RandomStream& rng) {
  const int d = spec.dim();
  InvarianceReport report;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    const SymMatrix gamma(g);
    // Haar orthogonal matrix: the full frame of a Haar projection.
    Eigen::MatrixXd q(d, d);
    for (;;) {
      Eigen::MatrixXd raw(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) raw(i, j) = rng.normal();
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
      q = qr.householderQ();
      if (linalg::is_orthogonal(q, 1e-10)) break;
    }
    report.max_residual =
        std::max(report.max_residual, ops::check_orthogonal_invariance(spec, gamma, q));
  }
  report.pass = report.max_residual <= 1e-8;
  return report;
}

double exit_moment_bound(const BarrierDomain& domain, const Eigen::VectorXd& x, int n) {
  if (n < 1) throw Error("moment order must be >= 1");
  const double p = domain.psi(x);
  if (p <= 0.0) throw OutsideDomainError("moment bound needs a point inside the domain");
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i) factorial *= i;
  return factorial * std::pow(domain.sup_psi(), n - 1) * p;
}

}  // namespace hg::domain
