#pragma once
// Dense symmetric-matrix primitives for small problems (2 <= d <= 8):
// eigendecomposition with deterministic ordering, PSD square roots,
// rank-k orthogonal projections, and exponentials of skew matrices.

#include <Eigen/Dense>
#include <vector>

#include "hessgame/errors.hpp"
#include "hessgame/rng.hpp"

namespace hg::linalg {

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 8;

// Symmetric matrix, symmetrized exactly on construction.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(int dim);
  static SymMatrix identity(int dim);
  static SymMatrix diag(const Eigen::VectorXd& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

 private:
  Eigen::MatrixXd m_;
};

// Eigendecomposition result: values ascending, vectors[.,i] paired with
// values[i], columns orthonormal and sign-normalized.
struct EigenPair {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Rank-k orthogonal projection. Stores both the matrix and an orthonormal
// frame spanning its range (columns of `frame`).
class Projection {
 public:
  Projection(int rank, const Eigen::MatrixXd& p);

  int dim() const { return static_cast<int>(p_.rows()); }
  int rank() const { return rank_; }
  const Eigen::MatrixXd& mat() const { return p_; }
  const Eigen::MatrixXd& frame() const { return frame_; }

 private:
  Projection(int rank, Eigen::MatrixXd p, Eigen::MatrixXd frame);
  friend Projection projection_from_frame(const std::vector<Eigen::VectorXd>&);
  friend Projection haar_projection(int, int, RandomStream&);

  int rank_;
  Eigen::MatrixXd p_;
  Eigen::MatrixXd frame_;
};

// Antisymmetric matrix, validated exactly on construction.
class SkewMatrix {
 public:
  explicit SkewMatrix(const Eigen::MatrixXd& m);

  // Builds u*v' - v*u' style antisymmetric part of m, exact by construction.
  static SkewMatrix antisymmetric_part(const Eigen::MatrixXd& m);
  static SkewMatrix zero(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

 private:
  Eigen::MatrixXd m_;
};

// Eigendecomposition, ascending eigenvalues, deterministic for fixed input:
// each eigenvector is normalized so its first nonzero component is positive.
// Throws NonFiniteError on NaN/Inf input.
EigenPair eig_sym(const SymMatrix& m);

// Symmetric PSD square root of the PSD clamp of m. Eigenvalues in
// [-clamp_tol, 0) are clamped to zero; anything below -clamp_tol throws
// NotPsdError.
SymMatrix psd_sqrt(const SymMatrix& m, double clamp_tol = 1e-10);

// Projection onto the span of the given columns (orthonormalized
// internally). Throws DegenerateFrameError when the columns are
// numerically dependent (condition tolerance 1e-8).
Projection projection_from_frame(const std::vector<Eigen::VectorXd>& columns);

// Rank-k projection drawn from the rotation-invariant (Haar) distribution:
// the span of k Gaussian columns. Deterministic for a fixed stream state.
Projection haar_projection(int dim, int rank, RandomStream& rng);

// exp(eps * P) for antisymmetric P, via scaling and squaring with a Taylor
// kernel; the result is orthogonal with determinant one.
Eigen::MatrixXd skew_exp(const SkewMatrix& p, double eps);

// Frobenius/max-norm helpers used by invariant checks.
double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Validates ||q'q - I||_max <= tol.
bool is_orthogonal(const Eigen::MatrixXd& q, double tol);

}  // namespace hg::linalg
