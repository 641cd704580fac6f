#include "hessgame/linalg.hpp"

#include <cmath>

namespace hg::linalg {
namespace {

void require_dim(int dim) {
  if (dim < kMinDim || dim > kMaxDim) {
    throw DimError("matrix dimension " + std::to_string(dim) +
                   " outside supported range [2, 8]");
  }
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " contains NaN or Inf");
}

// First-nonzero-positive sign convention, applied column-wise.
void normalize_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      if (v(i, j) != 0.0) {
        if (v(i, j) < 0.0) v.col(j) = -v.col(j);
        break;
      }
    }
  }
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimError("symmetric matrix must be square");
  require_dim(static_cast<int>(m.rows()));
  require_finite(m, "symmetric matrix");
  m_ = 0.5 * (m + m.transpose());
  // Enforce exact equality of mirrored entries (the averaged values can
  // still differ in the last bit when addition rounds differently).
  for (Eigen::Index i = 0; i < m_.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) m_(i, j) = m_(j, i);
}

SymMatrix SymMatrix::zero(int dim) {
  require_dim(dim);
  return SymMatrix(Eigen::MatrixXd::Zero(dim, dim));
}

SymMatrix SymMatrix::identity(int dim) {
  require_dim(dim);
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

SymMatrix SymMatrix::diag(const Eigen::VectorXd& d) {
  require_dim(static_cast<int>(d.size()));
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

Projection::Projection(int rank, const Eigen::MatrixXd& p) : rank_(rank), p_(p) {
  const int d = static_cast<int>(p.rows());
  require_dim(d);
  if (p.cols() != p.rows()) throw DimError("projection must be square");
  if (rank < 1 || rank > d) throw RankError("projection rank outside [1, d]");
  require_finite(p, "projection");
  if (max_abs_diff(p, p.transpose()) > 1e-12)
    throw Error("projection not symmetric within 1e-12");
  if (max_abs_diff(p * p, p) > 1e-10) throw Error("projection not idempotent within 1e-10");
  if (std::abs(p.trace() - rank) > 1e-10)
    throw RankError("projection trace does not match rank within 1e-10");
  // Recover an orthonormal frame for the range: eigenvectors with unit
  // eigenvalue of the (validated) idempotent matrix.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p + p.transpose()));
  frame_ = es.eigenvectors().rightCols(rank);
  normalize_signs(frame_);
}

Projection::Projection(int rank, Eigen::MatrixXd p, Eigen::MatrixXd frame)
    : rank_(rank), p_(std::move(p)), frame_(std::move(frame)) {}

SkewMatrix::SkewMatrix(const Eigen::MatrixXd& m) : m_(m) {
  if (m.rows() != m.cols()) throw DimError("skew matrix must be square");
  require_dim(static_cast<int>(m.rows()));
  require_finite(m, "skew matrix");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw Error("skew matrix diagonal must be exactly zero");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (m(i, j) != -m(j, i)) throw Error("skew matrix entries must mirror exactly");
    }
  }
}

SkewMatrix SkewMatrix::antisymmetric_part(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = 0.5 * (m(i, j) - m(j, i));
      a(i, j) = v;
      a(j, i) = -v;
    }
  }
  return SkewMatrix(a);
}

SkewMatrix SkewMatrix::zero(int dim) {
  require_dim(dim);
  return SkewMatrix(Eigen::MatrixXd::Zero(dim, dim));
}

EigenPair eig_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  EigenPair out{es.eigenvalues(), es.eigenvectors()};
  normalize_signs(out.vectors);
  return out;
}

SymMatrix psd_sqrt(const SymMatrix& m, double clamp_tol) {
  EigenPair ep = eig_sym(m);
  Eigen::VectorXd lam = ep.values;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -clamp_tol) {
      throw NotPsdError("eigenvalue " + std::to_string(lam[i]) +
                        " below clamp tolerance " + std::to_string(clamp_tol));
    }
    lam[i] = lam[i] > 0.0 ? std::sqrt(lam[i]) : 0.0;
  }
  Eigen::MatrixXd s = ep.vectors * lam.asDiagonal() * ep.vectors.transpose();
  return SymMatrix(s);
}

Projection projection_from_frame(const std::vector<Eigen::VectorXd>& columns) {
  if (columns.empty()) throw RankError("projection frame needs at least one column");
  const int d = static_cast<int>(columns.front().size());
  require_dim(d);
  const int k = static_cast<int>(columns.size());
  if (k > d) throw RankError("more frame columns than the dimension");
  Eigen::MatrixXd a(d, k);
  double max_norm = 0.0;
  for (int j = 0; j < k; ++j) {
    if (columns[j].size() != d) throw DimError("frame columns of mixed dimension");
    a.col(j) = columns[j];
    max_norm = std::max(max_norm, columns[j].norm());
  }
  require_finite(a, "frame");
  if (max_norm == 0.0) throw DegenerateFrameError("all frame columns are zero");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    if (std::abs(r(j, j)) < 1e-8 * max_norm)
      throw DegenerateFrameError("frame columns numerically dependent");
  }
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  normalize_signs(q);
  Eigen::MatrixXd p = q * q.transpose();
  p = 0.5 * (p + p.transpose());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) p(i, j) = p(j, i);
  return Projection(k, std::move(p), std::move(q));
}

Projection haar_projection(int dim, int rank, RandomStream& rng) {
  require_dim(dim);
  if (rank < 1 || rank > dim) throw RankError("haar projection rank outside [1, d]");
  for (;;) {
    std::vector<Eigen::VectorXd> cols(rank, Eigen::VectorXd(dim));
    for (auto& c : cols)
      for (int i = 0; i < dim; ++i) c[i] = rng.normal();
    try {
      return projection_from_frame(cols);
    } catch (const DegenerateFrameError&) {
      // Measure-zero draw; resample.
    }
  }
}

Eigen::MatrixXd skew_exp(const SkewMatrix& p, double eps) {
  const int d = p.dim();
  Eigen::MatrixXd a = eps * p.mat();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    a /= std::pow(2.0, squarings);
  }
  // Taylor series on the scaled matrix; with norm <= 0.25 twenty terms
  // put the truncation far below double precision.
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  for (int n = 1; n <= 20; ++n) {
    term = (term * a) / static_cast<double>(n);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

bool is_orthogonal(const Eigen::MatrixXd& q, double tol) {
  if (q.rows() != q.cols()) return false;
  const Eigen::MatrixXd g = q.transpose() * q;
  return max_abs_diff(g, Eigen::MatrixXd::Identity(q.rows(), q.cols())) <= tol;
}

}  // namespace hg::linalg
