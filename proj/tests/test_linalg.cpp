#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "hessgame/errors.hpp"
#include "hessgame/linalg.hpp"
#include "hessgame/rng.hpp"

using namespace hg;
using linalg::SkewMatrix;
using linalg::SymMatrix;

namespace {

Eigen::MatrixXd random_sym(int d, RandomStream& rs) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rs.normal();
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("symmetric wrapper symmetrizes exactly and rejects bad input") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.7, 0.1, 1.0;
  const SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK_THROWS_AS(SymMatrix(Eigen::MatrixXd::Zero(2, 3)), DimError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(SymMatrix{bad}, NonFiniteError);
}

TEST_CASE("eigendecomposition is ascending and reconstructs the matrix") {
  RandomStream rs(42);
  for (int d = 2; d <= 5; ++d) {
    for (int rep = 0; rep < 20; ++rep) {
      const SymMatrix m(random_sym(d, rs));
      const auto ep = linalg::eig_sym(m);
      for (int i = 0; i + 1 < d; ++i) CHECK(ep.values[i] <= ep.values[i + 1] + 1e-12);
      const Eigen::MatrixXd rec =
          ep.vectors * ep.values.asDiagonal() * ep.vectors.transpose();
      CHECK(linalg::max_abs_diff(rec, m.mat()) < 1e-10);
      CHECK(linalg::is_orthogonal(ep.vectors, 1e-10));
    }
  }
}

TEST_CASE("psd square root squares back and clamps small negatives") {
  RandomStream rs(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd b = random_sym(3, rs);
    const SymMatrix m(Eigen::MatrixXd(b * b.transpose()));
    const SymMatrix s = linalg::psd_sqrt(m);
    CHECK(linalg::max_abs_diff(s.mat() * s.mat(), m.mat()) < 1e-8);
  }
  // A tiny negative eigenvalue is clamped to zero rather than rejected.
  Eigen::MatrixXd tiny = Eigen::MatrixXd::Identity(2, 2);
  tiny(1, 1) = -1e-13;
  const SymMatrix s = linalg::psd_sqrt(SymMatrix(tiny));
  CHECK(s.mat()(1, 1) == 0.0);
  // A solidly negative eigenvalue is an error.
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(linalg::psd_sqrt(SymMatrix(neg)), NotPsdError);
}

TEST_CASE("projection from a frame is an orthogonal projector of that rank") {
  std::vector<Eigen::VectorXd> cols;
  Eigen::VectorXd a(3), b(3);
  a << 1, 1, 0;
  b << 0, 1, 1;
  cols.push_back(a);
  cols.push_back(b);
  const auto p = linalg::projection_from_frame(cols);
  CHECK(p.rank() == 2);
  CHECK(linalg::max_abs_diff(p.mat() * p.mat(), p.mat()) < 1e-12);
  CHECK(linalg::max_abs_diff(p.mat(), p.mat().transpose()) < 1e-12);
  CHECK(std::abs(p.mat().trace() - 2.0) < 1e-12);
  // The stored frame spans the space the projector fixes.
  CHECK(linalg::max_abs_diff(p.mat() * p.frame(), p.frame()) < 1e-12);
  // Near-dependent columns are rejected.
  std::vector<Eigen::VectorXd> bad{a, a * (1.0 + 1e-14)};
  CHECK_THROWS_AS(linalg::projection_from_frame(bad), DegenerateFrameError);
}

TEST_CASE("Haar projections are deterministic per stream and valid projectors") {
  RandomStream r1(123), r2(123);
  const auto p1 = linalg::haar_projection(4, 2, r1);
  const auto p2 = linalg::haar_projection(4, 2, r2);
  CHECK(linalg::max_abs_diff(p1.mat(), p2.mat()) == 0.0);
  CHECK(p1.rank() == 2);
  CHECK(linalg::max_abs_diff(p1.mat() * p1.mat(), p1.mat()) < 1e-12);
  CHECK(std::abs(p1.mat().trace() - 2.0) < 1e-12);
  // Distinct draws from one stream differ.
  const auto p3 = linalg::haar_projection(4, 2, r1);
  CHECK(linalg::max_abs_diff(p1.mat(), p3.mat()) > 1e-3);
}

TEST_CASE("skew exponential is orthogonal with unit determinant") {
  RandomStream rs(9);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rs.normal();
    const SkewMatrix p = SkewMatrix::antisymmetric_part(m);
    for (double eps : {0.0, 0.1, 1.0, 5.0}) {
      const Eigen::MatrixXd q = linalg::skew_exp(p, eps);
      CHECK(linalg::is_orthogonal(q, 1e-12));
      CHECK(std::abs(q.determinant() - 1.0) < 1e-10);
    }
    CHECK(linalg::max_abs_diff(linalg::skew_exp(p, 0.0),
                               Eigen::MatrixXd::Identity(3, 3)) < 1e-14);
  }
}

TEST_CASE("skew wrapper accepts only exactly antisymmetric input") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(SkewMatrix{m}, Error);
  Eigen::MatrixXd s(2, 2);
  s << 0.0, 2.0, -2.0, 0.0;
  CHECK(SkewMatrix(s).max_abs() == 2.0);
  CHECK(SkewMatrix::zero(3).max_abs() == 0.0);
}

TEST_CASE("dimension guards reject sizes outside the supported range") {
  CHECK_THROWS_AS(SymMatrix::identity(1), DimError);
  CHECK_THROWS_AS(SymMatrix::identity(linalg::kMaxDim + 1), DimError);
  CHECK(SymMatrix::identity(linalg::kMinDim).dim() == linalg::kMinDim);
}

TEST_CASE("random streams are reproducible and path streams independent") {
  RandomStream a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream p0 = RandomStream::for_path(5, 0);
  RandomStream p1 = RandomStream::for_path(5, 1);
  CHECK(p0.next_u64() != p1.next_u64());
  // Uniform draws stay strictly inside (0, 1).
  RandomStream u(11);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform01();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // Normal draws have roughly standard moments.
  RandomStream g(13);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}
