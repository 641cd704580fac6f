#pragma once
// Scalar payoff data on the domain: a small catalog of named fields plus
// general multivariate polynomials. Every field exposes an analytic
// gradient because the derivative-estimation machinery integrates
// grad(f) . xi along trajectories.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hessgame/errors.hpp"

namespace hg::fields {

// One polynomial term: coefficient * prod_i x_i^powers[i].
struct PolyTerm {
  double coefficient = 0.0;
  std::vector<int> powers;
};

class ScalarField {
 public:
  static ScalarField constant(int dim, double value);
  // a . x + b
  static ScalarField linear(int dim, const Eigen::VectorXd& a, double b);
  // x1^2 - x2^2 (harmonic for d >= 2; zero middle eigenvalues for d > 2).
  static ScalarField harmonic_quadratic(int dim);
  static ScalarField polynomial(int dim, std::vector<PolyTerm> terms);

  int dim() const { return dim_; }
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  bool is_zero() const;

  // Human-readable form used by config echo and reports.
  std::string describe() const;

 private:
  ScalarField(int dim, std::vector<PolyTerm> terms);

  int dim_;
  std::vector<PolyTerm> terms_;
};

}  // namespace hg::fields
