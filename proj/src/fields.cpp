#include "hessgame/fields.hpp"

#include <cmath>
#include <sstream>

namespace hg::fields {

ScalarField::ScalarField(int dim, std::vector<PolyTerm> terms)
    : dim_(dim), terms_(std::move(terms)) {
  if (dim < 1) throw DimError("field dimension must be positive");
  for (auto& t : terms_) {
    if (static_cast<int>(t.powers.size()) != dim)
      throw DimError("polynomial term power list does not match the dimension");
    for (int p : t.powers)
      if (p < 0) throw ConfigError("polynomial powers must be nonnegative");
    if (!std::isfinite(t.coefficient))
      throw NonFiniteError("polynomial coefficient not finite");
  }
}

ScalarField ScalarField::constant(int dim, double value) {
  PolyTerm t;
  t.coefficient = value;
  t.powers.assign(dim, 0);
  return ScalarField(dim, {t});
}

ScalarField ScalarField::linear(int dim, const Eigen::VectorXd& a, double b) {
  if (static_cast<int>(a.size()) != dim) throw DimError("linear field size mismatch");
  std::vector<PolyTerm> terms;
  for (int i = 0; i < dim; ++i) {
    if (a[i] == 0.0) continue;
    PolyTerm t;
    t.coefficient = a[i];
    t.powers.assign(dim, 0);
    t.powers[i] = 1;
    terms.push_back(t);
  }
  if (b != 0.0 || terms.empty()) {
    PolyTerm t;
    t.coefficient = b;
    t.powers.assign(dim, 0);
    terms.push_back(t);
  }
  return ScalarField(dim, std::move(terms));
}

ScalarField ScalarField::harmonic_quadratic(int dim) {
  if (dim < 2) throw DimError("harmonic quadratic needs d >= 2");
  PolyTerm t1, t2;
  t1.coefficient = 1.0;
  t1.powers.assign(dim, 0);
  t1.powers[0] = 2;
  t2.coefficient = -1.0;
  t2.powers.assign(dim, 0);
  t2.powers[1] = 2;
  return ScalarField(dim, {t1, t2});
}

ScalarField ScalarField::polynomial(int dim, std::vector<PolyTerm> terms) {
  return ScalarField(dim, std::move(terms));
}

double ScalarField::value(const Eigen::VectorXd& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw DimError("field evaluated on a point of the wrong dimension");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double prod = t.coefficient;
    for (int i = 0; i < dim_; ++i) {
      for (int p = 0; p < t.powers[i]; ++p) prod *= x[i];
    }
    sum += prod;
  }
  return sum;
}

Eigen::VectorXd ScalarField::gradient(const Eigen::VectorXd& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw DimError("field gradient on a point of the wrong dimension");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (const auto& t : terms_) {
    for (int i = 0; i < dim_; ++i) {
      if (t.powers[i] == 0) continue;
      double prod = t.coefficient * t.powers[i];
      for (int m = 0; m < dim_; ++m) {
        const int p = m == i ? t.powers[m] - 1 : t.powers[m];
        for (int q = 0; q < p; ++q) prod *= x[m];
      }
      g[i] += prod;
    }
  }
  return g;
}

bool ScalarField::is_zero() const {
  for (const auto& t : terms_)
    if (t.coefficient != 0.0) return false;
  return true;
}

std::string ScalarField::describe() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms_) {
    if (t.coefficient == 0.0 && terms_.size() > 1) continue;
    if (!first) os << " + ";
    os << t.coefficient;
    for (int i = 0; i < dim_; ++i) {
      if (t.powers[i] == 0) continue;
      os << "*x" << (i + 1);
      if (t.powers[i] > 1) os << "^" << t.powers[i];
    }
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

}  // namespace hg::fields
