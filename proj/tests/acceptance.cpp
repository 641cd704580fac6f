// Acceptance harness: ten go/no-go checks over the whole toolkit, each
// printing exactly one [PASS]/[FAIL] line. Tolerances are pinned here, next
// to the check they gate, with a comment saying where each number comes
// from. The process exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hessgame/domain.hpp"
#include "hessgame/errors.hpp"
#include "hessgame/fields.hpp"
#include "hessgame/game.hpp"
#include "hessgame/linalg.hpp"
#include "hessgame/operators.hpp"
#include "hessgame/quasideriv.hpp"
#include "hessgame/rng.hpp"
#include "hessgame/solver.hpp"

#include "data/aux_reference.inc"

using namespace hg;
using fields::ScalarField;

namespace {

int g_marks = 0;  // failed requirements inside the current criterion

void require_impl(bool ok, const char* expr, int line) {
  if (!ok) {
    ++g_marks;
    std::printf("       failed requirement (acceptance.cpp:%d): %s\n", line, expr);
  }
}

void require_close_impl(double got, double want, double tol, const char* what,
                        int line) {
  if (!(std::abs(got - want) <= tol)) {
    ++g_marks;
    std::printf(
        "       failed requirement (acceptance.cpp:%d): %s: got %.12g, want %.12g "
        "(tol %.3g)\n",
        line, what, got, want, tol);
  }
}

#define REQUIRE(cond) require_impl(bool(cond), #cond, __LINE__)
#define REQUIRE_CLOSE(got, want, tol) \
  require_close_impl((got), (want), (tol), #got, __LINE__)

// Independent eigenvalue oracle for both operator families.
double oracle_eval(const ops::OperatorSpec& spec, const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto& ev = es.eigenvalues();  // ascending
  double s = 0.0;
  if (spec.kind() == ops::OperatorKind::SumExtremes) {
    for (int i = 0; i < spec.k1(); ++i) s += ev[i];
    for (int i = 0; i < spec.k2(); ++i) s += ev[ev.size() - 1 - i];
  } else {
    for (int i = spec.k(); i < spec.k() + spec.j(); ++i) s += ev[i];
  }
  return s;
}

Eigen::MatrixXd random_sym(int d, RandomStream& rng) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = 4.0 * rng.uniform01() - 2.0;
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

ops::ControlPair counting_pair(const ops::OperatorSpec& spec) {
  Eigen::VectorXd d(spec.dim());
  for (int i = 0; i < spec.dim(); ++i) d[i] = i + 1.0;
  return ops::optimal_controls(spec, linalg::SymMatrix::diag(d));
}

quasi::AuxParams aux_params(double lambda, double theta, double k1, double kappa) {
  quasi::AuxParams p;
  p.lambda = lambda;
  p.theta = theta;
  p.k1 = k1;
  p.kappa = kappa;
  return p;
}

// The nonconvex model problem shared by criteria 6, 9, and 10: Laplacian-
// extremes dynamics in d = 3 with a constant running payoff, so the value
// genuinely depends on the regularization level and is not a polynomial.
struct NonconvexProblem {
  domain::BarrierDomain dom = domain::BarrierDomain::unit_ball(3);
  ops::OperatorSpec spec = ops::OperatorSpec::sum_extremes(3, 1, 1);
  ScalarField f = ScalarField::constant(3, 2.0);
  ScalarField g = ScalarField::harmonic_quadratic(3);
};

std::shared_ptr<const solver::ValueField> nonconvex_field_16() {
  static std::shared_ptr<const solver::ValueField> cached;
  if (!cached) {
    NonconvexProblem prob;
    solver::SolveOptions opts;
    opts.tol = 1e-6;
    cached = std::make_shared<const solver::ValueField>(solver::solve_dirichlet(
        prob.spec, prob.dom, prob.f, prob.g, 1.0 / 16.0, 0.0, opts));
  }
  return cached;
}

// ---------------------------------------------------------------------------

// Criterion 1: operator evaluations agree with an independent eigenvalue
// oracle on 500 random symmetric matrices, and one-sided saddle
// certificates hold across 2000 Haar control samples.
void criterion_1() {
  RandomStream rng(1001);
  const std::vector<ops::OperatorSpec> specs = {
      ops::OperatorSpec::sum_extremes(3, 1, 2),
      ops::OperatorSpec::sum_extremes(4, 2, 2),
      ops::OperatorSpec::middle_sum(3, 1, 1, true),
      ops::OperatorSpec::middle_sum(4, 1, 2),
  };
  double worst = 0.0;
  for (const auto& spec : specs) {
    for (int t = 0; t < 125; ++t) {  // 4 * 125 = 500 matrices
      const Eigen::MatrixXd m = random_sym(spec.dim(), rng);
      const double got = ops::operator_eval(spec, linalg::SymMatrix(m));
      const double want = oracle_eval(spec, m);
      worst = std::max(worst, std::abs(got - want));
    }
  }
  // Two eigensolver runs on well-conditioned small matrices agree far
  // below 1e-9; anything larger flags a real defect.
  REQUIRE(worst <= 1e-9);

  double worst_beta = 0.0, worst_alpha = 0.0;
  for (const auto& spec : specs) {
    for (int t = 0; t < 10; ++t) {  // 4 * 10 * 50 = 2000 Haar samples
      const Eigen::MatrixXd m = random_sym(spec.dim(), rng);
      const auto [beta_gap, alpha_gap] =
          ops::saddle_gap(spec, linalg::SymMatrix(m), 50, rng);
      worst_beta = std::min(worst_beta, beta_gap);
      worst_alpha = std::max(worst_alpha, alpha_gap);
    }
  }
  REQUIRE(worst_beta >= -1e-9);  // no sampled minimizer pushes below the value
  REQUIRE(worst_alpha <= 1e-9);  // no sampled maximizer beats the spectral play
  std::printf("       oracle gap %.3g, saddle gaps (%.3g, %.3g)\n", worst, worst_beta,
              worst_alpha);
}

// Criterion 2: the barrier nondegeneracy check reproduces the known
// violation levels on the unit ball and flags rank-deficient middle-sum
// operators with a concrete witness.
void criterion_2() {
  RandomStream rng(2002);
  const auto ball3 = domain::BarrierDomain::unit_ball(3);
  const auto ball4 = domain::BarrierDomain::unit_ball(4);
  {
    // Every extremes pair has tr(a psi_xx) = -(k1 + k2); sampled frames
    // reproduce the level to machine roundoff, hence the 1e-12 band.
    const auto rep = domain::check_geometry_assumption(
        ball3, ops::OperatorSpec::sum_extremes(3, 1, 1), 500, 64, rng);
    REQUIRE(rep.pass);
    REQUIRE_CLOSE(rep.max_violation, -1.0, 1e-12);
  }
  {
    const auto rep = domain::check_geometry_assumption(
        ball3, ops::OperatorSpec::sum_extremes(3, 2, 1), 500, 64, rng);
    REQUIRE(rep.pass);
    REQUIRE_CLOSE(rep.max_violation, -2.0, 1e-12);
  }
  {
    // k + 2j = 5 > 4: solvable; the minimal-overlap coordinate pair sits
    // exactly on the threshold.
    const auto rep = domain::check_geometry_assumption(
        ball4, ops::OperatorSpec::middle_sum(4, 1, 2), 500, 64, rng);
    REQUIRE(rep.pass);
    REQUIRE_CLOSE(rep.max_violation, 0.0, 1e-12);
  }
  {
    // k + 2j = 3 = d: disjoint control ranges kill the diffusion entirely
    // and the reported witness must reproduce the violation it claims.
    const auto spec = ops::OperatorSpec::middle_sum(3, 1, 1, true);
    const auto rep = domain::check_geometry_assumption(ball3, spec, 500, 64, rng);
    REQUIRE(!rep.pass);
    REQUIRE(rep.witness.has_value());
    REQUIRE(rep.max_violation >= 1.0 - 1e-12);
    const auto a = ops::diffusion_matrix(spec, *rep.witness);
    const double tr = (a.mat() * ball3.hess_psi().mat()).trace();
    REQUIRE_CLOSE(tr + 1.0, rep.max_violation, 1e-12);
  }
}

// Criterion 3: simulated exit times on the unit disk respect the factorial
// moment bounds and reproduce the exact mean exit time at the center.
void criterion_3() {
  const auto dom = domain::BarrierDomain::unit_ball(2);
  const auto spec = ops::OperatorSpec::sum_extremes(2, 1, 1);
  game::GameConfig cfg{dom,
                       spec,
                       ScalarField::constant(2, 0.0),
                       ScalarField::constant(2, 0.0),
                       0.0,
                       0.0,
                       1e-4,
                       30303};
  // diag(1, 2) has distinct eigenvalues, so the spectral pair is the
  // extreme projections and the diffusion is the identity.
  const auto pol = game::Policy::constant(counting_pair(spec));

  std::vector<Eigen::VectorXd> starts;
  Eigen::VectorXd x(2);
  x << 0.0, 0.0;
  starts.push_back(x);
  x << 0.5, 0.0;
  starts.push_back(x);
  x << 0.0, -0.7;
  starts.push_back(x);

  for (const auto& x0 : starts) {
    const auto rep = game::estimate_exit_moments(cfg, pol, x0, 100000, 2);
    REQUIRE(rep.step_limit_hits == 0);
    for (const auto& m : rep.moments) {
      // Factorial bound E tau^n <= n! sup(psi)^(n-1) psi(x0) with a
      // three-sigma sampling allowance.
      REQUIRE(m.mean <= m.bound + 3.0 * m.stderr_);
      REQUIRE(m.mean > 0.0);
    }
    if (x0.norm() == 0.0) {
      // Exact values for the identity diffusion on the disk:
      // E tau = (1 - |x|^2)/4 = 1/4 and E tau^2 = 3/32 at the center.
      // 2e-3 covers the O(dt) discretization bias at dt = 1e-4.
      const auto& m1 = rep.moments.at(0);
      const auto& m2 = rep.moments.at(1);
      REQUIRE(std::abs(m1.mean - 0.25) <= std::max(3.0 * m1.stderr_, 2e-3));
      REQUIRE(std::abs(m2.mean - 3.0 / 32.0) <= std::max(3.0 * m2.stderr_, 2e-3));
      std::printf("       center moments %.5f (want 0.25), %.5f (want %.5f)\n",
                  m1.mean, m2.mean, 3.0 / 32.0);
    }
  }
}

// Criterion 4: the Dirichlet solver converges on the 2-d Laplacian problem
// with harmonic boundary data and the error contracts under refinement.
void criterion_4() {
  const auto dom = domain::BarrierDomain::unit_ball(2);
  const auto spec = ops::OperatorSpec::sum_extremes(2, 1, 1);
  const auto f = ScalarField::constant(2, 0.0);
  const auto g = ScalarField::harmonic_quadratic(2);
  solver::SolveOptions opts;
  opts.tol = 1e-7;

  auto sup_error = [&](const solver::ValueField& field) {
    RandomStream rng(4004);
    double err = 0.0;
    for (int t = 0; t < 400; ++t) {
      Eigen::VectorXd p(2);
      do {
        p[0] = 2.0 * rng.uniform01() - 1.0;
        p[1] = 2.0 * rng.uniform01() - 1.0;
      } while (dom.psi(p) < 0.02);
      err = std::max(err, std::abs(field.value_at(p) - g.value(p)));
    }
    return err;
  };

  const auto coarse = solver::solve_dirichlet(spec, dom, f, g, 1.0 / 32.0, 0.0, opts);
  const auto fine = solver::solve_dirichlet(spec, dom, f, g, 1.0 / 64.0, 0.0, opts);
  REQUIRE(coarse.converged);
  REQUIRE(fine.converged);
  const double e32 = sup_error(coarse);
  const double e64 = sup_error(fine);
  std::printf("       sup errors %.3g (h=1/32) -> %.3g (h=1/64)\n", e32, e64);
  REQUIRE(e32 <= 5e-2);
  // At least first-order contraction; the 1e-6 floor keeps the ratio test
  // meaningful when axis-aligned stencils resolve the data exactly.
  REQUIRE(e64 <= std::max(0.7 * e32, 1e-6));
}

// Criterion 5: the PDE solve and the game simulation agree. The spectral
// feedback policy plays the saddle controls of the numerical Hessian, and
// the resulting payoff matches the solver value pointwise.
void criterion_5() {
  const auto dom = domain::BarrierDomain::unit_ball(3);
  const auto spec = ops::OperatorSpec::sum_extremes(3, 1, 1);
  const auto f = ScalarField::constant(3, 0.0);
  const auto g = ScalarField::harmonic_quadratic(3);
  solver::SolveOptions opts;
  opts.tol = 1e-6;
  auto field = std::make_shared<const solver::ValueField>(
      solver::solve_dirichlet(spec, dom, f, g, 1.0 / 16.0, 0.0, opts));
  REQUIRE(field->converged);

  game::GameConfig cfg{dom, spec, f, g, 0.0, 0.0, 1e-3, 50505};
  const auto pol = game::Policy::spectral_feedback(field, 0.125);

  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd x(3);
  x << 0.0, 0.0, 0.0;
  points.push_back(x);
  x << 0.4, 0.0, 0.0;
  points.push_back(x);
  x << 0.0, 0.4, 0.0;
  points.push_back(x);
  x << 0.2, 0.2, 0.2;
  points.push_back(x);
  x << -0.3, 0.1, 0.2;
  points.push_back(x);

  for (const auto& x0 : points) {
    const auto est = game::estimate_value(cfg, pol, x0, 4000);
    const double uref = field->value_at(x0);
    // 5e-2 absorbs the O(h) field error and O(dt) weak error; the
    // three-sigma term covers sampling noise.
    const double tol = std::max(3.0 * est.stderr_, 5e-2);
    if (std::abs(est.mean - uref) > tol) {
      std::printf("       mismatch at (%.2f, %.2f, %.2f): mc %.5f vs pde %.5f\n",
                  x0[0], x0[1], x0[2], est.mean, uref);
    }
    REQUIRE(std::abs(est.mean - uref) <= tol);
  }
}

// Criterion 6: vanishing-regularization continuation. The gap to the
// delta = 0 solution decays (10 percent slack for solver noise) along the
// schedule 0.4, 0.2, 0.1, 0.05, 0.
void criterion_6() {
  NonconvexProblem prob;
  solver::SolveOptions opts;
  opts.tol = 1e-6;
  const std::vector<double> deltas = {0.4, 0.2, 0.1, 0.05, 0.0};
  const auto cont = solver::delta_continuation(prob.spec, prob.dom, prob.f, prob.g,
                                               1.0 / 12.0, deltas, opts);
  REQUIRE(cont.fields.size() == deltas.size());
  for (const auto& fld : cont.fields) REQUIRE(fld.converged);
  REQUIRE(cont.gaps.back() == 0.0);
  std::printf("       gaps");
  for (double gap : cont.gaps) std::printf(" %.4g", gap);
  std::printf("\n");
  for (std::size_t i = 0; i + 1 < cont.gaps.size(); ++i) {
    REQUIRE(cont.gaps[i + 1] <= 1.1 * cont.gaps[i] + 1e-12);
  }
}

// Criterion 7: auxiliary machinery. Pinned collar/interior values, the
// time-change range, rotation orthogonality, and a unit-mean Girsanov
// density along simulated variation paths.
void criterion_7() {
  const auto dom = domain::BarrierDomain::unit_ball(3);
  double worst = 0.0;
  for (const auto& ref : kCollarRefs) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::Vector3d>(ref.x);
    Eigen::VectorXd xi = Eigen::Map<const Eigen::Vector3d>(ref.xi);
    Eigen::MatrixXd sigma = Eigen::Map<const Eigen::Matrix<double, 3, 2>>(ref.sigma);
    const auto p = aux_params(ref.lambda_, 1.0 / 6.0, 1.0, 1e-3);
    const auto aux = quasi::boundary_aux(dom, p, x, xi, sigma);
    worst = std::max(worst, std::abs(aux.b - ref.b));
    worst = std::max(worst, std::abs(aux.r - ref.r));
    for (int c = 0; c < 2; ++c) worst = std::max(worst, std::abs(aux.pi[c] - ref.pi[c]));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(aux.p.mat()(i, j) - ref.p[3 * i + j]));
  }
  for (const auto& ref : kInteriorRefs) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::Vector3d>(ref.x);
    Eigen::VectorXd xi = Eigen::Map<const Eigen::Vector3d>(ref.xi);
    Eigen::MatrixXd sigma = Eigen::Map<const Eigen::Matrix<double, 3, 2>>(ref.sigma);
    const auto p = aux_params(ref.lambda_, ref.theta, ref.k1, 1e-3);
    const auto aux = quasi::interior_aux(dom, p, x, xi, sigma);
    worst = std::max(worst, std::abs(aux.b - ref.b));
    worst = std::max(worst, std::abs(aux.r - ref.r));
    for (int c = 0; c < 2; ++c) worst = std::max(worst, std::abs(aux.pi[c] - ref.pi[c]));
  }
  // The reference table was generated by an independent script from the
  // same closed-form expressions; 1e-12 allows only roundoff.
  REQUIRE(worst <= 1e-12);
  std::printf("       pinned-value gap %.3g\n", worst);

  for (double r : {-1e9, -17.0, 0.0, 3.5, 1e9}) {
    for (double eps : {1e-3, 1e-2, 0.1}) {
      const double th = quasi::time_change(r, eps);
      REQUIRE(th > 0.5);
      REQUIRE(th < 1.5);
    }
    REQUIRE(quasi::time_change(r, 0.0) == 1.0);
  }

  {
    Eigen::VectorXd x(3), xi(3);
    x << 0.3, -0.4, 0.2;
    xi << 0.5, 1.0, -1.0 / 3.0;
    const auto p = aux_params(0.5, 1.0 / 6.0, 1.0, 1e-3);
    const auto aux = quasi::boundary_aux(dom, p, x, xi, Eigen::MatrixXd(3, 0));
    for (double eps : {0.35, -0.2}) {
      const Eigen::MatrixXd q = quasi::rotation(aux.p, eps);
      REQUIRE((q.transpose() * q - Eigen::MatrixXd::Identity(3, 3))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
      REQUIRE(std::abs(q.determinant() - 1.0) <= 1e-12);
    }
  }

  {
    // pi is adapted, so the stopped discrete exponential martingale has
    // mean exactly one up to sampling error.
    game::GameConfig cfg{dom,
                         ops::OperatorSpec::sum_extremes(3, 1, 1),
                         ScalarField::constant(3, 0.0),
                         ScalarField::harmonic_quadratic(3),
                         0.0,
                         0.0,
                         1e-3,
                         70707};
    const auto pol = game::Policy::constant(counting_pair(cfg.spec));
    const auto p = aux_params(0.5, 1.0 / 6.0, 1.0, 0.05);
    Eigen::VectorXd x0(3), xi0(3);
    x0 << 0.4, 0.0, 0.0;
    xi0 << 1.0, 0.0, 0.0;
    const double eps = 0.1;
    const long n = 1500;
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < n; ++i) {
      const auto path =
          quasi::simulate_quasi_system(cfg, pol, p, x0, xi0, (std::uint64_t)i);
      const double w = quasi::girsanov_weight(path, eps);
      sum += w;
      sumsq += w * w;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sumsq / n - mean * mean) / n);
    std::printf("       girsanov mean %.5f +- %.5f\n", mean, se);
    REQUIRE(std::abs(mean - 1.0) <= 3.0 * se);
  }
}

// Criterion 8: supermartingale bound for the variation barrier. Along
// simulated variation paths the expected lower barrier at the stopped
// state stays within twice its initial upper value.
void criterion_8() {
  const auto dom = domain::BarrierDomain::unit_ball(3);
  const auto spec = ops::OperatorSpec::sum_extremes(3, 1, 1);
  game::GameConfig cfg{dom,
                       spec,
                       ScalarField::constant(3, 0.0),
                       ScalarField::harmonic_quadratic(3),
                       0.0,
                       0.0,
                       5e-4,
                       80808};
  const auto pol = game::Policy::constant(counting_pair(spec));
  const auto p = aux_params(0.5, 1.0 / 6.0, 1.0, 1e-3);
  Eigen::VectorXd x0(3), xi0(3);
  x0 << 0.5, 0.0, 0.0;
  xi0 << 1.0, 0.0, 0.0;
  const long n_paths = 10000;
  const auto rep = quasi::check_supermartingale(cfg, pol, p, x0, xi0, n_paths, 2.0);
  std::printf("       start barrier %.4f, %ld paths, %ld censored\n",
              rep.b_upper_start, rep.n_paths, rep.censored);
  for (const auto& row : rep.horizons) {
    std::printf("       horizon %.3f: mean %.4f (cap %.4f)\n", row.horizon, row.mean,
                2.0 * rep.b_upper_start);
  }
  REQUIRE(rep.pass);
  // Censoring must be a non-event; anything above 1 percent would bias
  // the reported means.
  REQUIRE(rep.censored < n_paths / 100);
}

// Criterion 9: gradient bound. The fitted constant in
// |D_xi u| <= N (1 + |psi_(xi)| / sqrt(psi)) is finite, stable under one
// grid refinement, and modest for a harmonic value.
void criterion_9() {
  const auto p = aux_params(0.5, 1.0 / 6.0, 1.0, 1e-3);
  NonconvexProblem prob;
  solver::SolveOptions opts;
  opts.tol = 1e-6;
  const auto coarse = solver::solve_dirichlet(prob.spec, prob.dom, prob.f, prob.g,
                                              1.0 / 12.0, 0.0, opts);
  REQUIRE(coarse.converged);
  const auto fine = nonconvex_field_16();
  REQUIRE(fine->converged);
  const auto rep_c = quasi::gradient_bound_check(coarse, prob.dom, p);
  const auto rep_f = quasi::gradient_bound_check(*fine, prob.dom, p);
  std::printf("       fitted N %.4f (h=1/12) vs %.4f (h=1/16)\n", rep_c.fitted_n,
              rep_f.fitted_n);
  REQUIRE(std::isfinite(rep_c.fitted_n));
  REQUIRE(std::isfinite(rep_f.fitted_n));
  REQUIRE(rep_c.fitted_n > 0.0);
  // 15 percent: the scan is a max statistic over nodes, so exact
  // agreement across grids is not expected, but the level must be stable.
  REQUIRE(std::abs(rep_f.fitted_n - rep_c.fitted_n) <= 0.15 * rep_c.fitted_n);

  const auto dom2 = domain::BarrierDomain::unit_ball(2);
  const auto spec2 = ops::OperatorSpec::sum_extremes(2, 1, 1);
  const auto field2 =
      solver::solve_dirichlet(spec2, dom2, ScalarField::constant(2, 0.0),
                              ScalarField::harmonic_quadratic(2), 1.0 / 32.0, 0.0,
                              solver::SolveOptions{});
  const auto rep2 = quasi::gradient_bound_check(field2, dom2, p);
  // |grad(x1^2 - x2^2)| <= 2 on the closed disk; 0.1 of slack for the
  // discrete gradient.
  REQUIRE(rep2.fitted_n <= 2.1);
}

// Criterion 10: the pathwise directional-derivative estimator matches
// centered differences of the solved field, in a smooth convex-free case
// with a constant optimal pair and in the nonconvex case under spectral
// feedback.
void criterion_10() {
  const auto p = aux_params(0.5, 1.0 / 6.0, 1.0, 0.05);
  const double fd_eps = 1e-2;

  {
    // Laplacian on the disk with a harmonic value: the identity diffusion
    // is optimal everywhere, so a constant pair is a valid policy.
    const auto dom = domain::BarrierDomain::unit_ball(2);
    const auto spec = ops::OperatorSpec::sum_extremes(2, 1, 1);
    const auto f = ScalarField::constant(2, 0.0);
    const auto g = ScalarField::harmonic_quadratic(2);
    solver::SolveOptions opts;
    opts.tol = 1e-7;
    const auto field =
        solver::solve_dirichlet(spec, dom, f, g, 1.0 / 32.0, 0.0, opts);
    REQUIRE(field.converged);
    game::GameConfig cfg{dom, spec, f, g, 0.0, 0.0, 5e-4, 101010};
    const auto pol = game::Policy::constant(counting_pair(spec));

    const double pts[5][4] = {{0.3, 0.0, 1.0, 0.0},
                              {0.0, 0.0, 1.0, 0.0},
                              {-0.2, 0.4, 0.0, 1.0},
                              {0.25, 0.25, 0.6, 0.8},
                              {0.0, -0.5, 1.0, 0.0}};
    for (const auto& row : pts) {
      Eigen::VectorXd x0(2), xi0(2);
      x0 << row[0], row[1];
      xi0 << row[2], row[3];
      const auto est =
          quasi::estimate_directional_derivative(cfg, field, pol, p, x0, xi0, 3000);
      const double fd = (field.value_at(x0 + fd_eps * xi0) -
                         field.value_at(x0 - fd_eps * xi0)) /
                        (2.0 * fd_eps);
      const double tol = std::max(3.0 * est.stderr_, 5e-2);
      if (std::abs(est.mean - fd) > tol) {
        std::printf("       laplacian mismatch at (%.2f, %.2f): %.4f vs fd %.4f\n",
                    x0[0], x0[1], est.mean, fd);
      }
      REQUIRE(std::abs(est.mean - fd) <= tol);
      REQUIRE(est.censored == 0);
    }
  }

  {
    // Nonconvex case: the value is not a polynomial and the optimal pair
    // varies over the domain, so the estimator must run under spectral
    // feedback to target the same value the solver computed.
    NonconvexProblem prob;
    const auto field = nonconvex_field_16();
    REQUIRE(field->converged);
    game::GameConfig cfg{prob.dom, prob.spec, prob.f, prob.g, 0.0, 0.0,
                         1.5e-3,   111111};
    const auto pol = game::Policy::spectral_feedback(field, 0.125);

    const double pts[3][6] = {{0.3, 0.0, 0.0, 1.0, 0.0, 0.0},
                              {0.0, 0.3, 0.1, 0.0, 1.0, 0.0},
                              {0.2, 0.2, 0.2, 0.0, 0.0, 1.0}};
    for (const auto& row : pts) {
      Eigen::VectorXd x0(3), xi0(3);
      x0 << row[0], row[1], row[2];
      xi0 << row[3], row[4], row[5];
      const auto est = quasi::estimate_directional_derivative(cfg, *field, pol, p, x0,
                                                              xi0, 1500);
      const double fd = (field->value_at(x0 + fd_eps * xi0) -
                         field->value_at(x0 - fd_eps * xi0)) /
                        (2.0 * fd_eps);
      const double tol = std::max(3.0 * est.stderr_, 5e-2);
      if (std::abs(est.mean - fd) > tol) {
        std::printf("       feedback mismatch at (%.2f, %.2f, %.2f): %.4f vs fd %.4f\n",
                    x0[0], x0[1], x0[2], est.mean, fd);
      }
      REQUIRE(std::abs(est.mean - fd) <= tol);
    }
  }
}

struct Criterion {
  int id;
  const char* label;
  void (*body)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "operator evaluations match the eigenvalue oracle and saddle certificates",
       criterion_1},
      {2, "barrier nondegeneracy check reproduces known levels and witnesses failure",
       criterion_2},
      {3, "exit-time moments respect factorial bounds and the exact center value",
       criterion_3},
      {4, "Dirichlet solver converges on the 2-d Laplacian problem under refinement",
       criterion_4},
      {5, "game simulation under spectral feedback reproduces solver values",
       criterion_5},
      {6, "regularization continuation gaps decay along the schedule", criterion_6},
      {7, "auxiliary values, time change, rotations, and Girsanov density check out",
       criterion_7},
      {8, "variation barrier supermartingale bound holds with negligible censoring",
       criterion_8},
      {9, "gradient bound constant is finite, stable, and modest for harmonic data",
       criterion_9},
      {10, "pathwise directional derivatives match centered differences", criterion_10},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    g_marks = 0;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body();
    } catch (const std::exception& e) {
      ++g_marks;
      std::printf("       exception: %s\n", e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = g_marks == 0;
    failures += ok ? 0 : 1;
    std::printf("[%s] criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id, c.label,
                secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d of %zu criteria passed\n",
              (int)criteria.size() - failures, criteria.size());
  return failures;
}
