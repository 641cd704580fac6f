#include "hessgame/quasideriv.hpp"

#include <cmath>

#include "hessgame/errors.hpp"
#include "hessgame/rng.hpp"

namespace hg::quasi {

namespace {

constexpr double kCensorNorm = 1e8;
constexpr double kTinyDenom = 1e-300;

// Substep control for the variation dynamics. A substep may change xi by
// roughly kStepSafety of its current size. kMinSubstep is only a guard
// against a runaway split; it sits far below any step the stability rule
// asks for at reachable stiffness levels.
constexpr double kStepSafety = 0.1;
constexpr double kMinSubstep = 1e-8;

struct BarrierInputs {
  double psi;
  double psi_xi;            // grad(psi) . xi
  double xi2;               // |xi|^2
  Eigen::VectorXd grad;
  Eigen::VectorXd hess_xi;  // psi_xx * xi
};

BarrierInputs barrier_inputs(const domain::BarrierDomain& dom, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& xi) {
  if (x.size() != dom.dim() || xi.size() != dom.dim())
    throw DimError("auxiliary data dimension mismatch");
  BarrierInputs in;
  in.psi = dom.psi(x);
  in.grad = dom.grad_psi(x);
  in.hess_xi = dom.hess_psi().mat() * xi;
  in.psi_xi = in.grad.dot(xi);
  in.xi2 = xi.squaredNorm();
  return in;
}

double b1_of(const BarrierInputs& in, const AuxParams& p) {
  const double gamma1 = 1.0 + in.psi * (1.0 - in.psi / (4.0 * p.lambda)) / (8.0 * p.lambda);
  const double gamma2 = p.lambda * p.lambda + in.psi * (1.0 - in.psi / (4.0 * p.lambda));
  return gamma2 * (gamma1 * in.xi2 + in.psi_xi * in.psi_xi / in.psi);
}

double b2_of(const BarrierInputs& in, const AuxParams& p) {
  return std::pow(p.lambda, 3.0 * p.theta) * std::pow(in.psi, 1.0 - 2.0 * p.theta) *
         (p.k1 * in.xi2 + in.psi_xi * in.psi_xi / in.psi);
}

}  // namespace

void AuxParams::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("collar depth lambda must lie in (0, 1)");
  if (!(kappa > 0.0 && kappa < lambda * lambda))
    throw ConfigError("stopping level kappa must lie in (0, lambda^2)");
  if (!(theta > 0.0 && theta < 1.0 / 3.0))
    throw ConfigError("interior exponent theta must lie in (0, 1/3)");
  if (!(k1 >= 1.0)) throw ConfigError("interior constant k1 must be at least 1");
}

AuxValues boundary_aux(const domain::BarrierDomain& dom, const AuxParams& params,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                       const Eigen::MatrixXd& sigma_ext) {
  const BarrierInputs in = barrier_inputs(dom, x, xi);
  if (!(in.psi > 0.0 && in.psi < params.lambda))
    throw RegionViolationError("collar auxiliary data needs 0 < psi < lambda");

  const double lambda = params.lambda;
  const double gamma1 = 1.0 + in.psi * (1.0 - in.psi / (4.0 * lambda)) / (8.0 * lambda);
  const double gamma2 = lambda * lambda + in.psi * (1.0 - in.psi / (4.0 * lambda));
  const double g2 = std::max(in.grad.squaredNorm(), kTinyDenom);

  const double b = gamma2 * (gamma1 * in.xi2 + in.psi_xi * in.psi_xi / in.psi);
  const double r = -in.grad.dot(in.hess_xi) / g2 + in.psi_xi / in.psi;
  // Products commute entrywise, so the difference is exactly antisymmetric.
  const Eigen::MatrixXd pmat =
      (in.hess_xi * in.grad.transpose() - in.grad * in.hess_xi.transpose()) / g2;
  const double pi_scale = (1.0 - in.psi / (2.0 * lambda)) / (2.0 * gamma2);
  const Eigen::VectorXd pi =
      pi_scale * (sigma_ext.transpose() * ((in.psi_xi / in.psi) * in.grad + gamma1 * xi));
  return AuxValues{b, r, linalg::SkewMatrix(pmat), pi};
}

AuxValues interior_aux(const domain::BarrierDomain& dom, const AuxParams& params,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                       const Eigen::MatrixXd& sigma_ext) {
  const BarrierInputs in = barrier_inputs(dom, x, xi);
  const double lambda2 = params.lambda * params.lambda;
  if (!(in.psi > lambda2))
    throw RegionViolationError("interior auxiliary data needs psi > lambda^2");

  const double theta = params.theta;
  const double b = b2_of(in, params);
  const double r = theta * in.psi_xi / in.psi;
  const double pi_scale = theta * (1.0 - 2.0 * theta) * (1.0 - 2.0 * theta) /
                          (2.0 * (1.0 - 3.0 * theta) * in.psi * in.psi);
  const Eigen::VectorXd pi =
      pi_scale * (sigma_ext.transpose() * (params.k1 * in.psi * xi + in.psi_xi * in.grad));
  return AuxValues{b, r, linalg::SkewMatrix::zero(dom.dim()), pi};
}

double upper_barrier(const domain::BarrierDomain& dom, const AuxParams& params,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const BarrierInputs in = barrier_inputs(dom, x, xi);
  if (!(in.psi > 0.0)) throw OutsideDomainError("barrier requires an interior point");
  double b = 0.0;
  if (in.psi < params.lambda) b += b1_of(in, params);
  if (in.psi >= params.lambda * params.lambda) b += b2_of(in, params);
  return b;
}

double lower_barrier(const domain::BarrierDomain& dom, const AuxParams& params,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const BarrierInputs in = barrier_inputs(dom, x, xi);
  if (!(in.psi > 0.0)) throw OutsideDomainError("barrier requires an interior point");
  const double lambda2 = params.lambda * params.lambda;
  if (in.psi < lambda2) return b1_of(in, params);
  if (in.psi > params.lambda) return b2_of(in, params);
  return std::min(b1_of(in, params), b2_of(in, params));
}

Regime initial_regime(double psi, const AuxParams& params) {
  return psi <= params.lambda * params.lambda ? Regime::Boundary : Regime::Interior;
}

Regime switch_regime(Regime current, double psi, const AuxParams& params) {
  if (current == Regime::Boundary) {
    return psi >= params.lambda ? Regime::Interior : Regime::Boundary;
  }
  return psi <= params.lambda * params.lambda ? Regime::Boundary : Regime::Interior;
}

QuasiPath simulate_quasi_system(const game::GameConfig& cfg, const game::Policy& pol,
                                const AuxParams& params, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& xi0, std::uint64_t path_index) {
  cfg.validate();
  params.validate();
  const auto& dom = cfg.domain;
  const int d = dom.dim();
  if (x0.size() != d || xi0.size() != d) throw DimError("start state dimension mismatch");
  double psi = dom.psi(x0);
  if (!(psi > params.kappa))
    throw RegionViolationError("variation path must start above the stopping level");

  RandomStream rng = RandomStream::for_path(cfg.seed, path_index);
  game::PolicyContext ctx(cfg, pol);
  const double dt = cfg.dt;
  const long n_max = static_cast<long>(std::ceil(50.0 * dom.sup_psi() / dt));
  const bool has_delta = cfg.delta > 0.0;
  const int d1 = has_delta ? 2 * d : d;

  QuasiPath path;
  QuasiState s;
  s.x = x0;
  s.xi = xi0;
  s.regime = initial_regime(psi, params);
  path.states.push_back(s);

  Eigen::MatrixXd sigma_ext(d, d1);
  if (has_delta)
    sigma_ext.rightCols(d) = cfg.delta * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd z(d), dw(d1), dx(d);

  for (long n = 0; n < n_max; ++n) {
    ctx.controls_at(s.x);
    sigma_ext.leftCols(d) = ctx.sigma();
    const double signorm = sigma_ext.norm();

    // The collar coefficients scale like 1/psi, so a fixed step destroys
    // the barrier estimates near the stopping level. Split the macro step
    // so that each substep perturbs xi by a bounded relative amount. All
    // ratios below are 0-homogeneous in xi, keeping the substep pattern,
    // and hence the drawn noise, invariant under scaling of xi.
    double remaining = dt;
    while (remaining > 0.0) {
      s.regime = switch_regime(s.regime, psi, params);
      const AuxValues aux = s.regime == Regime::Boundary
                                ? boundary_aux(dom, params, s.x, s.xi, sigma_ext)
                                : interior_aux(dom, params, s.x, s.xi, sigma_ext);

      const double scale = std::max(s.xi.norm(), 1e-300);
      const double diff_rel = (std::abs(aux.r) + aux.p.mat().norm()) * signorm / scale;
      const double drift_rel = (sigma_ext * aux.pi).norm() / scale;
      double dt_loc = remaining;
      if (diff_rel > 0.0)
        dt_loc = std::min(dt_loc, (kStepSafety / diff_rel) * (kStepSafety / diff_rel));
      if (drift_rel > 0.0) dt_loc = std::min(dt_loc, kStepSafety / drift_rel);
      dt_loc = std::max(dt_loc, kMinSubstep * dt);
      if (dt_loc >= 0.5 * remaining) dt_loc = remaining;
      const double sq_loc = std::sqrt(dt_loc);

      rng.fill_normal(z.data(), d);
      dw.head(d) = sq_loc * z;
      if (has_delta) {
        rng.fill_normal(z.data(), d);
        dw.tail(d) = sq_loc * z;
      }
      path.pi_path.push_back(aux.pi);
      path.dw_path.push_back(dw);
      path.dt_path.push_back(dt_loc);

      dx = sigma_ext * dw;
      QuasiState next;
      next.x = s.x + dx;
      next.xi = s.xi + aux.r * dx + aux.p.mat() * dx - dt_loc * (sigma_ext * aux.pi);
      next.zeta = s.zeta + aux.pi.dot(dw);
      next.xi_d1 = s.xi_d1 + 2.0 * aux.r * cfg.c * dt_loc;
      const double phi = cfg.c * s.t;
      next.xi_d3 = s.xi_d3 + std::exp(-phi) *
                                 (cfg.f.gradient(s.x).dot(s.xi) +
                                  (2.0 * aux.r - s.xi_d1 + s.zeta) * cfg.f.value(s.x)) *
                                 dt_loc;
      next.t = s.t + dt_loc;
      next.regime = s.regime;

      const double xi_norm = next.xi.norm();
      if (!std::isfinite(xi_norm) || xi_norm >= kCensorNorm) {
        path.states.push_back(next);
        path.censored = true;
        return path;
      }

      const double psi_next = dom.psi(next.x);
      if (psi_next <= params.kappa) {
        // Pull the terminal state back onto the kappa level by linear
        // interpolation across the substep.
        const double w = (psi - params.kappa) / (psi - psi_next);
        QuasiState stop;
        stop.x = s.x + w * (next.x - s.x);
        stop.xi = s.xi + w * (next.xi - s.xi);
        stop.zeta = s.zeta + w * (next.zeta - s.zeta);
        stop.xi_d1 = s.xi_d1 + w * (next.xi_d1 - s.xi_d1);
        stop.xi_d3 = s.xi_d3 + w * (next.xi_d3 - s.xi_d3);
        stop.t = s.t + w * dt_loc;
        stop.regime = s.regime;
        if (dom.psi(stop.x) <= 0.0) {
          // A jump so large the interpolation overshot the boundary.
          path.states.push_back(next);
          path.censored = true;
          return path;
        }
        path.states.push_back(stop);
        path.tau_kappa = stop.t;
        path.stopped = true;
        return path;
      }

      s = std::move(next);
      psi = psi_next;
      remaining -= dt_loc;
    }
    path.states.push_back(s);
  }
  path.step_limit = true;
  return path;
}

double time_change(double r, double eps) {
  return 1.0 + std::atan(2.0 * M_PI * eps * r) / M_PI;
}

Eigen::MatrixXd rotation(const linalg::SkewMatrix& p, double eps) {
  return linalg::skew_exp(p, eps);
}

double girsanov_weight(const QuasiPath& path, double eps) {
  if (path.pi_path.size() != path.dw_path.size() ||
      path.pi_path.size() != path.dt_path.size())
    throw DimError("girsanov weight needs matched pi, noise, and step sequences");
  double logp = 0.0;
  for (std::size_t n = 0; n < path.pi_path.size(); ++n) {
    logp += eps * path.pi_path[n].dot(path.dw_path[n]) -
            0.5 * eps * eps * path.pi_path[n].squaredNorm() * path.dt_path[n];
  }
  return std::exp(logp);
}

SupermartingaleReport check_supermartingale(const game::GameConfig& cfg,
                                            const game::Policy& pol,
                                            const AuxParams& params,
                                            const Eigen::VectorXd& x0,
                                            const Eigen::VectorXd& xi0, long n_paths,
                                            double horizon) {
  if (n_paths < 2) throw ConfigError("supermartingale check needs at least 2 paths");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  params.validate();

  SupermartingaleReport rep;
  rep.n_paths = n_paths;
  rep.b_upper_start = upper_barrier(cfg.domain, params, x0, xi0);

  const std::vector<double> fractions = {0.125, 0.25, 0.5, 0.75, 1.0};
  const std::size_t n_h = fractions.size();
  std::vector<double> sum(n_h, 0.0), sumsq(n_h, 0.0);
  std::vector<long> count(n_h, 0);

  for (long i = 0; i < n_paths; ++i) {
    const QuasiPath path =
        simulate_quasi_system(cfg, pol, params, x0, xi0, static_cast<std::uint64_t>(i));
    if (path.censored) {
      ++rep.censored;
      continue;
    }
    if (path.step_limit) ++rep.step_limit_hits;
    for (std::size_t k = 0; k < n_h; ++k) {
      const double cap = fractions[k] * horizon;
      const QuasiState* at;
      if (path.stopped && path.tau_kappa <= cap) {
        at = &path.states.back();
      } else {
        std::size_t idx = static_cast<std::size_t>(std::floor(cap / cfg.dt));
        if (idx >= path.states.size()) idx = path.states.size() - 1;
        at = &path.states[idx];
      }
      const double b = lower_barrier(cfg.domain, params, at->x, at->xi);
      sum[k] += b;
      sumsq[k] += b * b;
      ++count[k];
    }
  }

  rep.pass = true;
  for (std::size_t k = 0; k < n_h; ++k) {
    HorizonStat hs;
    hs.horizon = fractions[k] * horizon;
    hs.n_paths = count[k];
    if (count[k] >= 2) {
      const double n = static_cast<double>(count[k]);
      hs.mean = sum[k] / n;
      hs.stderr_ = std::sqrt(std::max(sumsq[k] / n - hs.mean * hs.mean, 0.0) / (n - 1.0));
    }
    const double rel = hs.stderr_ / std::max(hs.mean, kTinyDenom);
    hs.pass = count[k] >= 2 &&
              hs.mean <= 2.0 * rep.b_upper_start * (1.0 + 3.0 * rel);
    rep.pass = rep.pass && hs.pass;
    rep.horizons.push_back(hs);
  }
  return rep;
}

DerivativeEstimate estimate_directional_derivative(const game::GameConfig& cfg,
                                                   const solver::ValueField& field,
                                                   const game::Policy& pol,
                                                   const AuxParams& params,
                                                   const Eigen::VectorXd& x0,
                                                   const Eigen::VectorXd& xi0,
                                                   long n_paths) {
  if (n_paths < 2) throw ConfigError("derivative estimation needs at least 2 paths");
  double sum = 0.0, sumsq = 0.0;
  DerivativeEstimate est;
  for (long i = 0; i < n_paths; ++i) {
    const QuasiPath path =
        simulate_quasi_system(cfg, pol, params, x0, xi0, static_cast<std::uint64_t>(i));
    if (path.censored) {
      ++est.censored;
      continue;
    }
    if (path.step_limit) ++est.step_limit_hits;
    const QuasiState& s = path.states.back();
    const double phi = cfg.c * s.t;
    const double u = field.value_at(s.x);
    const Eigen::VectorXd du = field.gradient_at(s.x);
    const double v = std::exp(-phi) * (du.dot(s.xi) + (s.zeta - s.xi_d1) * u) + s.xi_d3;
    sum += v;
    sumsq += v * v;
    ++est.n_paths;
  }
  if (est.n_paths >= 2) {
    const double n = static_cast<double>(est.n_paths);
    est.mean = sum / n;
    est.stderr_ = std::sqrt(std::max(sumsq / n - est.mean * est.mean, 0.0) / (n - 1.0));
  }
  return est;
}

GradientBoundReport gradient_bound_check(const solver::ValueField& field,
                                         const domain::BarrierDomain& dom,
                                         const AuxParams& params) {
  params.validate();
  const auto& grid = *field.grid;
  const int d = grid.dim();
  if (d != dom.dim()) throw DimError("field and domain dimension mismatch");
  const double step = grid.h() / 2.0;

  GradientBoundReport rep;
  rep.argmax_point = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(d) + 2);

  for (long flat : grid.interior_nodes()) {
    const Eigen::VectorXd x = grid.point(flat);
    const double psi = dom.psi(x);
    if (psi <= params.kappa) continue;
    const Eigen::VectorXd grad = dom.grad_psi(x);
    const double gnorm = grad.norm();

    dirs.clear();
    for (int i = 0; i < d; ++i) dirs.push_back(Eigen::VectorXd::Unit(d, i));
    if (gnorm > 1e-8) {
      const Eigen::VectorXd normal = grad / gnorm;
      dirs.push_back(normal);
      // Most boundary-parallel coordinate direction, made tangential.
      int jmin = 0;
      for (int j = 1; j < d; ++j)
        if (std::abs(normal[j]) < std::abs(normal[jmin])) jmin = j;
      Eigen::VectorXd tang = Eigen::VectorXd::Unit(d, jmin);
      tang -= normal.dot(tang) * normal;
      const double tnorm = tang.norm();
      if (tnorm > 1e-8) dirs.push_back(tang / tnorm);
    }

    for (const Eigen::VectorXd& xi : dirs) {
      const double deriv =
          (field.value_at(x + step * xi) - field.value_at(x - step * xi)) / (2.0 * step);
      const double denom = 1.0 + std::abs(grad.dot(xi)) / std::sqrt(psi);
      const double ratio = std::abs(deriv) / denom;
      ++rep.n_samples;
      if (ratio > rep.fitted_n) {
        rep.fitted_n = ratio;
        rep.argmax_point = x;
      }
    }
  }
  return rep;
}

}  // namespace hg::quasi
