#include "hessgame/game.hpp"

#include <cmath>

#include "hessgame/errors.hpp"
#include "hessgame/linalg.hpp"
#include "hessgame/rng.hpp"

namespace hg::game {

namespace {

Eigen::MatrixXd sigma_of(const ops::OperatorSpec& spec, const ops::ControlPair& pair) {
  const linalg::SymMatrix a = ops::diffusion_matrix(spec, pair);
  return linalg::psd_sqrt(linalg::SymMatrix(2.0 * a.mat())).mat();
}

struct PathStats {
  double tau = 0.0;
  double phi_tau = 0.0;
  double payoff = 0.0;
  bool exited = false;
  bool step_limit = false;
  long fallbacks = 0;
};

// Observer contract: initial(x0), step(x_new, pair), exit(x_exit, pair).
struct NullObserver {
  void initial(const Eigen::VectorXd&) {}
  void step(const Eigen::VectorXd&, const ops::ControlPair&) {}
  void exit(const Eigen::VectorXd&, const ops::ControlPair&) {}
};

// One Euler path. Per-step randomness, in order: d normals for the base
// noise, d more when delta > 0, then one uniform for the Brownian-bridge
// boundary-crossing test (only when the step endpoint stays inside). The
// fixed order makes every path a pure function of (seed, path_index).
template <typename Obs>
PathStats run_path(const GameConfig& cfg, const Policy& pol, const Eigen::VectorXd& x0,
                   std::uint64_t path_index, Obs&& obs) {
  const auto& dom = cfg.domain;
  const int d = dom.dim();
  if (x0.size() != d) throw DimError("start point dimension mismatch");
  double psi_x = dom.psi(x0);
  if (psi_x <= 0.0) throw OutsideDomainError("simulated path must start inside the domain");

  RandomStream rng = RandomStream::for_path(cfg.seed, path_index);
  PolicyContext ctx(cfg, pol);
  const double dt = cfg.dt;
  const double sqdt = std::sqrt(dt);
  const long n_max = static_cast<long>(std::ceil(50.0 * dom.sup_psi() / dt));
  const bool has_f = !cfg.f.is_zero();
  const bool discounted = cfg.c > 0.0;

  Eigen::VectorXd x = x0, xn(d), z(d), zt(d), grad(d), sg(d);
  PathStats out;
  double payoff_f = 0.0, phi = 0.0, t = 0.0, disc = 1.0;
  obs.initial(x);

  for (long n = 0; n < n_max; ++n) {
    const ops::ControlPair& pair = ctx.controls_at(x);
    const Eigen::MatrixXd& sigma = ctx.sigma();

    rng.fill_normal(z.data(), d);
    xn.noalias() = sigma * z;
    xn *= sqdt;
    xn += x;
    if (cfg.delta > 0.0) {
      rng.fill_normal(zt.data(), d);
      xn += (cfg.delta * sqdt) * zt;
    }
    const double psi_n = dom.psi(xn);

    if (psi_n <= 0.0) {
      // Sign change: place the exit by linear interpolation of psi across
      // the step, then land exactly on the boundary.
      const double theta = psi_x / (psi_x - psi_n);
      if (has_f) payoff_f += cfg.f.value(x) * disc * theta * dt;
      out.tau = t + theta * dt;
      out.phi_tau = phi + cfg.c * theta * dt;
      const Eigen::VectorXd x_exit = dom.project_to_boundary(x + theta * (xn - x));
      out.payoff = payoff_f + cfg.g.value(x_exit) * std::exp(-out.phi_tau);
      out.exited = true;
      out.fallbacks = ctx.fallbacks();
      obs.exit(x_exit, pair);
      return out;
    }

    // Both endpoints interior: Brownian-bridge test for a mid-step
    // crossing of the psi = 0 level, using the linearized psi dynamics.
    // The barrier gradient is psi_xx * x exactly (psi is quadratic).
    const double u = rng.uniform01();
    grad.noalias() = dom.hess_psi().mat() * x;
    sg.noalias() = sigma.transpose() * grad;
    double s2 = sg.squaredNorm();
    if (cfg.delta > 0.0) s2 += cfg.delta * cfg.delta * grad.squaredNorm();
    if (s2 > 0.0) {
      const double expo = -2.0 * psi_x * psi_n / (dt * s2);
      if (expo > -40.0 && u < std::exp(expo)) {
        if (has_f) payoff_f += cfg.f.value(x) * disc * 0.5 * dt;
        out.tau = t + 0.5 * dt;
        out.phi_tau = phi + cfg.c * 0.5 * dt;
        const Eigen::VectorXd x_exit =
            dom.project_to_boundary(psi_n < psi_x ? xn : x);
        out.payoff = payoff_f + cfg.g.value(x_exit) * std::exp(-out.phi_tau);
        out.exited = true;
        out.fallbacks = ctx.fallbacks();
        obs.exit(x_exit, pair);
        return out;
      }
    }

    if (has_f) payoff_f += cfg.f.value(x) * disc * dt;
    t += dt;
    if (discounted) {
      phi += cfg.c * dt;
      disc = std::exp(-phi);
    }
    x.swap(xn);
    psi_x = psi_n;
    obs.step(x, pair);
  }

  // Step limit: report the path rather than crash; terminal value taken at
  // the boundary projection of the final state.
  out.tau = t;
  out.phi_tau = phi;
  out.payoff = payoff_f + cfg.g.value(dom.project_to_boundary(x)) * std::exp(-phi);
  out.exited = false;
  out.step_limit = true;
  out.fallbacks = ctx.fallbacks();
  return out;
}

}  // namespace

void GameConfig::validate() const {
  const int d = domain.dim();
  if (spec.dim() != d) throw DimError("operator dimension does not match the domain");
  if (f.dim() != d || g.dim() != d) throw DimError("payoff field dimension mismatch");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("delta must lie in [0, 1)");
  if (!(c >= 0.0)) throw ConfigError("discount rate must be nonnegative");
  // Spot-check that data evaluates to finite values on the domain.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int i = -1; i < d; ++i) {
    if (i >= 0) {
      x.setZero();
      x[i] = 0.5 * domain.semi_axes()[i];
    }
    if (!std::isfinite(f.value(x)) || !std::isfinite(g.value(x)))
      throw NonFiniteError("payoff data must be finite on the domain");
  }
}

Policy Policy::constant(ops::ControlPair pair) {
  Policy p(Kind::Constant);
  p.pair_ = std::move(pair);
  return p;
}

Policy Policy::spectral_feedback(std::shared_ptr<const solver::ValueField> field,
                                 double fd_step) {
  if (!field) throw ConfigError("feedback policy requires a value field");
  if (!field->converged)
    throw ConfigError("feedback policy requires a converged value field");
  if (!(fd_step > 0.0)) throw ConfigError("feedback step must be positive");
  Policy p(Kind::SpectralFeedback);
  p.field_ = std::move(field);
  p.fd_step_ = fd_step;
  return p;
}

const ops::ControlPair& Policy::fixed_pair() const {
  if (!pair_) throw ConfigError("policy holds no fixed pair");
  return *pair_;
}

const solver::ValueField& Policy::field() const {
  if (!field_) throw ConfigError("policy holds no value field");
  return *field_;
}

Policy spectral_feedback_policy(std::shared_ptr<const solver::ValueField> field,
                                double fd_step) {
  return Policy::spectral_feedback(std::move(field), fd_step);
}

PolicyContext::PolicyContext(const GameConfig& cfg, const Policy& pol)
    : cfg_(cfg), pol_(pol) {
  if (pol_.kind() == Policy::Kind::Constant) {
    last_ = pol_.fixed_pair();
    ops::validate_pair(cfg_.spec, *last_);
    sigma_ = sigma_of(cfg_.spec, *last_);
  }
}

const ops::ControlPair& PolicyContext::controls_at(const Eigen::VectorXd& x) {
  if (pol_.kind() == Policy::Kind::Constant) return *last_;

  const auto& dom = cfg_.domain;
  const double psi = dom.psi(x);
  const double gnorm = dom.grad_psi(x).norm();
  const double dist = psi / (gnorm + 1e-300);
  const double step = pol_.fd_step();
  if (dist >= step) {
    const linalg::SymMatrix hess = pol_.field().hessian_fd(x, step);
    last_ = ops::optimal_controls(cfg_.spec, hess);
    sigma_ = sigma_of(cfg_.spec, *last_);
    return *last_;
  }
  ++fallbacks_;
  if (!last_) {
    // First decision already within the boundary band: take the Hessian at
    // the point pulled inward along the barrier gradient.
    Eigen::VectorXd x_in = x;
    if (gnorm > 1e-14) x_in += ((step - dist) / gnorm) * dom.grad_psi(x);
    const linalg::SymMatrix hess = pol_.field().hessian_fd(x_in, step);
    last_ = ops::optimal_controls(cfg_.spec, hess);
    sigma_ = sigma_of(cfg_.spec, *last_);
  }
  return *last_;
}

TrajectoryRecord simulate_trajectory(const GameConfig& cfg, const Policy& pol,
                                     const Eigen::VectorXd& x0, std::uint64_t path_index) {
  cfg.validate();
  struct Recorder {
    TrajectoryRecord* rec;
    void initial(const Eigen::VectorXd& x) { rec->states.push_back(x); }
    void step(const Eigen::VectorXd& x, const ops::ControlPair& pair) {
      rec->states.push_back(x);
      rec->controls.push_back(pair);
    }
    void exit(const Eigen::VectorXd& x, const ops::ControlPair& pair) {
      rec->states.push_back(x);
      rec->controls.push_back(pair);
    }
  };
  TrajectoryRecord rec;
  Recorder obs{&rec};
  const PathStats ps = run_path(cfg, pol, x0, path_index, obs);
  rec.tau = ps.tau;
  rec.phi_tau = ps.phi_tau;
  rec.payoff = ps.payoff;
  rec.exited = ps.exited;
  rec.step_limit = ps.step_limit;
  return rec;
}

ValueEstimate estimate_value(const GameConfig& cfg, const Policy& pol,
                             const Eigen::VectorXd& x0, long n_paths) {
  cfg.validate();
  if (n_paths < 2) throw ConfigError("value estimation needs at least 2 paths");
  double sum = 0.0, sumsq = 0.0, sum_tau = 0.0, sumsq_tau = 0.0;
  long hits = 0, fallbacks = 0;
  NullObserver obs;
  for (long i = 0; i < n_paths; ++i) {
    const PathStats ps = run_path(cfg, pol, x0, static_cast<std::uint64_t>(i), obs);
    sum += ps.payoff;
    sumsq += ps.payoff * ps.payoff;
    sum_tau += ps.tau;
    sumsq_tau += ps.tau * ps.tau;
    if (ps.step_limit) ++hits;
    fallbacks += ps.fallbacks;
  }
  ValueEstimate est;
  est.n_paths = n_paths;
  est.step_limit_hits = hits;
  est.policy_fallbacks = fallbacks;
  const double n = static_cast<double>(n_paths);
  est.mean = sum / n;
  est.mean_tau = sum_tau / n;
  est.stderr_ = std::sqrt(std::max(sumsq / n - est.mean * est.mean, 0.0) / (n - 1.0));
  est.stderr_tau =
      std::sqrt(std::max(sumsq_tau / n - est.mean_tau * est.mean_tau, 0.0) / (n - 1.0));
  return est;
}

ExitMomentReport estimate_exit_moments(const GameConfig& cfg, const Policy& pol,
                                       const Eigen::VectorXd& x0, long n_paths, int n_max) {
  cfg.validate();
  if (n_paths < 2) throw ConfigError("moment estimation needs at least 2 paths");
  if (n_max < 1 || n_max > 4) throw ConfigError("moment order must lie in 1..4");
  std::vector<double> sum(n_max, 0.0), sumsq(n_max, 0.0);
  long hits = 0;
  NullObserver obs;
  for (long i = 0; i < n_paths; ++i) {
    const PathStats ps = run_path(cfg, pol, x0, static_cast<std::uint64_t>(i), obs);
    double p = 1.0;
    for (int k = 0; k < n_max; ++k) {
      p *= ps.tau;
      sum[k] += p;
      sumsq[k] += p * p;
    }
    if (ps.step_limit) ++hits;
  }
  ExitMomentReport rep;
  rep.n_paths = n_paths;
  rep.step_limit_hits = hits;
  const double n = static_cast<double>(n_paths);
  for (int k = 0; k < n_max; ++k) {
    MomentEstimate m;
    m.order = k + 1;
    m.mean = sum[k] / n;
    m.stderr_ = std::sqrt(std::max(sumsq[k] / n - m.mean * m.mean, 0.0) / (n - 1.0));
    m.bound = domain::exit_moment_bound(cfg.domain, x0, k + 1);
    rep.moments.push_back(m);
  }
  return rep;
}

}  // namespace hg::game
