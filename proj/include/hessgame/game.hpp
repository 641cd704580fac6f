#pragma once
// Monte Carlo simulation of the controlled degenerate diffusion: exit
// times, discounted payoffs, and policy-value estimation. Dynamics are
// drift-free with diffusion factor psd_sqrt(2 a(alpha, beta)) plus an
// optional independent delta * I noise channel.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "hessgame/domain.hpp"
#include "hessgame/fields.hpp"
#include "hessgame/operators.hpp"
#include "hessgame/solver.hpp"

namespace hg::game {

struct GameConfig {
  domain::BarrierDomain domain;
  ops::OperatorSpec spec;
  fields::ScalarField f;  // running payoff
  fields::ScalarField g;  // terminal payoff
  double c = 0.0;         // constant discount rate
  double delta = 0.0;     // regularization noise level, in [0, 1)
  double dt = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

// A playable control rule: either a fixed pair or spectral feedback that
// recomputes the saddle controls from the numerical Hessian of a solved
// value field at each state.
class Policy {
 public:
  enum class Kind { Constant, SpectralFeedback };

  static Policy constant(ops::ControlPair pair);
  static Policy spectral_feedback(std::shared_ptr<const solver::ValueField> field,
                                  double fd_step);

  Kind kind() const { return kind_; }
  const ops::ControlPair& fixed_pair() const;
  const solver::ValueField& field() const;
  double fd_step() const { return fd_step_; }

 private:
  explicit Policy(Kind kind) : kind_(kind) {}
  Kind kind_;
  std::optional<ops::ControlPair> pair_;
  std::shared_ptr<const solver::ValueField> field_;
  double fd_step_ = 0.0;
};

// Per-path control selector with the near-boundary fallback state.
class PolicyContext {
 public:
  PolicyContext(const GameConfig& cfg, const Policy& pol);
  // Controls at state x; within fd_step of the boundary the feedback
  // policy reuses the last pair chosen strictly inside (fallback counted).
  const ops::ControlPair& controls_at(const Eigen::VectorXd& x);
  // Diffusion factor psd_sqrt(2 a) for the pair from the latest
  // controls_at call; cached so constant policies factor once.
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  long fallbacks() const { return fallbacks_; }

 private:
  const GameConfig& cfg_;
  const Policy& pol_;
  std::optional<ops::ControlPair> last_;
  Eigen::MatrixXd sigma_;
  long fallbacks_ = 0;
};

struct TrajectoryRecord {
  std::vector<Eigen::VectorXd> states;  // x_0 .. x_exit
  std::vector<ops::ControlPair> controls;
  double tau = 0.0;
  double phi_tau = 0.0;
  double payoff = 0.0;
  bool exited = false;
  bool step_limit = false;
};

// Euler-Maruyama path from x0 with the per-path stream derived from
// (cfg.seed, path_index). Exit is detected by a sign change of psi with a
// Brownian-bridge crossing test between strictly interior endpoints, and
// the exit state is placed on the boundary by psi-linear interpolation.
TrajectoryRecord simulate_trajectory(const GameConfig& cfg, const Policy& pol,
                                     const Eigen::VectorXd& x0, std::uint64_t path_index);

struct ValueEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double mean_tau = 0.0;
  double stderr_tau = 0.0;
  long n_paths = 0;
  long step_limit_hits = 0;
  long policy_fallbacks = 0;
};

ValueEstimate estimate_value(const GameConfig& cfg, const Policy& pol,
                             const Eigen::VectorXd& x0, long n_paths);

struct MomentEstimate {
  int order = 1;
  double mean = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;  // n! sup(psi)^(n-1) psi(x0)
};

struct ExitMomentReport {
  std::vector<MomentEstimate> moments;
  long n_paths = 0;
  long step_limit_hits = 0;
};

ExitMomentReport estimate_exit_moments(const GameConfig& cfg, const Policy& pol,
                                       const Eigen::VectorXd& x0, long n_paths, int n_max);

Policy spectral_feedback_policy(std::shared_ptr<const solver::ValueField> field,
                                double fd_step);

}  // namespace hg::game
