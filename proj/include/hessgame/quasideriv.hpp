#pragma once
// First-variation (quasiderivative) machinery: auxiliary barrier data in
// the boundary collar and the interior, the coupled state/variation SDE
// system with regime switching, time-change and measure-change factors,
// supermartingale verification, and the pathwise directional-derivative
// estimator for the value function.

#include <cstdint>
#include <vector>

#include "hessgame/domain.hpp"
#include "hessgame/game.hpp"
#include "hessgame/linalg.hpp"
#include "hessgame/solver.hpp"

namespace hg::quasi {

struct AuxParams {
  double lambda = 0.5;        // collar depth; collar is {psi < lambda}
  double theta = 1.0 / 6.0;   // interior barrier exponent, in (0, 1/3)
  double k1 = 1.0;            // interior barrier constant, >= 1
  double kappa = 1e-3;        // stopping level for tau_kappa, in (0, lambda^2)

  void validate() const;
};

// Auxiliary data at one (x, xi): the barrier value B, the time-change rate
// r, the rotation generator P, and the measure-change vector pi (one entry
// per column of the extended diffusion factor).
struct AuxValues {
  double b;
  double r;
  linalg::SkewMatrix p;
  Eigen::VectorXd pi;
};

// Collar version (requires 0 < psi(x) < lambda). sigma_ext holds the
// extended diffusion columns; pass a d x 0 matrix when only (b, r, p) are
// needed.
AuxValues boundary_aux(const domain::BarrierDomain& dom, const AuxParams& params,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                       const Eigen::MatrixXd& sigma_ext);

// Interior version (requires psi(x) > lambda^2).
AuxValues interior_aux(const domain::BarrierDomain& dom, const AuxParams& params,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                       const Eigen::MatrixXd& sigma_ext);

// Barrier combinations on the whole domain. The upper barrier adds the two
// branch values where their regions overlap; the lower barrier takes the
// collar value below lambda^2, the minimum on the overlap, and the
// interior value above lambda.
double upper_barrier(const domain::BarrierDomain& dom, const AuxParams& params,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& xi);
double lower_barrier(const domain::BarrierDomain& dom, const AuxParams& params,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

// Which auxiliary branch drives the variation dynamics. Switching is
// hysteretic so trajectories do not chatter on a threshold: the boundary
// branch engages at psi <= lambda^2 and persists until psi >= lambda.
enum class Regime { Boundary, Interior };

Regime initial_regime(double psi, const AuxParams& params);
Regime switch_regime(Regime current, double psi, const AuxParams& params);

// Augmented state of the variation system.
struct QuasiState {
  Eigen::VectorXd x;    // controlled state
  Eigen::VectorXd xi;   // first variation of x
  double zeta = 0.0;    // variation of the Girsanov density
  double xi_d1 = 0.0;   // variation of the accumulated discount
  double xi_d3 = 0.0;   // variation of the running payoff
  double t = 0.0;
  Regime regime = Regime::Interior;
};

struct QuasiPath {
  // states sits on the uniform macro grid (index n = time n * dt); the
  // pi/dw/dt triples record every integration substep, which refines the
  // macro grid adaptively where the collar coefficients get stiff.
  std::vector<QuasiState> states;
  std::vector<Eigen::VectorXd> pi_path;  // pi used on substep n
  std::vector<Eigen::VectorXd> dw_path;  // noise increment of substep n
  std::vector<double> dt_path;           // length of substep n
  double tau_kappa = 0.0;  // stopping time, set when stopped is true
  bool stopped = false;    // reached the kappa level
  bool censored = false;   // |xi| blew past the censoring threshold
  bool step_limit = false;
};

// Simulates the coupled (x, xi, zeta, xi_d1, xi_d3) system under the given
// policy until psi drops to kappa (the final recorded state is
// interpolated back onto that level), the variation is censored at
// |xi| >= 1e8, or the step budget runs out. Noise consumption per step
// matches the game module: d normals plus d more when delta > 0.
QuasiPath simulate_quasi_system(const game::GameConfig& cfg, const game::Policy& pol,
                                const AuxParams& params, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& xi0, std::uint64_t path_index);

// Rate of the perturbed time change. The slope constant 2 pi inside the
// arctangent keeps theta'(0) = 2 r.
double time_change(double r, double eps);

// Rotation exp(eps * P) applied to the noise.
Eigen::MatrixXd rotation(const linalg::SkewMatrix& p, double eps);

// Discrete Girsanov density along a recorded path:
// exp(sum eps pi . dw - 1/2 sum |eps pi|^2 dt).
double girsanov_weight(const QuasiPath& path, double eps);

struct HorizonStat {
  double horizon = 0.0;  // cap on the stopping time for this row
  double mean = 0.0;     // E lower_barrier(x_gamma, xi_gamma)
  double stderr_ = 0.0;
  long n_paths = 0;
  bool pass = false;
};

struct SupermartingaleReport {
  double b_upper_start = 0.0;  // upper_barrier at (x0, xi0)
  std::vector<HorizonStat> horizons;
  long n_paths = 0;
  long censored = 0;
  long step_limit_hits = 0;
  bool pass = false;  // every horizon row within the budgeted bound
};

// Checks E lower_barrier(x_gamma, xi_gamma) <= 2 * upper_barrier(x0, xi0)
// at gamma = tau_kappa capped by a grid of horizons (with a three-sigma
// sampling allowance). Censored paths are excluded from the means and
// reported.
SupermartingaleReport check_supermartingale(const game::GameConfig& cfg,
                                            const game::Policy& pol,
                                            const AuxParams& params,
                                            const Eigen::VectorXd& x0,
                                            const Eigen::VectorXd& xi0, long n_paths,
                                            double horizon);

struct DerivativeEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n_paths = 0;   // paths contributing to the mean
  long censored = 0;
  long step_limit_hits = 0;
};

// Pathwise estimator of the directional derivative of the value function
// at x0 along xi0, evaluated on the solved field:
//   exp(-phi) [grad(u) . xi + (zeta - xi_d1) u] + xi_d3  at tau_kappa.
DerivativeEstimate estimate_directional_derivative(const game::GameConfig& cfg,
                                                   const solver::ValueField& field,
                                                   const game::Policy& pol,
                                                   const AuxParams& params,
                                                   const Eigen::VectorXd& x0,
                                                   const Eigen::VectorXd& xi0,
                                                   long n_paths);

struct GradientBoundReport {
  double fitted_n = 0.0;  // max |D_xi u| / (1 + |psi_(xi)| psi^(-1/2))
  long n_samples = 0;
  Eigen::VectorXd argmax_point;
};

// Scans grid nodes with psi > kappa and a small direction set (axes, the
// barrier normal, one tangential direction) and fits the smallest N with
// |D_xi u| <= N (|xi| + |psi_(xi)| psi^(-1/2)) for unit xi.
GradientBoundReport gradient_bound_check(const solver::ValueField& field,
                                         const domain::BarrierDomain& dom,
                                         const AuxParams& params);

}  // namespace hg::quasi
