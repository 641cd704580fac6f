#pragma once
// Experiment configuration: a flat sectioned key-value text format that
// selects the domain, operator, payoff data, and the solver / Monte Carlo
// / variation parameters. Unknown sections or keys are rejected so typos
// fail loudly. The schema is documented in the README.

#include <cstdint>
#include <string>
#include <vector>

#include "hessgame/domain.hpp"
#include "hessgame/fields.hpp"
#include "hessgame/operators.hpp"
#include "hessgame/quasideriv.hpp"
#include "hessgame/solver.hpp"

namespace hg::config {

struct DomainSection {
  std::string kind = "unit_ball";
  int dim = 2;
  Eigen::VectorXd semi_axes;  // ellipsoid only
};

struct OperatorSection {
  std::string kind = "sum_extremes";
  int k1 = 1, k2 = 1;  // sum_extremes
  int k = 1, j = 1;    // middle_sum
  bool degenerate_ok = false;
};

struct DataSection {
  std::string f = "constant 0";
  std::string g = "constant 0";
  double discount = 0.0;
};

struct SolverSection {
  double h = 1.0 / 16.0;
  double tol = 1e-6;
  int max_iter = 60;
  std::vector<double> deltas = {0.0};
  int haar_controls = 64;
  double foot_scale = 1.0;
};

struct McSection {
  double dt = 1e-3;
  long n_paths = 1000;
  std::uint64_t seed = 20240915;
  double delta = 0.0;
  std::vector<Eigen::VectorXd> start_points;
  std::string policy = "constant";  // constant | feedback
  double fd_step = 0.05;
  int moment_order = 2;
};

struct QuasiSection {
  double lambda = 0.5;
  double kappa = 1e-3;
  double theta_b2 = 1.0 / 6.0;
  double k1 = 1.0;
  double horizon = 2.0;
  std::vector<double> eps_list = {0.1};
  Eigen::VectorXd xi0;
  long n_paths = 2000;
};

struct ExperimentConfig {
  DomainSection domain;
  OperatorSection op;
  DataSection data;
  SolverSection solver;
  McSection mc;
  QuasiSection quasi;
  int threads = 1;

  // Materialization with full module-level validation.
  domain::BarrierDomain make_domain() const;
  ops::OperatorSpec make_operator() const;
  fields::ScalarField make_field(const std::string& text) const;
  quasi::AuxParams make_aux_params() const;
  solver::SolveOptions make_solve_options() const;

  // Re-validates every section; throws ConfigError with a reason.
  void validate() const;
};

// Parses the sectioned key-value format. Lines are `key = value`, comments
// start with '#', sections are `[name]`. Throws ConfigError on unknown
// sections/keys or malformed values.
ExperimentConfig parse_config(const std::string& text);

// Reads the file and parses it; missing file throws ConfigError.
ExperimentConfig load_config(const std::string& path);

}  // namespace hg::config
