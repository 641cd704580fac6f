#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "hessgame/config.hpp"
#include "hessgame/errors.hpp"
#include "hessgame/fields.hpp"
#include "hessgame/rng.hpp"

using namespace hg;
using fields::ScalarField;

TEST_CASE("field catalog values and analytic gradients") {
  Eigen::VectorXd x(3);
  x << 0.3, -0.2, 0.5;

  const auto c = ScalarField::constant(3, 4.5);
  CHECK(c.value(x) == 4.5);
  CHECK(c.gradient(x).norm() == 0.0);
  CHECK(!c.is_zero());
  CHECK(ScalarField::constant(3, 0.0).is_zero());

  Eigen::VectorXd a(3);
  a << 1.0, 2.0, -1.0;
  const auto lin = ScalarField::linear(3, a, 0.25);
  CHECK(lin.value(x) == doctest::Approx(1.0 * 0.3 + 2.0 * -0.2 - 0.5 + 0.25));
  CHECK((lin.gradient(x) - a).norm() == 0.0);

  const auto h = ScalarField::harmonic_quadratic(3);
  CHECK(h.value(x) == doctest::Approx(0.3 * 0.3 - 0.2 * 0.2));
  CHECK(h.gradient(x)[0] == doctest::Approx(0.6));
  CHECK(h.gradient(x)[1] == doctest::Approx(0.4));
  CHECK(h.gradient(x)[2] == 0.0);
}

TEST_CASE("polynomial gradients match finite differences") {
  std::vector<fields::PolyTerm> terms;
  terms.push_back({1.5, {2, 1, 0}});
  terms.push_back({-0.5, {0, 0, 3}});
  terms.push_back({2.0, {1, 1, 1}});
  const auto p = ScalarField::polynomial(3, terms);

  RandomStream rs(17);
  const double step = 1e-6;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = 2.0 * rs.uniform01() - 1.0;
    const Eigen::VectorXd g = p.gradient(x);
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
      e[i] = step;
      const double fd = (p.value(x + e) - p.value(x - e)) / (2.0 * step);
      CHECK(std::abs(fd - g[i]) < 1e-7 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST_CASE("field descriptions are informative") {
  CHECK(ScalarField::harmonic_quadratic(2).describe().size() > 0);
  CHECK(ScalarField::constant(2, 3.0).describe().find("3") != std::string::npos);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto h = ScalarField::harmonic_quadratic(3);
  Eigen::VectorXd x2(2);
  x2 << 0.1, 0.2;
  CHECK_THROWS_AS(h.value(x2), DimError);
  std::vector<fields::PolyTerm> bad;
  bad.push_back({1.0, {1, 2}});  // two exponents for a 3d field
  CHECK_THROWS_AS(ScalarField::polynomial(3, bad), DimError);
  std::vector<fields::PolyTerm> neg;
  neg.push_back({1.0, {-1, 0, 0}});
  CHECK_THROWS_AS(ScalarField::polynomial(3, neg), Error);
}

TEST_CASE("config round trip covers every section") {
  const std::string text = R"(
# full configuration
[domain]
kind = ellipsoid
dim = 2
semi_axes = 1.5 0.75

[operator]
kind = sum_extremes
k1 = 1
k2 = 1

[data]
f = constant 2
g = polynomial 1 2 0; -1 0 2
discount = 0.1

[solver]
h = 0.125
tol = 1e-7
max_iter = 40
deltas = 0.2 0.1 0
haar_controls = 32
foot_scale = 2

[mc]
dt = 5e-4
n_paths = 250
seed = 99
delta = 0.1
start_points = 0 0; 0.4 -0.2
policy = feedback
fd_step = 0.04
moment_order = 3

[quasi]
lambda = 0.4
kappa = 0.01
theta_b2 = 0.2
k1 = 1.5
horizon = 1.0
eps_list = 0.05 0.1
xi0 = 0 1
n_paths = 300
)";
  const auto cfg = config::parse_config(text);
  CHECK(cfg.domain.kind == "ellipsoid");
  CHECK(cfg.domain.dim == 2);
  CHECK(cfg.solver.deltas.size() == 3);
  CHECK(cfg.mc.start_points.size() == 2);
  CHECK(cfg.mc.policy == "feedback");
  CHECK(cfg.quasi.eps_list.size() == 2);

  const auto dom = cfg.make_domain();
  CHECK(dom.kind() == domain::DomainKind::Ellipsoid);
  const auto spec = cfg.make_operator();
  CHECK(spec.dim() == 2);
  const auto g = cfg.make_field(cfg.data.g);
  Eigen::VectorXd x(2);
  x << 0.5, 0.25;
  // 1 * x1^2 - 1 * x2^2
  CHECK(g.value(x) == doctest::Approx(0.25 - 0.0625));
  const auto params = cfg.make_aux_params();
  CHECK(params.lambda == 0.4);
  CHECK(params.theta == 0.2);
  const auto opts = cfg.make_solve_options();
  CHECK(opts.tol == 1e-7);
  CHECK(opts.haar_controls == 32);
}

TEST_CASE("config parser rejects unknown sections, keys, and bad values") {
  CHECK_THROWS_AS(config::parse_config("[nonsense]\nkind = unit_ball\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config("[domain]\nflavor = sour\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config("[solver]\nh = banana\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config("[domain]\nkind\n"), ConfigError);
  // Errors carry the line number.
  try {
    config::parse_config("[domain]\ndim = 2\nflavor = sour\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("config validation enforces cross-section consistency") {
  // Delta continuation must be non-increasing and inside [0, 1).
  CHECK_THROWS_AS(config::parse_config("[solver]\ndeltas = 0.1 0.2\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_config("[mc]\ndelta = 1.5\n"), ConfigError);
  // Start points must be interior.
  CHECK_THROWS_AS(
      config::parse_config("[domain]\ndim = 2\n[mc]\nstart_points = 2 0\n"),
      ConfigError);
  // xi0 must match the domain dimension.
  CHECK_THROWS_AS(config::parse_config("[domain]\ndim = 3\n[quasi]\nxi0 = 1 0\n"),
                  ConfigError);
  // Ellipsoid needs matching semi-axes.
  CHECK_THROWS_AS(
      config::parse_config("[domain]\nkind = ellipsoid\ndim = 3\nsemi_axes = 1 2\n"),
      ConfigError);
  CHECK_THROWS_AS(config::parse_config("[quasi]\ntheta_b2 = 0.5\n"), ConfigError);
}

TEST_CASE("load_config reports missing files") {
  CHECK_THROWS_AS(config::load_config("/nonexistent/path.cfg"), ConfigError);
}
