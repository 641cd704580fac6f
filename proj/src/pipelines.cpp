#include "hessgame/pipelines.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hessgame/errors.hpp"
#include "hessgame/game.hpp"
#include "hessgame/quasideriv.hpp"
#include "hessgame/rng.hpp"

namespace hg::pipelines {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Materialized {
  domain::BarrierDomain dom;
  ops::OperatorSpec spec;
  fields::ScalarField f;
  fields::ScalarField g;
};

Materialized materialize(const config::ExperimentConfig& cfg) {
  return Materialized{cfg.make_domain(), cfg.make_operator(), cfg.make_field(cfg.data.f),
                      cfg.make_field(cfg.data.g)};
}

std::vector<Eigen::VectorXd> start_points(const config::ExperimentConfig& cfg) {
  if (!cfg.mc.start_points.empty()) return cfg.mc.start_points;
  return {Eigen::VectorXd::Zero(cfg.domain.dim)};
}

Eigen::VectorXd direction_xi0(const config::ExperimentConfig& cfg) {
  if (cfg.quasi.xi0.size() == cfg.domain.dim) return cfg.quasi.xi0;
  return Eigen::VectorXd::Unit(cfg.domain.dim, 0);
}

// Deterministic reference pair for constant-policy runs: the spectral
// controls of a generic diagonal with distinct eigenvalues.
ops::ControlPair reference_pair(const ops::OperatorSpec& spec) {
  Eigen::VectorXd diag(spec.dim());
  for (int i = 0; i < spec.dim(); ++i) diag[i] = static_cast<double>(i + 1);
  return ops::optimal_controls(spec, linalg::SymMatrix::diag(diag));
}

game::GameConfig game_config(const config::ExperimentConfig& cfg, const Materialized& m) {
  return game::GameConfig{m.dom,  m.spec,       m.f,       m.g,
                          cfg.data.discount, cfg.mc.delta, cfg.mc.dt, cfg.mc.seed};
}

game::Policy make_policy(const config::ExperimentConfig& cfg,
                         std::shared_ptr<const solver::ValueField> field) {
  if (cfg.mc.policy == "feedback") {
    if (!field)
      throw ConfigError("feedback policy needs a solved field in this pipeline");
    return game::spectral_feedback_policy(std::move(field), cfg.mc.fd_step);
  }
  ops::OperatorSpec spec = cfg.make_operator();
  return game::Policy::constant(reference_pair(spec));
}

std::ofstream open_out(const std::string& out_dir, const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(out_dir) / name;
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write output file '" + p.string() + "'");
  return os;
}

void add_row(RunOutcome& out, CheckRow row) {
  if (!row.pass) ++out.failed;
  out.rows.push_back(std::move(row));
}

void write_rows_csv(const RunOutcome& out, std::ofstream& os) {
  os << "check,anchor,status,value,threshold,detail\n";
  for (const auto& r : out.rows) {
    os << r.name << ',' << r.anchor << ',' << (r.pass ? "pass" : "FAIL") << ','
       << fmt(r.value) << ',' << fmt(r.threshold) << ',' << r.detail << '\n';
  }
}

std::string point_label(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < x.size(); ++i) {
    if (i) os << ' ';
    os << fmt_short(x[i]);
  }
  os << ')';
  return os.str();
}

solver::ContinuationResult solve_chain(const config::ExperimentConfig& cfg,
                                       const Materialized& m) {
  return solver::delta_continuation(m.spec, m.dom, m.f, m.g, cfg.solver.h,
                                    cfg.solver.deltas, cfg.make_solve_options());
}

}  // namespace

RunOutcome run_solve(const config::ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutcome out;
  const Materialized m = materialize(cfg);
  const solver::ContinuationResult cont = solve_chain(cfg, m);
  const solver::ValueField& field = cont.fields.back();

  {
    auto os = open_out(out_dir, "solution.csv");
    solver::write_field_csv(field, os);
  }
  {
    auto os = open_out(out_dir, "solution_diagnostics.txt");
    for (const auto& fl : cont.fields) solver::write_field_diagnostics(fl, os);
  }
  {
    auto os = open_out(out_dir, "continuation.csv");
    os << "delta,gap_to_final,residual,iterations,converged\n";
    for (std::size_t i = 0; i < cont.fields.size(); ++i) {
      const auto& fl = cont.fields[i];
      os << fmt(fl.delta) << ',' << fmt(cont.gaps[i]) << ',' << fmt(fl.residual) << ','
         << fl.iterations << ',' << (fl.converged ? 1 : 0) << '\n';
    }
  }

  add_row(out, CheckRow{"isaacs-residual", "discrete-isaacs-equation", field.converged,
                        field.residual, cfg.solver.tol,
                        "max interior residual after policy iteration"});

  if (cont.gaps.size() >= 3) {
    double max_excess = 0.0;
    for (std::size_t i = 0; i + 2 < cont.gaps.size(); ++i)
      max_excess = std::max(max_excess, cont.gaps[i + 1] - 1.1 * cont.gaps[i]);
    add_row(out, CheckRow{"continuation-trend", "vanishing-viscosity-limit",
                          max_excess <= 1e-12, max_excess, 0.0,
                          "regularization gaps non-increasing within 10% slack"});
  }

  if (m.f.is_zero()) {
    const auto& grid = *field.grid;
    double gmin = 1e300, gmax = -1e300, umin = 1e300, umax = -1e300;
    for (long flat : grid.interior_nodes()) {
      umin = std::min(umin, field.values[flat]);
      umax = std::max(umax, field.values[flat]);
      gmin = std::min(gmin, grid.boundary_data()[flat]);
      gmax = std::max(gmax, grid.boundary_data()[flat]);
    }
    const double viol = std::max({umax - gmax, gmin - umin, 0.0});
    add_row(out, CheckRow{"maximum-principle", "monotone-scheme-comparison",
                          viol <= cfg.solver.tol, viol, cfg.solver.tol,
                          "interior values within boundary data range"});
  }
  return out;
}

RunOutcome run_simulate(const config::ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutcome out;
  const Materialized m = materialize(cfg);
  const game::GameConfig gc = game_config(cfg, m);

  std::shared_ptr<const solver::ValueField> field;
  if (cfg.mc.policy == "feedback") {
    auto cont = solve_chain(cfg, m);
    field = std::make_shared<const solver::ValueField>(std::move(cont.fields.back()));
  }
  const game::Policy pol = make_policy(cfg, field);

  auto game_csv = open_out(out_dir, "game.csv");
  const int d = cfg.domain.dim;
  for (int i = 0; i < d; ++i) game_csv << 'x' << (i + 1) << ',';
  game_csv << "n_paths,mean,stderr,mean_tau,bound_tau,step_limit_hits\n";

  auto mom_csv = open_out(out_dir, "moments.csv");
  for (int i = 0; i < d; ++i) mom_csv << 'x' << (i + 1) << ',';
  mom_csv << "order,mean,stderr,bound,pass\n";

  int pi = 0;
  for (const auto& x0 : start_points(cfg)) {
    const game::ValueEstimate est = game::estimate_value(gc, pol, x0, cfg.mc.n_paths);
    const game::ExitMomentReport mom =
        game::estimate_exit_moments(gc, pol, x0, cfg.mc.n_paths, cfg.mc.moment_order);

    for (int i = 0; i < d; ++i) game_csv << fmt(x0[i]) << ',';
    game_csv << est.n_paths << ',' << fmt(est.mean) << ',' << fmt(est.stderr_) << ','
             << fmt(est.mean_tau) << ','
             << fmt(domain::exit_moment_bound(m.dom, x0, 1)) << ','
             << est.step_limit_hits << '\n';

    for (const auto& mo : mom.moments) {
      const bool pass = mo.mean <= mo.bound + 3.0 * mo.stderr_;
      for (int i = 0; i < d; ++i) mom_csv << fmt(x0[i]) << ',';
      mom_csv << mo.order << ',' << fmt(mo.mean) << ',' << fmt(mo.stderr_) << ','
              << fmt(mo.bound) << ',' << (pass ? 1 : 0) << '\n';
      add_row(out, CheckRow{"exit-moment-" + std::to_string(mo.order) + "-p" +
                                std::to_string(pi),
                            "exit-moment-bound", pass, mo.mean,
                            mo.bound + 3.0 * mo.stderr_,
                            "start " + point_label(x0)});
    }
    ++pi;
  }
  return out;
}

RunOutcome run_verify(const config::ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutcome out;
  const Materialized m = materialize(cfg);
  RandomStream rng(cfg.mc.seed);

  const domain::GeometryReport geo =
      domain::check_geometry_assumption(m.dom, m.spec, 2000, 256, rng);
  std::string detail = "max of tr(a psi_xx) + 1 over sampled pairs and points";
  if (!geo.pass && geo.witness) detail += "; witness at " + point_label(geo.witness_point);
  add_row(out, CheckRow{"geometry-assumption", "barrier-generator-bound", geo.pass,
                        geo.max_violation, 0.0, detail});

  const domain::InvarianceReport inv = domain::check_invariance_assumption(m.spec, 200, rng);
  add_row(out, CheckRow{"orthogonal-invariance", "rotation-invariant-operator", inv.pass,
                        inv.max_residual, 1e-8,
                        "max |H(q' gamma q) - H(gamma)| over sampled (gamma, q)"});

  double min_beta_gap = 1e300, max_alpha_gap = -1e300;
  const int d = cfg.domain.dim;
  for (int s = 0; s < 100; ++s) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
    const auto [bg, ag] = ops::saddle_gap(m.spec, linalg::SymMatrix(a), 100, rng);
    min_beta_gap = std::min(min_beta_gap, bg);
    max_alpha_gap = std::max(max_alpha_gap, ag);
  }
  add_row(out, CheckRow{"saddle-lower-certificate", "inf-sup-representation",
                        min_beta_gap >= -1e-9, min_beta_gap, -1e-9,
                        "no sampled minimizer pushes below the spectral value"});
  add_row(out, CheckRow{"saddle-upper-certificate", "inf-sup-representation",
                        max_alpha_gap <= 1e-9, max_alpha_gap, 1e-9,
                        "no sampled maximizer beats the spectral value"});

  const quasi::AuxParams params = cfg.make_aux_params();
  const game::GameConfig gc = game_config(cfg, m);
  const game::Policy pol = game::Policy::constant(reference_pair(m.spec));
  const Eigen::VectorXd x0 = start_points(cfg).front();
  const Eigen::VectorXd xi0 = direction_xi0(cfg);
  const quasi::SupermartingaleReport sm = quasi::check_supermartingale(
      gc, pol, params, x0, xi0, cfg.quasi.n_paths, cfg.quasi.horizon);
  double worst_mean = 0.0;
  for (const auto& hs : sm.horizons) worst_mean = std::max(worst_mean, hs.mean);
  add_row(out, CheckRow{"supermartingale-barrier", "variation-barrier-decay", sm.pass,
                        worst_mean, 2.0 * sm.b_upper_start,
                        "E lower barrier at stopped states vs twice the start value"});
  const double cens_frac =
      static_cast<double>(sm.censored) / static_cast<double>(sm.n_paths);
  add_row(out, CheckRow{"variation-censoring", "variation-barrier-decay",
                        cens_frac < 0.01, cens_frac, 0.01,
                        "fraction of paths censored by the |xi| threshold"});

  auto os = open_out(out_dir, "verify.csv");
  write_rows_csv(out, os);
  return out;
}

RunOutcome run_gradient(const config::ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutcome out;
  const Materialized m = materialize(cfg);
  auto cont = solve_chain(cfg, m);
  auto field = std::make_shared<const solver::ValueField>(std::move(cont.fields.back()));
  const quasi::AuxParams params = cfg.make_aux_params();

  const quasi::GradientBoundReport gb = quasi::gradient_bound_check(*field, m.dom, params);
  add_row(out, CheckRow{"gradient-bound", "interior-gradient-bound",
                        std::isfinite(gb.fitted_n) && gb.n_samples > 0, gb.fitted_n, 0.0,
                        "fitted constant over " + std::to_string(gb.n_samples) +
                            " node/direction samples"});

  const game::GameConfig gc = game_config(cfg, m);
  const game::Policy pol = make_policy(cfg, field);
  const Eigen::VectorXd xi0 = direction_xi0(cfg);
  const double fd_eps = 1e-2;

  auto csv = open_out(out_dir, "gradient.csv");
  const int d = cfg.domain.dim;
  for (int i = 0; i < d; ++i) csv << 'x' << (i + 1) << ',';
  csv << "estimate,stderr,fd_value,abs_diff,tolerance,censored_fraction,pass\n";

  int pi = 0;
  for (const auto& x0 : start_points(cfg)) {
    if (pi >= 5) break;
    if (m.dom.psi(x0) <= params.kappa) continue;
    const quasi::DerivativeEstimate est = quasi::estimate_directional_derivative(
        gc, *field, pol, params, x0, xi0, cfg.quasi.n_paths);
    const double fd =
        (field->value_at(x0 + fd_eps * xi0) - field->value_at(x0 - fd_eps * xi0)) /
        (2.0 * fd_eps);
    const double tol = std::max(3.0 * est.stderr_, 5e-2);
    const double diff = std::abs(est.mean - fd);
    const double cens =
        static_cast<double>(est.censored) /
        static_cast<double>(est.n_paths + est.censored > 0 ? est.n_paths + est.censored : 1);
    const bool pass = diff <= tol;
    for (int i = 0; i < d; ++i) csv << fmt(x0[i]) << ',';
    csv << fmt(est.mean) << ',' << fmt(est.stderr_) << ',' << fmt(fd) << ',' << fmt(diff)
        << ',' << fmt(tol) << ',' << fmt(cens) << ',' << (pass ? 1 : 0) << '\n';
    add_row(out, CheckRow{"derivative-match-p" + std::to_string(pi),
                          "derivative-estimator-consistency", pass, diff, tol,
                          "pathwise estimate vs centered differences at " +
                              point_label(x0)});
    ++pi;
  }
  return out;
}

int run(const std::string& subcommand, const config::ExperimentConfig& cfg,
        const std::string& out_dir, long* failed_checks) {
  if (failed_checks) *failed_checks = 0;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory '" << out_dir << "': " << ec.message()
              << "\n";
    return 2;
  }

  RunOutcome all;
  try {
    if (subcommand == "solve") {
      all = run_solve(cfg, out_dir);
    } else if (subcommand == "simulate") {
      all = run_simulate(cfg, out_dir);
    } else if (subcommand == "verify") {
      all = run_verify(cfg, out_dir);
    } else if (subcommand == "gradient") {
      all = run_gradient(cfg, out_dir);
    } else if (subcommand == "report") {
      for (auto* fn : {&run_solve, &run_simulate, &run_verify, &run_gradient}) {
        RunOutcome part = (*fn)(cfg, out_dir);
        all.failed += part.failed;
        for (auto& r : part.rows) all.rows.push_back(std::move(r));
      }
    } else {
      std::cerr << "unknown subcommand '" << subcommand << "'\n";
      return 2;
    }
  } catch (const Error& e) {
    add_row(all, CheckRow{"pipeline-error", "pipeline-completed", false, 0.0, 0.0,
                          e.what()});
  }

  auto rep = open_out(out_dir, "report.txt");
  for (const auto& r : all.rows) {
    rep << (r.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(28) << r.name
        << " value=" << std::setw(14) << fmt_short(r.value)
        << " budget=" << std::setw(14) << fmt_short(r.threshold) << ' ' << std::setw(32)
        << r.anchor << ' ' << r.detail << '\n';
  }
  rep << all.rows.size() << " checks, " << all.failed << " failed\n";

  if (failed_checks) *failed_checks = all.failed;
  return all.failed == 0 ? 0 : 1;
}

int run_with_config_path(const std::string& subcommand, const std::string& config_path,
                         const std::string& out_dir, long* failed_checks) {
  try {
    const config::ExperimentConfig cfg = config::load_config(config_path);
    return run(subcommand, cfg, out_dir, failed_checks);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

}  // namespace hg::pipelines
