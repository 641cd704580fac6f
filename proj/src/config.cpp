#include "hessgame/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hessgame/errors.hpp"

namespace hg::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("bad number for " + what + ": '" + s + "'");
  return v;
}

long to_long(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("bad integer for " + what + ": '" + s + "'");
  return v;
}

bool to_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean for " + what + ": '" + s + "'");
}

std::vector<double> to_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& t : tokens(s)) out.push_back(to_double(t, what));
  if (out.empty()) throw ConfigError(what + " needs at least one value");
  return out;
}

Eigen::VectorXd to_vector(const std::string& s, const std::string& what) {
  const auto vals = to_doubles(s, what);
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<int>(i)] = vals[i];
  return v;
}

std::vector<Eigen::VectorXd> to_points(const std::string& s, const std::string& what) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& part : split(s, ';')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    out.push_back(to_vector(p, what));
  }
  if (out.empty()) throw ConfigError(what + " needs at least one point");
  return out;
}

}  // namespace

domain::BarrierDomain ExperimentConfig::make_domain() const {
  if (domain.kind == "unit_ball") return domain::BarrierDomain::unit_ball(domain.dim);
  if (domain.kind == "ellipsoid") {
    if (domain.semi_axes.size() != domain.dim)
      throw ConfigError("ellipsoid needs semi_axes matching dim");
    return domain::BarrierDomain::ellipsoid(domain.semi_axes);
  }
  throw ConfigError("unknown domain kind '" + domain.kind + "'");
}

ops::OperatorSpec ExperimentConfig::make_operator() const {
  if (op.kind == "sum_extremes")
    return ops::OperatorSpec::sum_extremes(domain.dim, op.k1, op.k2);
  if (op.kind == "middle_sum")
    return ops::OperatorSpec::middle_sum(domain.dim, op.k, op.j, op.degenerate_ok);
  throw ConfigError("unknown operator kind '" + op.kind + "'");
}

fields::ScalarField ExperimentConfig::make_field(const std::string& text) const {
  const int d = domain.dim;
  const auto groups = split(text, ';');
  const auto head = tokens(groups.empty() ? text : groups[0]);
  if (head.empty()) throw ConfigError("empty field description");
  const std::string& kind = head[0];

  if (kind == "constant") {
    if (head.size() != 2 || groups.size() > 1)
      throw ConfigError("constant field takes one value");
    return fields::ScalarField::constant(d, to_double(head[1], "constant field"));
  }
  if (kind == "linear") {
    if (head.size() != static_cast<std::size_t>(d) + 2 || groups.size() > 1)
      throw ConfigError("linear field takes dim coefficients plus an offset");
    Eigen::VectorXd a(d);
    for (int i = 0; i < d; ++i) a[i] = to_double(head[1 + i], "linear field");
    return fields::ScalarField::linear(d, a, to_double(head[1 + d], "linear field"));
  }
  if (kind == "harmonic_quadratic") {
    if (head.size() != 1 || groups.size() > 1)
      throw ConfigError("harmonic_quadratic takes no arguments");
    return fields::ScalarField::harmonic_quadratic(d);
  }
  if (kind == "polynomial") {
    std::vector<fields::PolyTerm> terms;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      auto toks = tokens(groups[gi]);
      std::size_t at = 0;
      if (gi == 0) at = 1;  // skip the leading keyword
      if (toks.size() - at != static_cast<std::size_t>(d) + 1)
        throw ConfigError("each polynomial term needs a coefficient and dim exponents");
      fields::PolyTerm term;
      term.coefficient = to_double(toks[at], "polynomial coefficient");
      for (int i = 0; i < d; ++i) {
        const long p = to_long(toks[at + 1 + static_cast<std::size_t>(i)],
                               "polynomial exponent");
        if (p < 0) throw ConfigError("polynomial exponents must be nonnegative");
        term.powers.push_back(static_cast<int>(p));
      }
      terms.push_back(std::move(term));
    }
    return fields::ScalarField::polynomial(d, std::move(terms));
  }
  throw ConfigError("unknown field kind '" + kind + "'");
}

quasi::AuxParams ExperimentConfig::make_aux_params() const {
  quasi::AuxParams p;
  p.lambda = quasi.lambda;
  p.kappa = quasi.kappa;
  p.theta = quasi.theta_b2;
  p.k1 = quasi.k1;
  p.validate();
  return p;
}

solver::SolveOptions ExperimentConfig::make_solve_options() const {
  solver::SolveOptions opts;
  opts.tol = solver.tol;
  opts.max_iter = solver.max_iter;
  opts.haar_controls = solver.haar_controls;
  opts.seed = mc.seed;
  opts.foot_scale = solver.foot_scale;
  return opts;
}

void ExperimentConfig::validate() const {
  const auto dom = make_domain();
  make_operator();
  make_field(data.f);
  make_field(data.g);
  if (!(data.discount >= 0.0)) throw ConfigError("discount must be nonnegative");

  if (!(solver.h > 0.0)) throw ConfigError("grid spacing h must be positive");
  if (!(solver.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (solver.max_iter < 1) throw ConfigError("solver max_iter must be at least 1");
  if (solver.haar_controls < 0) throw ConfigError("haar_controls must be nonnegative");
  if (!(solver.foot_scale > 0.0)) throw ConfigError("foot_scale must be positive");
  if (solver.deltas.empty()) throw ConfigError("deltas needs at least one entry");
  for (std::size_t i = 0; i < solver.deltas.size(); ++i) {
    if (!(solver.deltas[i] >= 0.0)) throw ConfigError("deltas must be nonnegative");
    if (i > 0 && solver.deltas[i] > solver.deltas[i - 1])
      throw ConfigError("deltas must be non-increasing");
  }

  if (!(mc.dt > 0.0)) throw ConfigError("mc dt must be positive");
  if (mc.n_paths < 2) throw ConfigError("mc n_paths must be at least 2");
  if (!(mc.delta >= 0.0 && mc.delta < 1.0)) throw ConfigError("mc delta must lie in [0, 1)");
  if (mc.policy != "constant" && mc.policy != "feedback")
    throw ConfigError("mc policy must be 'constant' or 'feedback'");
  if (!(mc.fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  if (mc.moment_order < 1 || mc.moment_order > 4)
    throw ConfigError("moment_order must lie in 1..4");
  for (const auto& x : mc.start_points) {
    if (x.size() != domain.dim) throw ConfigError("start point dimension mismatch");
    if (!dom.contains(x)) throw ConfigError("start point lies outside the domain");
  }

  make_aux_params();
  if (!(quasi.horizon > 0.0)) throw ConfigError("quasi horizon must be positive");
  if (quasi.n_paths < 2) throw ConfigError("quasi n_paths must be at least 2");
  if (quasi.xi0.size() != 0 && quasi.xi0.size() != domain.dim)
    throw ConfigError("xi0 dimension mismatch");
  for (double e : quasi.eps_list)
    if (!(e > 0.0)) throw ConfigError("eps_list entries must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  int lineno = 0;

  auto fail = [&](const std::string& msg) -> void {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "domain" && section != "operator" && section != "data" &&
          section != "solver" && section != "mc" && section != "quasi")
        fail("unknown section '" + section + "'");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("empty key or value");
    if (section.empty()) fail("key before any section header");

    if (section == "domain") {
      if (key == "kind") cfg.domain.kind = value;
      else if (key == "dim") cfg.domain.dim = static_cast<int>(to_long(value, key));
      else if (key == "semi_axes") cfg.domain.semi_axes = to_vector(value, key);
      else fail("unknown key '" + key + "' in [domain]");
    } else if (section == "operator") {
      if (key == "kind") cfg.op.kind = value;
      else if (key == "k1") cfg.op.k1 = static_cast<int>(to_long(value, key));
      else if (key == "k2") cfg.op.k2 = static_cast<int>(to_long(value, key));
      else if (key == "k") cfg.op.k = static_cast<int>(to_long(value, key));
      else if (key == "j") cfg.op.j = static_cast<int>(to_long(value, key));
      else if (key == "degenerate_ok") cfg.op.degenerate_ok = to_bool(value, key);
      else fail("unknown key '" + key + "' in [operator]");
    } else if (section == "data") {
      if (key == "f") cfg.data.f = value;
      else if (key == "g") cfg.data.g = value;
      else if (key == "discount") cfg.data.discount = to_double(value, key);
      else fail("unknown key '" + key + "' in [data]");
    } else if (section == "solver") {
      if (key == "h") cfg.solver.h = to_double(value, key);
      else if (key == "tol") cfg.solver.tol = to_double(value, key);
      else if (key == "max_iter") cfg.solver.max_iter = static_cast<int>(to_long(value, key));
      else if (key == "deltas") cfg.solver.deltas = to_doubles(value, key);
      else if (key == "haar_controls")
        cfg.solver.haar_controls = static_cast<int>(to_long(value, key));
      else if (key == "foot_scale") cfg.solver.foot_scale = to_double(value, key);
      else fail("unknown key '" + key + "' in [solver]");
    } else if (section == "mc") {
      if (key == "dt") cfg.mc.dt = to_double(value, key);
      else if (key == "n_paths") cfg.mc.n_paths = to_long(value, key);
      else if (key == "seed") cfg.mc.seed = static_cast<std::uint64_t>(to_long(value, key));
      else if (key == "delta") cfg.mc.delta = to_double(value, key);
      else if (key == "start_points") cfg.mc.start_points = to_points(value, key);
      else if (key == "policy") cfg.mc.policy = value;
      else if (key == "fd_step") cfg.mc.fd_step = to_double(value, key);
      else if (key == "moment_order")
        cfg.mc.moment_order = static_cast<int>(to_long(value, key));
      else fail("unknown key '" + key + "' in [mc]");
    } else if (section == "quasi") {
      if (key == "lambda") cfg.quasi.lambda = to_double(value, key);
      else if (key == "kappa") cfg.quasi.kappa = to_double(value, key);
      else if (key == "theta_b2") cfg.quasi.theta_b2 = to_double(value, key);
      else if (key == "k1") cfg.quasi.k1 = to_double(value, key);
      else if (key == "horizon") cfg.quasi.horizon = to_double(value, key);
      else if (key == "eps_list") cfg.quasi.eps_list = to_doubles(value, key);
      else if (key == "xi0") cfg.quasi.xi0 = to_vector(value, key);
      else if (key == "n_paths") cfg.quasi.n_paths = to_long(value, key);
      else fail("unknown key '" + key + "' in [quasi]");
    }
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace hg::config
