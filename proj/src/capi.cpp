#include "hessgame/hessgame.h"

#include <fstream>
#include <string>

#include "hessgame/config.hpp"
#include "hessgame/errors.hpp"
#include "hessgame/pipelines.hpp"
#include "hessgame/solver.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

hg_status classify(const hg::Error& e) {
  if (dynamic_cast<const hg::ConfigError*>(&e)) return HG_ERR_CONFIG;
  if (dynamic_cast<const hg::DimError*>(&e) || dynamic_cast<const hg::RankError*>(&e))
    return HG_ERR_DIMENSION;
  if (dynamic_cast<const hg::OutsideDomainError*>(&e) ||
      dynamic_cast<const hg::OutOfGridError*>(&e) ||
      dynamic_cast<const hg::RegionViolationError*>(&e))
    return HG_ERR_DOMAIN;
  return HG_ERR_NUMERIC;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
hg_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const hg::Error& e) {
    set_error(e.what());
    return classify(e);
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return HG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return HG_ERR_INTERNAL;
  }
}

}  // namespace

struct hg_config {
  hg::config::ExperimentConfig cfg;
};

struct hg_field {
  hg::solver::ValueField field;
};

extern "C" {

int hg_abi_version(void) { return 1; }

const char* hg_status_name(hg_status status) {
  switch (status) {
    case HG_OK: return "HG_OK";
    case HG_ERR_CONFIG: return "HG_ERR_CONFIG";
    case HG_ERR_DIMENSION: return "HG_ERR_DIMENSION";
    case HG_ERR_DOMAIN: return "HG_ERR_DOMAIN";
    case HG_ERR_NUMERIC: return "HG_ERR_NUMERIC";
    case HG_ERR_IO: return "HG_ERR_IO";
    case HG_ERR_INVALID: return "HG_ERR_INVALID";
    case HG_ERR_INTERNAL: return "HG_ERR_INTERNAL";
  }
  return "HG_ERR_INTERNAL";
}

const char* hg_last_error(void) { return g_last_error.c_str(); }

hg_status hg_config_load(const char* path, hg_config** out) {
  if (!path || !out) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  *out = nullptr;
  return guarded([&]() -> hg_status {
    auto* handle = new hg_config{hg::config::load_config(path)};
    *out = handle;
    return HG_OK;
  });
}

hg_status hg_config_parse(const char* text, hg_config** out) {
  if (!text || !out) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  *out = nullptr;
  return guarded([&]() -> hg_status {
    auto* handle = new hg_config{hg::config::parse_config(text)};
    *out = handle;
    return HG_OK;
  });
}

hg_status hg_config_set_seed(hg_config* cfg, uint64_t seed) {
  if (!cfg) {
    set_error("null config");
    return HG_ERR_INVALID;
  }
  cfg->cfg.mc.seed = seed;
  return HG_OK;
}

hg_status hg_config_set_threads(hg_config* cfg, int threads) {
  if (!cfg) {
    set_error("null config");
    return HG_ERR_INVALID;
  }
  if (threads < 1) {
    set_error("threads must be at least 1");
    return HG_ERR_CONFIG;
  }
  cfg->cfg.threads = threads;
  return HG_OK;
}

void hg_config_free(hg_config* cfg) { delete cfg; }

hg_status hg_run(const hg_config* cfg, const char* subcommand, const char* out_dir,
                 long* failed_checks) {
  if (!cfg || !subcommand || !out_dir) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  return guarded([&]() -> hg_status {
    long failed = 0;
    const int code = hg::pipelines::run(subcommand, cfg->cfg, out_dir, &failed);
    if (failed_checks) *failed_checks = failed;
    if (code == 2) {
      set_error("unknown subcommand or unusable output directory");
      return HG_ERR_CONFIG;
    }
    return HG_OK;
  });
}

hg_status hg_operator_eval(const hg_config* cfg, const double* matrix, int dim,
                           double* out) {
  if (!cfg || !matrix || !out) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  return guarded([&]() -> hg_status {
    if (dim != cfg->cfg.domain.dim) throw hg::DimError("matrix dimension mismatch");
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = matrix[i * dim + j];
    const auto spec = cfg->cfg.make_operator();
    *out = hg::ops::operator_eval(spec, hg::linalg::SymMatrix(m));
    return HG_OK;
  });
}

hg_status hg_solve(const hg_config* cfg, hg_field** out) {
  if (!cfg || !out) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  *out = nullptr;
  return guarded([&]() -> hg_status {
    const auto& c = cfg->cfg;
    auto cont = hg::solver::delta_continuation(
        c.make_operator(), c.make_domain(), c.make_field(c.data.f),
        c.make_field(c.data.g), c.solver.h, c.solver.deltas, c.make_solve_options());
    *out = new hg_field{std::move(cont.fields.back())};
    return HG_OK;
  });
}

int hg_field_dim(const hg_field* field) {
  return field ? field->field.grid->dim() : 0;
}

double hg_field_residual(const hg_field* field) {
  return field ? field->field.residual : -1.0;
}

hg_status hg_field_value_at(const hg_field* field, const double* x, int dim,
                            double* out) {
  if (!field || !x || !out) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  return guarded([&]() -> hg_status {
    if (dim != field->field.grid->dim()) throw hg::DimError("point dimension mismatch");
    Eigen::VectorXd p(dim);
    for (int i = 0; i < dim; ++i) p[i] = x[i];
    *out = field->field.value_at(p);
    return HG_OK;
  });
}

hg_status hg_field_write_csv(const hg_field* field, const char* path) {
  if (!field || !path) {
    set_error("null argument");
    return HG_ERR_INVALID;
  }
  return guarded([&]() -> hg_status {
    std::ofstream os(path);
    if (!os) {
      set_error(std::string("cannot open '") + path + "' for writing");
      return HG_ERR_IO;
    }
    hg::solver::write_field_csv(field->field, os);
    return HG_OK;
  });
}

void hg_field_free(hg_field* field) { delete field; }

}  // extern "C"
