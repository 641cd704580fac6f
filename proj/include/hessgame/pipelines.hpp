#pragma once
// Experiment pipelines behind the command-line tool: solve, simulate,
// verify, gradient, and the aggregate report. Each pipeline writes CSV
// artifacts plus a pass/fail table and returns its check rows; run()
// dispatches by subcommand name and encodes the process exit code.

#include <string>
#include <vector>

#include "hessgame/config.hpp"

namespace hg::pipelines {

struct CheckRow {
  std::string name;    // what was measured
  std::string anchor;  // the property the row verifies
  bool pass = false;
  double value = 0.0;      // measured quantity
  double threshold = 0.0;  // budget it is held against
  std::string detail;
};

struct RunOutcome {
  std::vector<CheckRow> rows;
  long failed = 0;
};

RunOutcome run_solve(const config::ExperimentConfig& cfg, const std::string& out_dir);
RunOutcome run_simulate(const config::ExperimentConfig& cfg, const std::string& out_dir);
RunOutcome run_verify(const config::ExperimentConfig& cfg, const std::string& out_dir);
RunOutcome run_gradient(const config::ExperimentConfig& cfg, const std::string& out_dir);

// Dispatch on subcommand ("report" chains all four), write report.txt in
// out_dir, and return the exit code: 0 all rows pass, 1 some row failed,
// 2 unknown subcommand or unusable out_dir. failed_checks (optional)
// receives the failed-row count.
int run(const std::string& subcommand, const config::ExperimentConfig& cfg,
        const std::string& out_dir, long* failed_checks);

// Convenience entry that also loads the config; parse or IO trouble maps
// to exit code 2 with the message on stderr.
int run_with_config_path(const std::string& subcommand, const std::string& config_path,
                         const std::string& out_dir, long* failed_checks);

}  // namespace hg::pipelines
