/* Command-line front end for the Hessian-game toolkit. Plain C against the
 * public header only: parse flags, load the experiment config, run the
 * requested pipeline, and encode the outcome in the exit status
 * (0 all checks pass, 1 some numerical check failed, 2 usage or config
 * trouble). */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hessgame/hessgame.h"

static void usage(FILE* to) {
  fprintf(to,
          "usage: hessgame SUBCOMMAND --config PATH --out DIR [--seed N] [--threads N]\n"
          "\n"
          "subcommands:\n"
          "  solve     policy-iteration solve with regularization continuation\n"
          "  simulate  Monte Carlo value and exit-moment estimation\n"
          "  verify    assumption checkers, saddle certificates, barrier decay\n"
          "  gradient  gradient bound fit and derivative-estimator comparison\n"
          "  report    all of the above, aggregated into one report\n"
          "\n"
          "flags:\n"
          "  --config PATH  experiment configuration file (required)\n"
          "  --out DIR      output directory for CSV files and report.txt (required)\n"
          "  --seed N       override the configured RNG seed\n"
          "  --threads N    worker count (results are independent of it)\n");
}

int main(int argc, char** argv) {
  const char* subcommand = NULL;
  const char* config_path = NULL;
  const char* out_dir = NULL;
  const char* seed_text = NULL;
  const char* threads_text = NULL;
  int i;

  for (i = 1; i < argc; ++i) {
    if (strcmp(argv[i], "--help") == 0 || strcmp(argv[i], "-h") == 0) {
      usage(stdout);
      return 0;
    } else if (strcmp(argv[i], "--config") == 0) {
      if (++i >= argc) goto bad_usage;
      config_path = argv[i];
    } else if (strcmp(argv[i], "--out") == 0) {
      if (++i >= argc) goto bad_usage;
      out_dir = argv[i];
    } else if (strcmp(argv[i], "--seed") == 0) {
      if (++i >= argc) goto bad_usage;
      seed_text = argv[i];
    } else if (strcmp(argv[i], "--threads") == 0) {
      if (++i >= argc) goto bad_usage;
      threads_text = argv[i];
    } else if (argv[i][0] == '-') {
      fprintf(stderr, "unknown flag '%s'\n", argv[i]);
      goto bad_usage;
    } else if (subcommand == NULL) {
      subcommand = argv[i];
    } else {
      fprintf(stderr, "unexpected argument '%s'\n", argv[i]);
      goto bad_usage;
    }
  }

  if (subcommand == NULL || config_path == NULL || out_dir == NULL) goto bad_usage;

  {
    hg_config* cfg = NULL;
    hg_status st = hg_config_load(config_path, &cfg);
    long failed = 0;
    int exit_code = 0;

    if (st != HG_OK) {
      fprintf(stderr, "config error (%s): %s\n", hg_status_name(st), hg_last_error());
      return 2;
    }

    if (seed_text != NULL) {
      char* end = NULL;
      unsigned long long seed = strtoull(seed_text, &end, 10);
      if (end == seed_text || *end != '\0') {
        fprintf(stderr, "bad --seed value '%s'\n", seed_text);
        hg_config_free(cfg);
        return 2;
      }
      hg_config_set_seed(cfg, (uint64_t)seed);
    }
    if (threads_text != NULL) {
      char* end = NULL;
      long threads = strtol(threads_text, &end, 10);
      if (end == threads_text || *end != '\0' ||
          hg_config_set_threads(cfg, (int)threads) != HG_OK) {
        fprintf(stderr, "bad --threads value '%s'\n", threads_text);
        hg_config_free(cfg);
        return 2;
      }
    }

    st = hg_run(cfg, subcommand, out_dir, &failed);
    hg_config_free(cfg);

    if (st != HG_OK) {
      fprintf(stderr, "run error (%s): %s\n", hg_status_name(st), hg_last_error());
      return 2;
    }
    if (failed > 0) {
      fprintf(stderr, "%ld check(s) failed; see %s/report.txt\n", failed, out_dir);
      exit_code = 1;
    } else {
      printf("all checks passed; outputs in %s\n", out_dir);
    }
    return exit_code;
  }

bad_usage:
  usage(stderr);
  return 2;
}
