// Command-line front end over the C API.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qsym/qsym.h"

namespace {

// Exit codes: 0 ok, 2 config, 3 numerical, 4 sign collapse, 5 no overlap.
int exit_code(qsym_status s) {
  switch (s) {
    case QSYM_OK: return 0;
    case QSYM_ERR_SIGN_COLLAPSE: return 4;
    case QSYM_ERR_NO_OVERLAP: return 5;
    case QSYM_ERR_NUMERICAL:
    case QSYM_ERR_CONVERGENCE:
    case QSYM_ERR_INTERNAL: return 3;
    default: return 2;
  }
}

int report(qsym_status s) {
  if (s != QSYM_OK) std::fprintf(stderr, "qsym: error: %s\n", qsym_last_error());
  return exit_code(s);
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int finish(qsym_result* r) {
  int code = 0;
  if (qsym_result_halted(r)) {
    std::printf("halted; checkpoints in %s\n", qsym_result_output_dir(r));
  } else {
    std::printf("%s\n", qsym_result_summary_path(r));
    for (size_t i = 0; i < qsym_result_collapsed_count(r); ++i) {
      std::fprintf(stderr, "qsym: sign collapse in the %s channel: <W> is consistent with zero\n",
                   qsym_result_collapsed_channel(r, i));
      code = 4;
    }
  }
  qsym_result_free(r);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-integral sampling of two indistinguishable particles"};
  app.set_version_flag("--version", qsym_version());
  app.require_subcommand(1);

  std::string config_path, restart, out_dir, run_dir, oo_dir, connected_dir;
  int seeds = 0, threads = 0;
  long long halt = -1;

  auto* run = app.add_subcommand("run", "simulate and analyze");
  run->add_option("--config", config_path, "config file");
  run->add_option("--restart", restart, "checkpoint file or run directory to resume");
  run->add_option("--seeds", seeds, "number of independent seeds")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
  run->add_option("--halt-at-step", halt)->group("");

  auto* oracle = app.add_subcommand("oracle", "analytic or exact-diagonalization references");
  oracle->add_option("--config", config_path, "config file")->required();
  oracle->add_option("--out", out_dir, "output directory");

  auto* analyze = app.add_subcommand("analyze", "re-run the estimators on stored samples");
  analyze->add_option("run_dir", run_dir, "run directory")->required();
  analyze->add_option("--config", config_path, "config whose [estimators] section replaces the stored one");
  analyze->add_option("--out", out_dir, "output directory");

  auto* bennett = app.add_subcommand("bennett", "Bennett ratio from a distinguishable and a connected run");
  bennett->add_option("oo_dir", oo_dir, "distinguishable-topology run")->required();
  bennett->add_option("connected_dir", connected_dir, "connected-topology run")->required();
  bennett->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  qsym_config* cfg = nullptr;
  qsym_result* result = nullptr;
  qsym_status s = QSYM_OK;

  if (*run) {
    if (config_path.empty() && restart.empty()) {
      std::fprintf(stderr, "qsym: run needs --config or --restart\n");
      return 2;
    }
    s = config_path.empty() ? qsym_config_from_run(restart.c_str(), &cfg)
                            : qsym_config_load(config_path.c_str(), &cfg);
    if (s != QSYM_OK) return report(s);
    qsym_run_options o;
    qsym_run_options_init(&o);
    o.seeds = seeds;
    o.output_dir = or_null(out_dir);
    o.restart = or_null(restart);
    o.halt_at_step = halt;
    o.threads = threads;
    s = qsym_run(cfg, &o, &result);
  } else if (*oracle) {
    s = qsym_config_load(config_path.c_str(), &cfg);
    if (s == QSYM_OK) s = qsym_oracle(cfg, or_null(out_dir), &result);
  } else if (*analyze) {
    if (!config_path.empty()) s = qsym_config_load(config_path.c_str(), &cfg);
    if (s == QSYM_OK) s = qsym_analyze(run_dir.c_str(), cfg, or_null(out_dir), &result);
  } else if (*bennett) {
    s = qsym_bennett(oo_dir.c_str(), connected_dir.c_str(), or_null(out_dir), &result);
  }
  qsym_config_free(cfg);
  if (s != QSYM_OK) return report(s);
  return finish(result);
}
