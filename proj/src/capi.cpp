#include "qsym/qsym.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include "config.hpp"
#include "driver.hpp"
#include "error.hpp"
#include "model.hpp"
#include "oracle.hpp"

struct qsym_config {
  qsym::RunConfig cfg;
};

struct qsym_result {
  qsym::CommandResult result;
};

namespace {

thread_local std::string last_error;

qsym_status fail(qsym_status status, const char* what) {
  last_error = what;
  return status;
}

template <class F>
qsym_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return QSYM_OK;
  } catch (const qsym::Error& e) {
    return fail(static_cast<qsym_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QSYM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QSYM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QSYM_ERR_INTERNAL, "unknown error");
  }
}

qsym_status null_argument(const char* name) {
  last_error = std::string("null argument: ") + name;
  return QSYM_ERR_INVALID_ARGUMENT;
}

std::optional<std::string> opt(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::string(s);
}

qsym_status wrap_result(qsym::CommandResult r, qsym_result** out) {
  *out = new qsym_result{std::move(r)};
  return QSYM_OK;
}

}  // namespace

extern "C" {

const char* qsym_version(void) { return qsym::kVersion; }

const char* qsym_last_error(void) { return last_error.c_str(); }

qsym_status qsym_config_load(const char* path, qsym_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new qsym_config{qsym::load_config(path)}; });
}

qsym_status qsym_config_parse(const char* text, const char* source_name, qsym_config** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new qsym_config{qsym::parse_config(text, source_name ? source_name : "<config>")};
  });
}

qsym_status qsym_config_from_run(const char* path, qsym_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new qsym_config{qsym::load_restart_config(path)}; });
}

void qsym_config_free(qsym_config* config) { delete config; }

qsym_status qsym_config_hash(const qsym_config* config, char* buffer, size_t size) {
  if (!config) return null_argument("config");
  if (!buffer) return null_argument("buffer");
  return guarded([&] {
    const std::string h = config->cfg.hash();
    if (size < h.size() + 1) throw qsym::InvalidArgument("hash buffer needs 17 bytes");
    std::memcpy(buffer, h.c_str(), h.size() + 1);
  });
}

qsym_status qsym_config_serialize(const qsym_config* config, char* buffer, size_t size,
                                  size_t* needed) {
  if (!config) return null_argument("config");
  return guarded([&] {
    const std::string text = qsym::serialize(config->cfg.document);
    if (needed) *needed = text.size();
    if (buffer && size > 0) {
      const size_t n = std::min(size - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
  });
}

int qsym_config_beads(const qsym_config* config) {
  return config ? config->cfg.system.num_beads : 0;
}
int qsym_config_dim(const qsym_config* config) { return config ? config->cfg.system.dim : 0; }
double qsym_config_beta(const qsym_config* config) { return config ? config->cfg.system.beta : 0.0; }

void qsym_run_options_init(qsym_run_options* options) {
  if (!options) return;
  options->seeds = 0;
  options->output_dir = nullptr;
  options->restart = nullptr;
  options->halt_at_step = -1;
  options->threads = 0;
}

qsym_status qsym_run(const qsym_config* config, const qsym_run_options* options,
                     qsym_result** out) {
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    qsym::RunOptions o;
    if (options) {
      if (options->seeds > 0) o.seeds = options->seeds;
      o.output_dir = opt(options->output_dir);
      if (options->restart) o.restart = options->restart;
      o.halt_at_step = options->halt_at_step;
      o.threads = options->threads;
    }
    wrap_result(qsym::cmd_run(config->cfg, o), out);
  });
}

qsym_status qsym_analyze(const char* run_dir, const qsym_config* estimators,
                         const char* output_dir, qsym_result** out) {
  if (!run_dir) return null_argument("run_dir");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    std::optional<qsym::RunConfig> override_cfg;
    if (estimators) override_cfg = estimators->cfg;
    wrap_result(qsym::cmd_analyze(run_dir, override_cfg, opt(output_dir)), out);
  });
}

qsym_status qsym_oracle(const qsym_config* config, const char* output_dir, qsym_result** out) {
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { wrap_result(qsym::cmd_oracle(config->cfg, opt(output_dir)), out); });
}

qsym_status qsym_bennett(const char* distinguishable_run_dir, const char* connected_run_dir,
                         const char* output_dir, qsym_result** out) {
  if (!distinguishable_run_dir) return null_argument("distinguishable_run_dir");
  if (!connected_run_dir) return null_argument("connected_run_dir");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    wrap_result(qsym::cmd_bennett(distinguishable_run_dir, connected_run_dir, opt(output_dir)), out);
  });
}

int qsym_result_halted(const qsym_result* result) {
  return result && result->result.status == qsym::RunStatus::Halted;
}
const char* qsym_result_output_dir(const qsym_result* result) {
  return result ? result->result.output_dir.c_str() : "";
}
const char* qsym_result_summary_path(const qsym_result* result) {
  return result ? result->result.summary_path.c_str() : "";
}
size_t qsym_result_collapsed_count(const qsym_result* result) {
  return result ? result->result.collapsed_channels.size() : 0;
}
const char* qsym_result_collapsed_channel(const qsym_result* result, size_t index) {
  if (!result || index >= result->result.collapsed_channels.size()) return nullptr;
  return result->result.collapsed_channels[index].c_str();
}
void qsym_result_free(qsym_result* result) { delete result; }

qsym_status qsym_harmonic(double beta, double hbar_omega, int dim, int num_beads,
                          qsym_harmonic_reference* out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    if (!(beta > 0.0) || !(hbar_omega > 0.0) || dim < 1 || num_beads < 0)
      throw qsym::InvalidArgument("harmonic: need beta > 0, hbar_omega > 0, dim >= 1, beads >= 0");
    const auto p = num_beads == 0 ? qsym::harmonic_partition(beta, hbar_omega, dim)
                                  : qsym::harmonic_partition_discrete(beta, hbar_omega, dim, num_beads);
    *out = {p.ratio, p.e_boson, p.e_fermion, p.e_distinguishable};
  });
}

qsym_status qsym_exchange_cv(const qsym_config* config, const double* positions, size_t count,
                             double* s) {
  if (!config) return null_argument("config");
  if (!positions) return null_argument("positions");
  if (!s) return null_argument("s");
  return guarded([&] {
    const auto& spec = config->cfg.system;
    if (count != spec.coordinate_count())
      throw qsym::InvalidArgument("positions must hold 2 * beads * dim values");
    qsym::BeadConfiguration c(spec, false);
    std::copy(positions, positions + count, c.positions().begin());
    *s = qsym::collective_variable_s(c, spec);
  });
}

qsym_status qsym_symmetry_weight(double s, double beta, int fermion, int* sign, double* log_abs) {
  if (!sign) return null_argument("sign");
  if (!log_abs) return null_argument("log_abs");
  return guarded([&] {
    const auto w = qsym::symmetry_weight(
        s, beta, fermion ? qsym::SymmetryChannel::Fermion : qsym::SymmetryChannel::Boson);
    *sign = w.sign;
    *log_abs = w.log_abs;
  });
}

}  // extern "C"
