#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "estimators.hpp"

namespace qsym {

inline constexpr const char* kVersion = "1.0.0";

struct RunOptions {
  std::optional<int> seeds;               // overrides [sampler] seeds
  std::optional<std::string> output_dir;  // overrides [output] directory
  std::string restart;                    // checkpoint file or run directory
  std::int64_t halt_at_step = -1;         // testing: checkpoint and stop at this step
  int threads = 0;                        // 0: QSYM_NUM_THREADS or hardware concurrency
};

enum class RunStatus { Complete, Halted };

struct CommandResult {
  RunStatus status = RunStatus::Complete;
  std::string output_dir;
  std::string summary_path;
  /// Requested channels whose <W_I> is consistent with zero.
  std::vector<std::string> collapsed_channels;
};

/// Seeds used by a run: seed, seed + 1, ...
std::vector<std::uint64_t> seed_list(const RunConfig& cfg);

/// Simulates every seed, then analyzes the stored samples (same code path as
/// analyze) and writes summary.json plus tables.
CommandResult cmd_run(RunConfig cfg, const RunOptions& options);

/// Re-analyzes a run directory. `estimators_override`, if given, replaces the
/// [estimators] section (binning, observables) of the stored config.
CommandResult cmd_analyze(const std::string& run_dir,
                          const std::optional<RunConfig>& estimators_override = std::nullopt,
                          const std::optional<std::string>& output_dir = std::nullopt);

/// Analytic toy references or exact-diagonalization tables for the config.
CommandResult cmd_oracle(const RunConfig& cfg, const std::optional<std::string>& output_dir);

/// Bennett ratio from a distinguishable run and a connected run, plus the
/// free-energy route to the fermion energy.
CommandResult cmd_bennett(const std::string& oo_dir, const std::string& connected_dir,
                          const std::optional<std::string>& output_dir);

/// Merged analysis of a distinguishable-topology run directory.
Analysis load_analysis(const std::string& run_dir, const RunConfig& cfg);

/// Config recorded in a run directory's manifest.
RunConfig load_run_config(const std::string& run_dir);
/// Same, given a run directory, seed directory or checkpoint file.
RunConfig load_restart_config(const std::string& restart);

}  // namespace qsym
