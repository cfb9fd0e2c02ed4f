#pragma once

// Seeded Monte Carlo sweeps over the experiment grid.

#include "sparseica/bench/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sparseica::bench {

struct RunRecord {
  std::string experiment;
  std::string algorithm;
  double sweep_value = 0.0;
  int run_index = 0;
  std::uint64_t seed = 0;
  std::string metric_name;
  double metric_value = 0.0;  // NaN when the run failed
  double wall_time_s = 0.0;
  bool converged = false;
  std::string error;  // failure message, not serialized
};

/// One (algorithm, sweep value, run) cell of a sweep. Algorithm is empty for
/// experiments without an engine.
struct RunTask {
  std::string algorithm;
  double sweep_value = 0.0;
  int run_index = 0;
};

/// Every task in output order: algorithms as configured, sweep values
/// ascending, runs ascending.
std::vector<RunTask> enumerate_tasks(const SweepConfig& cfg);

/// Per-run seed for the engine; recorded in the runs file.
std::uint64_t child_seed(const SweepConfig& cfg, const RunTask& task);

/// Seed for the synthetic data. It omits the algorithm so that every
/// algorithm sees the same draw at a given (sweep value, run).
std::uint64_t data_seed(const SweepConfig& cfg, double sweep_value, int run_index);

/// Executes one task. Failures are captured as converged = false with a NaN
/// metric rather than thrown.
RunRecord execute_task(const SweepConfig& cfg, const RunTask& task);

/// Runs every task on `workers` threads. The result order is that of
/// enumerate_tasks regardless of scheduling.
std::vector<RunRecord> run_sweep(const SweepConfig& cfg, int workers = 1);

/// Synthetic problem for isr_* experiments: sources, mixing matrix, mixtures.
struct SyntheticProblem {
  Matrix sources;
  Matrix mixing;
  Matrix mixtures;
};
SyntheticProblem make_synthetic_problem(const SweepConfig& cfg, double sweep_value,
                                        int run_index);

// Runs file: experiment,algorithm,sweep_value,run_index,seed,metric_name,
// metric_value,wall_time_s,converged
inline constexpr const char* kRunsHeader =
    "experiment,algorithm,sweep_value,run_index,seed,metric_name,metric_value,wall_time_s,"
    "converged";

/// Wall time is written only when `with_timing` is true, otherwise 0, so the
/// file is a pure function of the configuration.
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records, bool with_timing);
void write_runs_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                    bool with_timing);
std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path);

/// Worker count from SPARSEICA_WORKERS, else 1.
int default_workers();

}  // namespace sparseica::bench
