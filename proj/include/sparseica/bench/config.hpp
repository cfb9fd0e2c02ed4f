#pragma once

// Declarative experiment description.
//
// Text format: one `key = value` per line, `#` starts a comment, lists are
// comma separated. Unknown keys, malformed values and constraint violations
// are all collected before loading fails.

#include "sparseica/engines.hpp"
#include "sparseica/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sparseica::bench {

enum class Experiment { gini_vs_beta, isr_vs_beta, isr_vs_T, isr_vs_N, fmri_cnr };

std::string_view to_string(Experiment e);
std::optional<Experiment> experiment_from_string(std::string_view s);

/// Name of the metric an experiment records.
std::string_view metric_name(Experiment e);

struct SweepConfig {
  Experiment experiment = Experiment::isr_vs_beta;
  std::vector<ica::Algorithm> algorithms{ica::Algorithm::sparse_ebm, ica::Algorithm::ebm};
  std::vector<double> sweep_values;

  // Problem size and source model.
  int n_sources = 10;       // N
  int samples = 1000;       // T
  double beta = 0.1;
  double cond_cap = 100.0;

  // SparseICA-EBM penalty.
  double lambda = 1e4;
  double epsilon = 1e-2;

  // Engine settings.
  int max_sweeps = 512;
  double tol = 1e-6;
  int restarts = 1;
  std::optional<double> infomax_eta0;

  // Monte Carlo.
  int runs = 300;
  std::uint64_t master_seed = 0;

  // fMRI-like scenes; `cnr` is the sweep axis of fmri_cnr when sweep_values
  // is not given.
  std::vector<double> cnr;
  int grid = 100;
  int components = 20;
  int frames = 260;
  double baseline = 800.0;

  std::string output_dir = "out";
  bool timing = false;  // write wall-clock seconds into the runs file

  ica::SparsityPenalty penalty() const;
  ica::EngineParams engine_params(std::uint64_t seed) const;

  bool operator==(const SweepConfig&) const = default;
};

struct ConfigProblem {
  std::size_t line = 0;  // 0 when the problem is not tied to one line
  std::string key;
  std::string message;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigProblem> problems);
  const std::vector<ConfigProblem>& problems() const { return problems_; }

 private:
  std::vector<ConfigProblem> problems_;
};

/// Parses and validates. Throws ConfigError listing every problem found.
SweepConfig parse_config(std::string_view text);

SweepConfig load_config(const std::filesystem::path& path);

/// Checks cross-field constraints; returns every violation.
std::vector<ConfigProblem> validate(const SweepConfig& cfg);

/// Canonical text form; parse_config(save_config(c)) reproduces c.
std::string save_config(const SweepConfig& cfg);

}  // namespace sparseica::bench
