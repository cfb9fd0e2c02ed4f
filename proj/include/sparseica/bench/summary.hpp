#pragma once

// Per-cell statistics over the runs of a sweep.

#include "sparseica/bench/sweep.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sparseica::bench {

struct SummaryRow {
  std::string experiment;
  std::string algorithm;
  double sweep_value = 0.0;
  std::size_t n_runs = 0;      // finite values that entered the statistics
  double mean = 0.0;           // NaN when every run of the cell failed
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t n_excluded = 0;  // NaN sentinels dropped

  bool all_failed() const { return n_runs == 0; }
};

/// Linearly interpolated sample quantile (R type 7) of ascending `sorted`.
double quantile_sorted(std::span<const double> sorted, double p);

/// Groups by (experiment, algorithm, sweep value) in first-seen algorithm
/// order and ascending sweep value. Throws Error on empty input.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

inline constexpr const char* kSummaryHeader =
    "experiment,algorithm,sweep_value,n_runs,mean,median,q25,q75,n_excluded";

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

}  // namespace sparseica::bench
