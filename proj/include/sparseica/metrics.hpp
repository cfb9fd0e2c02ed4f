#pragma once

// Separation quality and sparsity measures.

#include "sparseica/model.hpp"

#include <span>
#include <vector>

namespace sparseica::metrics {

/// Gini index of |y|: 1 - 2 sum_k (c_(k)/|y|_1) (T - k + 1/2)/T over the
/// ascending magnitudes c_(1) <= ... <= c_(T). Throws MetricError when y is
/// all zeros.
double gini_index(std::span<const double> y);

struct Assignment {
  std::vector<int> mapping;  // row (estimated) index -> column (true) index
  double total_score = 0.0;
  std::vector<double> per_pair_scores;
};

/// Maximum-score assignment by the forward auction algorithm with
/// epsilon-scaling. The total is within N * eps_auction of the optimum.
/// eps_auction <= 0 selects the default 1e-3 / N.
Assignment auction_assign(const Matrix& score, double eps_auction = 0.0);

/// Pearson correlation of two equal-length series (1/T normalization).
double pearson(std::span<const double> a, std::span<const double> b);

struct Pairing {
  Assignment assignment;
  double mean_abs_corr = 0.0;
};

/// Pairs estimated rows with true rows by maximizing total |corr|.
Pairing pair_components(const Matrix& truth, const Matrix& estimates);

struct IsrReport {
  double normalized_isr = 0.0;
  std::vector<double> per_row_isr;
  std::vector<int> permutation_used;
};

/// Interference-to-signal ratio of a global matrix G = W A, averaged over
/// rows and divided by N - 1. Zero for any permutation times diagonal.
IsrReport normalized_isr(const Matrix& g);

}  // namespace sparseica::metrics
