#pragma once

// Decoupled row-wise ICA engines: SparseICA-EBM, ICA-EBM (zero penalty) and
// the natural-gradient Infomax baseline.
//
// The EBM engines work on whitened data with unit-norm demixing rows. Row m
// minimizes
//   J(w_m) = H(w_m^T z) - ln|h_m^T w_m| + lambda_m * sum_t sqrt(y_t^2 + eps)
// with every other row held fixed.

#include "sparseica/entropy.hpp"
#include "sparseica/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sparseica::ica {

struct SparsityPenalty {
  double lambda = 0.0;               // shared lambda_m
  std::vector<double> per_source;    // overrides `lambda` when nonempty
  double epsilon = 1e-2;

  double lambda_for(Eigen::Index m) const;
  /// Throws ParameterError unless epsilon > 0 and every lambda >= 0.
  void validate(Eigen::Index n_sources) const;
};

struct LineSearch {
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_halvings = 40;
  double max_rotation = 0.3;  // cap on |step * tangent gradient| per trial
};

struct EngineParams {
  int max_sweeps = 512;
  double tol = 1e-6;
  LineSearch line_search;
  int restarts = 1;
  std::uint64_t seed = 0;
  std::optional<double> infomax_eta0;  // default 0.1 / N
  std::optional<Matrix> initial_w;     // replaces the random start when set

  void validate() const;
};

/// Decoupled cost of one row. `total = entropy_sum - log_det_term + sparsity_term`.
struct CostValue {
  double total = 0.0;
  double entropy_sum = 0.0;
  double log_det_term = 0.0;
  double sparsity_term = 0.0;
};

struct TraceEntry {
  int sweep = 0;
  Eigen::Index row = 0;
  CostValue before;
  CostValue after;
  bool accepted = false;
};

struct EngineResult {
  DemixingState state;
  std::vector<TraceEntry> trace;
  CostValue final_cost;  // full objective over all rows
  bool diverged = false;
};

/// sum_t sqrt(y_t^2 + eps).
double smoothed_l1(std::span<const double> y, double epsilon);

/// sum_t y_t / sqrt(y_t^2 + eps) * z_t, the gradient of smoothed_l1(w^T Z) in w.
Vector smoothed_l1_gradient(std::span<const double> y, const Matrix& z, double epsilon);

/// Decoupled cost of row `m` evaluated at the candidate vector `w`, using the
/// decoupling vector already stored in `state`. When `frozen` is set the
/// entropy uses that measuring function only.
///
/// Throws DegenerateError when |h_m^T w| <= 1e-12.
CostValue sparse_cost(const Vector& w, Eigen::Index m, const Matrix& z, const DemixingState& state,
                      const SparsityPenalty& penalty,
                      std::optional<ebm::FunctionId> frozen = std::nullopt);

/// Ambient gradient of sparse_cost in `w` for the measuring function chosen
/// by `est` (which must come from y = w^T Z).
Vector sparse_cost_gradient(const Vector& w, Eigen::Index m, const Matrix& z,
                            const DemixingState& state, const SparsityPenalty& penalty,
                            const ebm::EntropyEstimate& est);

/// Full (non-decoupled) objective: sum of row entropies - ln|det W| + penalties.
CostValue full_cost(const Matrix& w, const Matrix& z, const SparsityPenalty& penalty);

struct RowUpdate {
  bool accepted = false;
  CostValue before;
  CostValue after;
  double step = 0.0;  // accepted step length, 0 when rejected
};

/// One Armijo-backtracked descent step on row `m`. The search starts at
/// `initial_step` (defaults to the line-search setting). On rejection the row
/// is left bitwise unchanged.
RowUpdate decoupled_row_update(Eigen::Index m, DemixingState& state, const Matrix& z,
                               const SparsityPenalty& penalty, const EngineParams& params,
                               std::optional<double> initial_step = std::nullopt);

/// Random orthogonal matrix from the QR factor of a seeded Gaussian draw.
Matrix random_orthogonal(Eigen::Index n, std::uint64_t seed);

EngineResult run_sparse_ica_ebm(const DataMatrix& z, const SparsityPenalty& penalty,
                                const EngineParams& params);

EngineResult run_ica_ebm(const DataMatrix& z, const EngineParams& params);

/// Natural-gradient Infomax with a logistic source model. The learning rate
/// starts at infomax_eta0 and halves (down to 1e-5) whenever a step would
/// raise the likelihood cost. Rows are normalized only in the returned state.
EngineResult run_infomax_ng(const DataMatrix& z, const EngineParams& params);

enum class Algorithm { sparse_ebm, ebm, infomax_ng };
std::string_view to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(std::string_view s);

/// Dispatches on `algorithm`; `penalty` is ignored by the non-sparse engines.
EngineResult run_algorithm(Algorithm algorithm, const DataMatrix& z,
                           const SparsityPenalty& penalty, const EngineParams& params);

}  // namespace sparseica::ica
