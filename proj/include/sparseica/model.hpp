#pragma once

// Data model and preprocessing shared by every separation engine.

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <utility>

namespace sparseica {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Role { sources, mixtures, whitened, estimates };

std::string_view to_string(Role role);

/// Rows are channels (or sources), columns are samples.
struct DataMatrix {
  Matrix values;
  Role role = Role::mixtures;

  DataMatrix() = default;
  DataMatrix(Matrix v, Role r) : values(std::move(v)), role(r) {}

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_samples() const { return values.cols(); }
};

/// Sample covariance with 1/T normalization. Rows are assumed centered.
Matrix sample_covariance(const Matrix& centered);

/// Subtracts each row's mean. Throws DimensionError on an empty matrix.
std::pair<DataMatrix, Vector> center(const DataMatrix& x);

struct WhiteningTransform {
  Matrix projection;    // K x N
  Vector mean;          // length N
  Eigen::Index kept_rank = 0;
  Vector eigenvalues;   // length N, nonincreasing

  /// Maps whitened-domain rows back onto original channel coordinates.
  Matrix back_project(const Matrix& whitened_rows) const;
};

/// PCA whitening down to `kept_rank` components.
///
/// The input is centered first (a no-op for centered data) so the stored mean
/// lets callers apply the same transform to new observations. Eigenvalues
/// below 1e-12 of the largest within the kept block raise RankError naming
/// the first deficient index.
std::pair<DataMatrix, WhiteningTransform> whiten(const DataMatrix& x,
                                                 Eigen::Index kept_rank);

/// Applies an existing transform to new data: V (x - mean).
DataMatrix apply_whitening(const WhiteningTransform& t, const DataMatrix& x);

struct DemixingState {
  Matrix w;           // N x N, rows are unit-norm demixing vectors
  Matrix decoupling;  // N x N, row m is h_m
  std::size_t iteration = 0;
  bool converged = false;

  Eigen::Index size() const { return w.rows(); }
};

/// Unit vector orthogonal to every row of `w` except row `m`, signed so that
/// it has a positive inner product with row `m`.
///
/// Throws DegenerateError when the remaining rows are rank deficient.
Vector decoupling_vector(const Matrix& w, Eigen::Index m);

/// Recomputes every h_m of `state` from its current rows.
void refresh_decoupling(DemixingState& state);

/// G = W A. Throws DimensionError unless both are square and conformable.
Matrix global_matrix(const Matrix& w, const Matrix& a);

// CSV matrix files: row-major, no header, one matrix row per line.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

}  // namespace sparseica
