#include "sparseica/model.hpp"

#include "sparseica/errors.hpp"
#include "sparseica/csv.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace sparseica {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::sources: return "sources";
    case Role::mixtures: return "mixtures";
    case Role::whitened: return "whitened";
    case Role::estimates: return "estimates";
  }
  return "unknown";
}

Matrix sample_covariance(const Matrix& centered) {
  const double t = static_cast<double>(centered.cols());
  Matrix cov = Matrix::Zero(centered.rows(), centered.rows());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / t);
  return cov.selfadjointView<Eigen::Lower>();
}

std::pair<DataMatrix, Vector> center(const DataMatrix& x) {
  if (x.n_rows() == 0 || x.n_samples() == 0) {
    throw DimensionError("center: empty matrix");
  }
  Vector mean = x.values.rowwise().mean();
  DataMatrix out(x.values.colwise() - mean, x.role);
  return {std::move(out), std::move(mean)};
}

Matrix WhiteningTransform::back_project(const Matrix& whitened_rows) const {
  return whitened_rows * projection;
}

std::pair<DataMatrix, WhiteningTransform> whiten(const DataMatrix& x,
                                                 Eigen::Index kept_rank) {
  const Eigen::Index n = x.n_rows();
  if (kept_rank < 1 || kept_rank > n) {
    throw DimensionError("whiten: kept_rank " + std::to_string(kept_rank) +
                         " outside [1, " + std::to_string(n) + "]");
  }
  auto [centered, mean] = center(x);
  const Matrix cov = sample_covariance(centered.values);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error("whiten: eigendecomposition failed");
  }
  // Eigen returns ascending order.
  Vector evals = eig.eigenvalues().reverse();
  Matrix evecs = eig.eigenvectors().rowwise().reverse();

  const double top = evals(0);
  for (Eigen::Index k = 0; k < kept_rank; ++k) {
    if (!(evals(k) > 1e-12 * top) || !(top > 0.0)) {
      throw RankError("whiten: eigenvalue " + std::to_string(k) +
                          " is numerically zero; data rank is below kept_rank " +
                          std::to_string(kept_rank),
                      static_cast<std::size_t>(k));
    }
  }

  WhiteningTransform t;
  t.kept_rank = kept_rank;
  t.mean = std::move(mean);
  t.eigenvalues = evals;
  t.projection = evals.head(kept_rank).cwiseSqrt().cwiseInverse().asDiagonal() *
                 evecs.leftCols(kept_rank).transpose();

  DataMatrix z(t.projection * centered.values, Role::whitened);
  return {std::move(z), std::move(t)};
}

DataMatrix apply_whitening(const WhiteningTransform& t, const DataMatrix& x) {
  if (x.n_rows() != t.mean.size()) {
    throw DimensionError("apply_whitening: channel count mismatch");
  }
  return DataMatrix(t.projection * (x.values.colwise() - t.mean), Role::whitened);
}

Vector decoupling_vector(const Matrix& w, Eigen::Index m) {
  const Eigen::Index n = w.rows();
  if (w.cols() != n || n == 0) {
    throw DimensionError("decoupling_vector: W must be square and nonempty");
  }
  if (m < 0 || m >= n) {
    throw DimensionError("decoupling_vector: row index out of range");
  }
  Vector h(n);
  if (n == 1) {
    h(0) = w(0, 0) >= 0.0 ? 1.0 : -1.0;
    return h;
  }

  // Columns of `others` span the rows n != m; the last column of the full Q
  // factor is orthogonal to all of them.
  Matrix others(n, n - 1);
  for (Eigen::Index r = 0, c = 0; r < n; ++r) {
    if (r != m) others.col(c++) = w.row(r).transpose();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(others);
  const auto& r = qr.matrixR();
  const double scale = std::abs(r(0, 0));
  const double last = std::abs(r(n - 2, n - 2));
  if (!(scale > 0.0) || last <= 1e-12 * scale) {
    throw DegenerateError("decoupling_vector: rows other than " +
                          std::to_string(m) + " are rank deficient");
  }
  Matrix q = qr.householderQ();
  h = q.col(n - 1);
  h.normalize();
  if (h.dot(w.row(m)) < 0.0) h = -h;
  return h;
}

void refresh_decoupling(DemixingState& state) {
  const Eigen::Index n = state.size();
  state.decoupling.resize(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    state.decoupling.row(m) = decoupling_vector(state.w, m).transpose();
  }
}

Matrix global_matrix(const Matrix& w, const Matrix& a) {
  if (w.rows() != w.cols() || a.rows() != a.cols() || w.cols() != a.rows()) {
    throw DimensionError("global_matrix: expected conformable square matrices");
  }
  return w * a;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      auto v = csv::parse_double(f);
      if (!v) {
        throw DimensionError(path.string() + ":" + std::to_string(line_no) +
                             ": not a number: '" + f + "'");
      }
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DimensionError(path.string() + ":" + std::to_string(line_no) +
                           ": ragged row (" + std::to_string(row.size()) +
                           " fields, expected " +
                           std::to_string(rows.front().size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DimensionError(path.string() + ": empty matrix file");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += csv::format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
}

}  // namespace sparseica
