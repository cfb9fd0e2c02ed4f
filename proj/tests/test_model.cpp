#include <doctest.h>

#include "sparseica/errors.hpp"
#include "sparseica/model.hpp"
#include "sparseica/seeding.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace sparseica;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

Matrix cov_of(const Matrix& x) {
  const Matrix c = x.colwise() - x.rowwise().mean();
  return c * c.transpose() / static_cast<double>(x.cols());
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sparseica_test_" + name);
}

}  // namespace

TEST_CASE("center subtracts row means") {
  auto [c, mean] = center(DataMatrix(Matrix{{1.0, 3.0}}, Role::mixtures));
  CHECK(c.values(0, 0) == -1.0);
  CHECK(c.values(0, 1) == 1.0);
  CHECK(mean(0) == 2.0);

  auto [z, zm] = center(DataMatrix(Matrix::Zero(3, 5), Role::mixtures));
  CHECK(z.values.isZero(0.0));
  CHECK(zm.isZero(0.0));

  const Matrix x = gaussian(4, 100, 1).array() + 5.0;
  auto [xc, xm] = center(DataMatrix(x, Role::mixtures));
  for (Eigen::Index i = 0; i < 4; ++i) {
    double s = 0;
    for (Eigen::Index t = 0; t < 100; ++t) s += xc.values(i, t);
    CHECK(std::abs(s / 100) < 1e-12);
  }
  CHECK((xc.values.colwise() + xm - x).cwiseAbs().maxCoeff() < 1e-12);

  auto [twice, m2] = center(xc);
  CHECK((twice.values - xc.values).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(center(DataMatrix(Matrix(0, 0), Role::mixtures)), DimensionError);
}

TEST_CASE("whiten on data with a known covariance") {
  // Row variances 4 and 1, zero covariance.
  const Matrix x{{2.0, -2.0, 2.0, -2.0}, {1.0, 1.0, -1.0, -1.0}};
  auto [z, t] = whiten(DataMatrix(x, Role::mixtures), 2);
  CHECK(z.role == Role::whitened);
  CHECK(t.eigenvalues(0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(t.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((cov_of(z.values) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(t.projection.rows() == 2);
  CHECK(std::abs(t.projection.determinant()) > 0.1);
}

TEST_CASE("whiten standard normal data") {
  const Matrix x = gaussian(2, 20000, 2);
  auto [z, t] = whiten(DataMatrix(x, Role::mixtures), 2);
  CHECK((cov_of(z.values) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  // The transform itself is close to identity up to rotation.
  const Matrix vvt = t.projection * t.projection.transpose();
  CHECK((vvt - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 5e-2);
}

TEST_CASE("whiten reduces rank and satisfies the transform invariant") {
  const Matrix a = gaussian(6, 6, 3);
  const Matrix x = a * gaussian(6, 3000, 4);
  auto [z, t] = whiten(DataMatrix(x, Role::mixtures), 4);
  CHECK(z.n_rows() == 4);
  CHECK(t.kept_rank == 4);
  for (Eigen::Index i = 1; i < t.eigenvalues.size(); ++i) {
    CHECK(t.eigenvalues(i) <= t.eigenvalues(i - 1));
  }
  const Matrix check = t.projection * cov_of(x) * t.projection.transpose();
  CHECK((check - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);

  // Same transform applied to the same data reproduces the output.
  const DataMatrix again = apply_whitening(t, DataMatrix(x, Role::mixtures));
  CHECK((again.values - z.values).cwiseAbs().maxCoeff() < 1e-9);

  // Whitening already white data gives an orthogonal projection.
  auto [z2, t2] = whiten(z, 4);
  const Matrix p = t2.projection * t2.projection.transpose();
  CHECK((p - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("whiten reports the deficient index") {
  Matrix x = gaussian(3, 500, 5);
  x.row(2) = x.row(0) + x.row(1);
  try {
    (void)whiten(DataMatrix(x, Role::mixtures), 3);
    FAIL("expected RankError");
  } catch (const RankError& e) {
    CHECK(e.deficient_index() == 2);
  }
  CHECK_NOTHROW((void)whiten(DataMatrix(x, Role::mixtures), 2));
  CHECK_THROWS_AS((void)whiten(DataMatrix(x, Role::mixtures), 4), Error);
}

TEST_CASE("decoupling vector examples") {
  const Vector h = decoupling_vector(Matrix::Identity(3, 3), 0);
  CHECK((h - Vector::Unit(3, 0)).norm() < 1e-12);

  const Matrix w{{1.0, 0.0}, {1.0, 1.0}};
  const Vector h2 = decoupling_vector(w, 1);
  CHECK(std::abs(h2(0)) < 1e-12);
  CHECK(h2(1) == doctest::Approx(1.0));
}

TEST_CASE("decoupling vector against a linear-solve oracle") {
  const Matrix w = gaussian(6, 6, 6) + 3.0 * Matrix::Identity(6, 6);
  for (Eigen::Index m = 0; m < 6; ++m) {
    const Vector h = decoupling_vector(w, m);
    CHECK(h.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.dot(w.row(m)) > 0);
    for (Eigen::Index n = 0; n < 6; ++n) {
      if (n != m) CHECK(std::abs(h.dot(w.row(n))) < 1e-8);
    }
    // Oracle: column m of W^{-1} is orthogonal to every other row.
    const Vector oracle = w.inverse().col(m).normalized();
    CHECK(std::abs(std::abs(oracle.dot(h)) - 1.0) < 1e-8);

    // Scaling another row leaves h unchanged.
    Matrix ws = w;
    ws.row((m + 1) % 6) *= -4.5;
    CHECK((decoupling_vector(ws, m) - h).norm() < 1e-8);
  }
}

TEST_CASE("decoupling vector rejects rank-deficient rows") {
  Matrix w = Matrix::Identity(3, 3);
  w.row(2) = w.row(1);
  CHECK_THROWS_AS(decoupling_vector(w, 0), DegenerateError);
}

TEST_CASE("refresh_decoupling keeps the state invariant") {
  DemixingState st;
  st.w = gaussian(5, 5, 7);
  st.w.rowwise().normalize();
  refresh_decoupling(st);
  for (Eigen::Index m = 0; m < 5; ++m) {
    CHECK(st.decoupling.row(m).norm() == doctest::Approx(1.0));
    for (Eigen::Index n = 0; n < 5; ++n) {
      if (n != m) CHECK(std::abs(st.decoupling.row(m).dot(st.w.row(n))) < 1e-8);
    }
  }
}

TEST_CASE("global matrix") {
  const Matrix a = gaussian(4, 4, 8) + 2.0 * Matrix::Identity(4, 4);
  CHECK((global_matrix(a.inverse(), a) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(global_matrix(Matrix::Identity(4, 4), a) == a);

  const Matrix w3 = gaussian(3, 3, 9), a3 = gaussian(3, 3, 10);
  const Matrix g = global_matrix(w3, a3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += w3(i, k) * a3(k, j);
      CHECK(std::abs(g(i, j) - s) < 1e-14);
    }
  }
  CHECK_THROWS_AS(global_matrix(Matrix::Identity(3, 3), Matrix::Identity(2, 2)), DimensionError);
  CHECK_THROWS_AS(global_matrix(Matrix::Identity(2, 3), Matrix::Identity(3, 2)), DimensionError);
}

TEST_CASE("matrix csv round trip and ragged rejection") {
  const auto path = temp_file("matrix.csv");
  const Matrix m = gaussian(3, 4, 11);
  write_matrix_csv(path, m);
  CHECK(read_matrix_csv(path) == m);

  {
    std::ofstream out(path);
    out << "1,2,3\n4,5\n";
  }
  CHECK_THROWS_AS(read_matrix_csv(path), DimensionError);
  {
    std::ofstream out(path);
    out << "1,x\n";
  }
  CHECK_THROWS_AS(read_matrix_csv(path), DimensionError);
  std::filesystem::remove(path);
}
