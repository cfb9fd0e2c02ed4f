#include <doctest.h>

#include "sparseica/errors.hpp"
#include "sparseica/metrics.hpp"
#include "sparseica/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

using namespace sparseica;

namespace {

double brute_force_best(const Matrix& s) {
  std::vector<int> p(static_cast<std::size_t>(s.rows()));
  std::iota(p.begin(), p.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double t = 0;
    for (std::size_t i = 0; i < p.size(); ++i) t += s(static_cast<Eigen::Index>(i), p[i]);
    best = std::max(best, t);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

bool is_permutation(const std::vector<int>& m) {
  std::set<int> seen(m.begin(), m.end());
  return seen.size() == m.size() && *seen.begin() == 0 &&
         *seen.rbegin() == static_cast<int>(m.size()) - 1;
}

Matrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("gini examples") {
  for (std::size_t t : {1u, 7u, 100u}) {
    std::vector<double> c(t, -1.25);
    CHECK(metrics::gini_index(c) == 0.0);
  }
  for (std::size_t t : {2u, 10u, 100u, 1000u}) {
    std::vector<double> one(t, 0.0);
    one[t / 2] = 4.0;
    CHECK(metrics::gini_index(one) == 1.0 - 1.0 / static_cast<double>(t));
  }
  Rng rng(1);
  std::normal_distribution<double> n;
  std::vector<double> y(257);
  for (auto& v : y) v = n(rng);
  const double g = metrics::gini_index(y);
  std::vector<double> scaled(y), shuffled(y);
  for (auto& v : scaled) v *= 7.3;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(metrics::gini_index(scaled) == doctest::Approx(g).epsilon(1e-14));
  CHECK(metrics::gini_index(shuffled) == doctest::Approx(g).epsilon(1e-14));
  CHECK(g > 0.0);
  CHECK(g < 1.0);

  std::vector<double> zero(5, 0.0);
  CHECK_THROWS_AS(metrics::gini_index(zero), MetricError);
}

TEST_CASE("gini increases under a Dalton transfer toward the larger entry") {
  const std::vector<double> base{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> moved{0.5, 2.0, 3.0, 4.5};
  const std::vector<double> moved2{1.0, 1.0, 3.0, 5.0};
  CHECK(metrics::gini_index(moved) > metrics::gini_index(base));
  CHECK(metrics::gini_index(moved2) > metrics::gini_index(base));
  // Hand value: sorted shares 0.1..0.4, weights (4-k+1/2)/4.
  const double hand = 1.0 - 2.0 * (0.1 * 3.5 + 0.2 * 2.5 + 0.3 * 1.5 + 0.4 * 0.5) / 4.0;
  CHECK(metrics::gini_index(base) == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("auction examples") {
  const Matrix d{{10.0, 1.0}, {1.0, 10.0}};
  const auto a = metrics::auction_assign(d);
  CHECK(a.mapping == std::vector<int>{0, 1});
  CHECK(a.total_score == doctest::Approx(20.0));

  const Matrix c = Matrix::Constant(5, 5, 2.5);
  const auto ac = metrics::auction_assign(c);
  CHECK(is_permutation(ac.mapping));
  CHECK(ac.total_score == doctest::Approx(12.5));

  Matrix bad = Matrix::Zero(3, 3);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(metrics::auction_assign(bad));
}

TEST_CASE("auction equals the exhaustive optimum") {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 120; ++rep) {
    const int n = 1 + rep % 6;
    Matrix s(n, n);
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = u(rng);
    const auto a = metrics::auction_assign(s);
    CHECK(is_permutation(a.mapping));
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      CHECK(a.per_pair_scores[static_cast<std::size_t>(i)] == s(i, a.mapping[static_cast<std::size_t>(i)]));
      sum += a.per_pair_scores[static_cast<std::size_t>(i)];
    }
    CHECK(a.total_score == doctest::Approx(sum).epsilon(1e-14));
    CHECK(a.total_score >= brute_force_best(s) - 1e-9);
  }
}

TEST_CASE("pearson") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 4, 6, 8, 10};
  const std::vector<double> c{5, 4, 3, 2, 1};
  CHECK(metrics::pearson(a, b) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(metrics::pearson(a, c) == doctest::Approx(-1.0).epsilon(1e-14));
  const std::vector<double> k(5, 1.0);
  CHECK_THROWS_AS(metrics::pearson(a, k), MetricError);
}

TEST_CASE("pair components") {
  Rng rng(3);
  const Matrix s = gaussian(5, 2000, rng);
  const int perm[] = {3, 1, 4, 0, 2};
  Matrix y(5, 2000);
  for (int i = 0; i < 5; ++i) y.row(i) = (i % 2 ? -2.5 : 0.4) * s.row(perm[i]).array() + 3.0 * i;
  const auto p = metrics::pair_components(s, y);
  CHECK(std::abs(p.mean_abs_corr - 1.0) < 1e-10);
  for (int i = 0; i < 5; ++i) CHECK(p.assignment.mapping[static_cast<std::size_t>(i)] == perm[i]);

  // Affine maps of the truth do not change the score.
  const Matrix s2 = (-3.0 * s).array() + 1.0;
  CHECK(metrics::pair_components(s2, y).mean_abs_corr == doctest::Approx(p.mean_abs_corr));

  Rng r2(4);
  const Matrix t = gaussian(5, 10000, r2);
  const Matrix noise = gaussian(5, 10000, r2);
  CHECK(metrics::pair_components(t, noise).mean_abs_corr < 0.05);

  // Duplicate estimate still yields a bijection.
  Matrix dup = s;
  dup.row(1) = s.row(0) * 2.0;
  const auto pd = metrics::pair_components(s, dup);
  CHECK(is_permutation(pd.assignment.mapping));

  Matrix zero_row = y;
  zero_row.row(2).setConstant(1.0);
  try {
    (void)metrics::pair_components(s, zero_row);
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS(metrics::pair_components(s, gaussian(5, 100, r2)));
}

TEST_CASE("normalized isr") {
  CHECK(metrics::normalized_isr(Matrix::Identity(4, 4)).normalized_isr == 0.0);
  const Matrix g{{1.0, 0.1}, {0.1, 1.0}};
  const auto r = metrics::normalized_isr(g);
  CHECK(r.normalized_isr == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(r.per_row_isr.size() == 2);
  const Matrix dg = Eigen::Vector2d(2.0, -3.0).asDiagonal() * g;
  CHECK(metrics::normalized_isr(dg).normalized_isr == doctest::Approx(r.normalized_isr).epsilon(1e-14));

  // Naive formula on a random matrix with a clear dominant permutation.
  Rng rng(5);
  Matrix m = 0.1 * gaussian(4, 4, rng);
  const int perm[] = {2, 0, 3, 1};
  for (int i = 0; i < 4; ++i) m(i, perm[i]) += 1.0;
  double total = 0;
  for (int i = 0; i < 4; ++i) {
    double off = 0;
    for (int j = 0; j < 4; ++j) {
      if (j != perm[i]) off += m(i, j) * m(i, j);
    }
    total += off / (m(i, perm[i]) * m(i, perm[i]));
  }
  const auto rep = metrics::normalized_isr(m);
  CHECK(rep.normalized_isr == doctest::Approx(total / 12.0).epsilon(1e-12));
  CHECK(rep.permutation_used == std::vector<int>{2, 0, 3, 1});

  // Permutation times invertible diagonal.
  for (int c = 0; c < 100; ++c) {
    const int n = 2 + c % 7;
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    Matrix pd = Matrix::Zero(n, n);
    std::normal_distribution<double> nd;
    for (int i = 0; i < n; ++i) pd(i, p[static_cast<std::size_t>(i)]) = nd(rng) + (nd(rng) > 0 ? 2 : -2);
    CHECK(metrics::normalized_isr(pd).normalized_isr <= 1e-12);
  }

  CHECK_THROWS(metrics::normalized_isr(Matrix::Zero(3, 3)));
  CHECK_THROWS_AS(metrics::normalized_isr(Matrix::Identity(2, 3)), DimensionError);
}
