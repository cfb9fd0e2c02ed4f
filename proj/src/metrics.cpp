#include "sparseica/metrics.hpp"

#include "sparseica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sparseica::metrics {

double gini_index(std::span<const double> y) {
  if (y.empty()) throw MetricError("gini_index: empty vector");
  std::vector<double> c(y.size());
  std::transform(y.begin(), y.end(), c.begin(), [](double v) { return std::abs(v); });
  std::sort(c.begin(), c.end());
  const double l1 = std::accumulate(c.begin(), c.end(), 0.0);
  if (!(l1 > 0.0)) throw MetricError("gini_index: sparsity undefined for an all-zero vector");
  // Equivalent pairwise form: sum over mirrored ranks of (T+1-2k)(s_(T+1-k) - s_(k)),
  // with shares s = c / |c|_1. Equal magnitudes cancel exactly, so constant
  // vectors give exactly 0 and a single nonzero gives exactly 1 - 1/T.
  const std::size_t n = c.size();
  const double t = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double hi = c[n - 1 - k] / l1, lo = c[k] / l1;
    d += (t - 1.0 - 2.0 * static_cast<double>(k)) * (hi - lo);
  }
  return 1.0 - (t - d) / t;
}

namespace {

// One auction phase at fixed epsilon; prices carry over between phases.
void auction_phase(const Matrix& a, double eps, std::vector<double>& price,
                   std::vector<int>& owner_of, std::vector<int>& object_of) {
  const int n = static_cast<int>(a.rows());
  std::fill(owner_of.begin(), owner_of.end(), -1);
  std::fill(object_of.begin(), object_of.end(), -1);
  std::vector<int> unassigned(static_cast<std::size_t>(n));
  std::iota(unassigned.begin(), unassigned.end(), 0);
  while (!unassigned.empty()) {
    const int i = unassigned.back();
    unassigned.pop_back();
    int best = -1;
    double v1 = -std::numeric_limits<double>::infinity();
    double v2 = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double v = a(i, j) - price[static_cast<std::size_t>(j)];
      if (v > v1) {
        v2 = v1;
        v1 = v;
        best = j;
      } else if (v > v2) {
        v2 = v;
      }
    }
    const double increment = (n == 1 ? 0.0 : v1 - v2) + eps;
    price[static_cast<std::size_t>(best)] += increment;
    const int prev = owner_of[static_cast<std::size_t>(best)];
    if (prev >= 0) {
      object_of[static_cast<std::size_t>(prev)] = -1;
      unassigned.push_back(prev);
    }
    owner_of[static_cast<std::size_t>(best)] = i;
    object_of[static_cast<std::size_t>(i)] = best;
  }
}

}  // namespace

Assignment auction_assign(const Matrix& score, double eps_auction) {
  const Eigen::Index n = score.rows();
  if (n == 0 || score.cols() != n) throw DimensionError("auction_assign: need a square matrix");
  if (!score.allFinite()) throw ParameterError("auction_assign: non-finite score entries");
  const double eps_final = eps_auction > 0.0 ? eps_auction : 1e-3 / static_cast<double>(n);

  // Shift scores to be nonnegative; the optimal permutation is unchanged.
  const Matrix a = score.array() - score.minCoeff();
  std::vector<double> price(static_cast<std::size_t>(n), 0.0);
  std::vector<int> owner_of(static_cast<std::size_t>(n)), object_of(static_cast<std::size_t>(n));

  double eps = a.cwiseAbs().maxCoeff() / 2.0;
  while (eps >= eps_final) {
    auction_phase(a, eps, price, owner_of, object_of);
    eps /= 4.0;
  }
  auction_phase(a, eps_final, price, owner_of, object_of);

  Assignment out;
  out.mapping = object_of;
  out.per_pair_scores.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.per_pair_scores[static_cast<std::size_t>(i)] =
        score(i, object_of[static_cast<std::size_t>(i)]);
  }
  out.total_score = std::accumulate(out.per_pair_scores.begin(), out.per_pair_scores.end(), 0.0);
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("pearson: length mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw MetricError("pearson: zero-variance input");
  return sab / std::sqrt(saa * sbb);
}

Pairing pair_components(const Matrix& truth, const Matrix& estimates) {
  if (truth.cols() != estimates.cols()) {
    throw DimensionError("pair_components: sample counts differ");
  }
  if (truth.rows() != estimates.rows() || truth.rows() == 0) {
    throw DimensionError("pair_components: component counts differ");
  }
  const Eigen::Index n = truth.rows();
  auto standardized = [](const Matrix& m, const char* which) {
    Matrix out = m.colwise() - m.rowwise().mean();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double norm = out.row(i).norm();
      if (!(norm > 0.0)) {
        throw MetricError(std::string("pair_components: ") + which + " row " +
                          std::to_string(i) + " has zero variance");
      }
      out.row(i) /= norm;
    }
    return out;
  };
  const Matrix s = standardized(truth, "true");
  const Matrix y = standardized(estimates, "estimated");
  const Matrix corr = (y * s.transpose()).cwiseAbs();  // rows: estimated

  Pairing p;
  p.assignment = auction_assign(corr);
  p.mean_abs_corr = p.assignment.total_score / static_cast<double>(n);
  return p;
}

IsrReport normalized_isr(const Matrix& g) {
  const Eigen::Index n = g.rows();
  if (n == 0 || g.cols() != n) throw DimensionError("normalized_isr: need a square matrix");
  if (!g.allFinite()) throw MetricError("normalized_isr: non-finite global matrix");
  IsrReport r;
  const Assignment asg = auction_assign(g.cwiseAbs());
  r.permutation_used = asg.mapping;
  r.per_row_isr.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const int target = asg.mapping[static_cast<std::size_t>(m)];
    const double on = g(m, target) * g(m, target);
    if (!(on > 0.0)) {
      throw MetricError("normalized_isr: row " + std::to_string(m) +
                        " has no energy on its matched source");
    }
    double off = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != target) off += g(m, k) * g(m, k);
    }
    const double isr = off / on;
    r.per_row_isr[static_cast<std::size_t>(m)] = isr;
    sum += isr;
  }
  r.normalized_isr = n > 1 ? sum / static_cast<double>(n * (n - 1)) : 0.0;
  return r;
}

}  // namespace sparseica::metrics
