#include "sparseica/bench/selftest.hpp"

#include "sparseica/bench/summary.hpp"
#include "sparseica/bench/sweep.hpp"
#include "sparseica/datagen.hpp"
#include "sparseica/engines.hpp"
#include "sparseica/entropy.hpp"
#include "sparseica/metrics.hpp"
#include "sparseica/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

namespace sparseica::bench {

namespace {

using Check = std::function<std::string()>;  // empty string on success

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string gaussian_point() {
  for (std::size_t id = 0; id < ebm::kNumFunctions; ++id) {
    const auto& f = ebm::measuring_function(static_cast<ebm::FunctionId>(id));
    const auto b = ebm::default_bounds()[id].evaluate(ebm::gaussian_moment(f));
    if (std::abs(b.value - ebm::kGaussianEntropy) > 1e-4) {
      return "function " + std::to_string(id) + " gives " + fmt(b.value);
    }
  }
  return {};
}

std::string gaussian_entropy() {
  Rng rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> y(20000);
  for (auto& v : y) v = normal(rng);
  const auto est = ebm::estimate_entropy(ebm::standardize(y));
  if (std::abs(est.value - ebm::kGaussianEntropy) > 0.03) return "estimate " + fmt(est.value);
  return {};
}

std::string gradient_check() {
  const auto s = datagen::sample_ggd_sources(datagen::GgdSpec::unit(0.5), 3, 500, 11);
  Rng rng(12);
  const Matrix a = datagen::random_mixing(3, rng);
  auto [z, t] = whiten(DataMatrix(a * s, Role::mixtures), 3);
  DemixingState st;
  st.w = ica::random_orthogonal(3, 5);
  refresh_decoupling(st);
  ica::SparsityPenalty pen;
  pen.lambda = 1.0;
  pen.epsilon = 0.1;
  const Vector w = st.w.row(1).transpose();
  const Vector y = z.values.transpose() * w;
  const auto est = ebm::estimate_entropy({y.data(), static_cast<std::size_t>(y.size())});
  Vector g = ica::sparse_cost_gradient(w, 1, z.values, st, pen, est);
  g -= g.dot(w) * w;
  // Directional derivative along the tangent gradient, on the sphere.
  const Vector d = g.normalized();
  const double h = 1e-6;
  auto cost = [&](double s) {
    const Vector v = (w + s * d).normalized();
    return ica::sparse_cost(v, 1, z.values, st, pen, est.selected_function).total;
  };
  const double fd = (cost(h) - cost(-h)) / (2 * h);
  const double an = g.norm();
  if (std::abs(fd - an) > 1e-4 * std::max(1.0, std::abs(an))) {
    return "analytic " + fmt(an) + " vs finite difference " + fmt(fd);
  }
  return {};
}

std::string auction_oracle() {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix sc(4, 4);
    for (Eigen::Index i = 0; i < sc.size(); ++i) sc(i) = u(rng);
    std::vector<int> p{0, 1, 2, 3};
    double best = -1e300;
    do {
      double s = 0;
      for (int i = 0; i < 4; ++i) s += sc(i, p[static_cast<std::size_t>(i)]);
      best = std::max(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    const auto a = metrics::auction_assign(sc);
    if (a.total_score < best - 1e-6) return "auction " + fmt(a.total_score) + " < " + fmt(best);
  }
  return {};
}

std::string isr_identity() {
  Rng rng(4);
  std::normal_distribution<double> normal;
  Matrix g = Matrix::Zero(5, 5);
  std::vector<int> p{3, 0, 4, 1, 2};
  for (int i = 0; i < 5; ++i) g(i, p[static_cast<std::size_t>(i)]) = normal(rng) + 3.0;
  const double v = metrics::normalized_isr(g).normalized_isr;
  if (v != 0.0) return "isr " + fmt(v);
  Matrix g2{{1.0, 0.1}, {0.1, 1.0}};
  const double v2 = metrics::normalized_isr(g2).normalized_isr;
  if (std::abs(v2 - 0.01) > 1e-12) return "isr of [[1,.1],[.1,1]] = " + fmt(v2);
  return {};
}

std::string gini_identities() {
  std::vector<double> c(50, 2.5);
  if (metrics::gini_index(c) != 0.0) return "constant vector";
  std::vector<double> one(100, 0.0);
  one[17] = -3.0;
  if (std::abs(metrics::gini_index(one) - 0.99) > 1e-12) return "one-sparse vector";
  return {};
}

std::string pairing_invariance() {
  const auto s = datagen::sample_ggd_sources(datagen::GgdSpec::unit(0.5), 4, 300, 21);
  Matrix y(4, 300);
  const int perm[] = {2, 0, 3, 1};
  const double scale[] = {-2.0, 0.5, 3.0, -0.1};
  for (int i = 0; i < 4; ++i) y.row(i) = scale[i] * s.row(perm[i]).array() + 1.0;
  const auto pr = metrics::pair_components(s, y);
  if (std::abs(pr.mean_abs_corr - 1.0) > 1e-10) return "mean |corr| " + fmt(pr.mean_abs_corr);
  return {};
}

std::string engine_end_to_end() {
  const auto s = datagen::sample_ggd_sources(datagen::GgdSpec::unit(0.5), 2, 5000, 31);
  Rng rng(32);
  const Matrix a = datagen::random_mixing(2, rng);
  auto [z, t] = whiten(DataMatrix(a * s, Role::mixtures), 2);
  ica::EngineParams params;
  params.seed = 1;
  ica::SparsityPenalty pen;
  pen.lambda = 0.1;
  const auto r = ica::run_sparse_ica_ebm(z, pen, params);
  const double isr = metrics::normalized_isr(global_matrix(r.state.w * t.projection, a)).normalized_isr;
  if (!(isr < 1e-2)) return "normalized ISR " + fmt(isr);
  return {};
}

std::string sweep_determinism() {
  SweepConfig cfg;
  cfg.experiment = Experiment::isr_vs_beta;
  cfg.sweep_values = {0.3};
  cfg.n_sources = 3;
  cfg.samples = 300;
  cfg.runs = 2;
  cfg.master_seed = 99;
  std::ostringstream a, b;
  write_runs_csv(a, run_sweep(cfg, 1), false);
  write_runs_csv(b, run_sweep(cfg, 2), false);
  if (a.str() != b.str()) return "runs differ between 1 and 2 workers";
  return {};
}

std::string summary_basics() {
  std::vector<RunRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[static_cast<std::size_t>(i)].algorithm = "x";
    recs[static_cast<std::size_t>(i)].metric_value = i + 1.0;
  }
  const auto s = summarize(recs);
  if (s.size() != 1 || s[0].mean != 2.0 || s[0].median != 2.0) return "mean/median of {1,2,3}";
  return {};
}

}  // namespace

std::vector<SelftestCase> run_selftest() {
  const std::pair<const char*, Check> checks[] = {
      {"bound tables reproduce the Gaussian entropy", gaussian_point},
      {"entropy of Gaussian samples", gaussian_entropy},
      {"cost gradient vs finite differences", gradient_check},
      {"auction vs exhaustive assignment", auction_oracle},
      {"ISR of permutation-diagonal matrices", isr_identity},
      {"Gini identities", gini_identities},
      {"pairing under permutation, sign and scale", pairing_invariance},
      {"two-source separation", engine_end_to_end},
      {"sweep determinism across worker counts", sweep_determinism},
      {"summary statistics", summary_basics},
  };
  std::vector<SelftestCase> out;
  for (const auto& [name, check] : checks) {
    SelftestCase c{name, false, {}};
    try {
      c.detail = check();
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace sparseica::bench
