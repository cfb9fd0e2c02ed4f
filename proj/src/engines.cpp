#include "sparseica/engines.hpp"

#include "sparseica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sparseica::ica {
namespace {

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

Vector project_row(const Vector& w, const Matrix& z) { return z.transpose() * w; }

}  // namespace

double SparsityPenalty::lambda_for(Eigen::Index m) const {
  if (per_source.empty()) return lambda;
  return per_source.at(static_cast<std::size_t>(m));
}

void SparsityPenalty::validate(Eigen::Index n_sources) const {
  if (!(epsilon > 0.0)) throw ParameterError("sparsity penalty: epsilon must be > 0");
  if (!(lambda >= 0.0)) throw ParameterError("sparsity penalty: lambda must be >= 0");
  if (!per_source.empty()) {
    if (static_cast<Eigen::Index>(per_source.size()) != n_sources) {
      throw ParameterError("sparsity penalty: per-source lambda count " +
                           std::to_string(per_source.size()) + " != " +
                           std::to_string(n_sources));
    }
    for (double l : per_source) {
      if (!(l >= 0.0)) throw ParameterError("sparsity penalty: lambda must be >= 0");
    }
  }
}

void EngineParams::validate() const {
  if (max_sweeps < 1) throw ParameterError("engine: max_sweeps must be >= 1");
  if (restarts < 1) throw ParameterError("engine: restarts must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("engine: tol must be > 0");
  if (line_search.max_halvings < 1) throw ParameterError("engine: max_halvings must be >= 1");
  if (!(line_search.initial_step > 0.0)) throw ParameterError("engine: initial_step must be > 0");
  if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0)) {
    throw ParameterError("engine: shrink must lie in (0, 1)");
  }
  if (!(line_search.max_rotation > 0.0)) throw ParameterError("engine: max_rotation must be > 0");
  if (infomax_eta0 && !(*infomax_eta0 > 0.0)) {
    throw ParameterError("engine: infomax_eta0 must be > 0");
  }
}

double smoothed_l1(std::span<const double> y, double epsilon) {
  double acc = 0.0;
  for (double v : y) acc += std::sqrt(v * v + epsilon);
  return acc;
}

Vector smoothed_l1_gradient(std::span<const double> y, const Matrix& z, double epsilon) {
  const auto t = static_cast<Eigen::Index>(y.size());
  if (z.cols() != t) throw DimensionError("smoothed_l1_gradient: dimension mismatch");
  Vector weights(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    const double v = y[static_cast<std::size_t>(i)];
    weights(i) = v / std::sqrt(v * v + epsilon);
  }
  return z * weights;
}

namespace {

CostValue cost_from(const ebm::EntropyEstimate& est, double hw, std::span<const double> y,
                    double lambda, double epsilon) {
  CostValue c;
  c.entropy_sum = est.value;
  c.log_det_term = std::log(std::abs(hw));
  c.sparsity_term = lambda > 0.0 ? lambda * smoothed_l1(y, epsilon) : 0.0;
  c.total = c.entropy_sum - c.log_det_term + c.sparsity_term;
  return c;
}

double checked_hw(const Vector& w, Eigen::Index m, const DemixingState& state) {
  if (state.decoupling.rows() != state.w.rows() || state.decoupling.cols() != w.size()) {
    throw DimensionError("sparse_cost: decoupling vectors not initialized");
  }
  const double hw = state.decoupling.row(m).dot(w);
  if (!(std::abs(hw) > 1e-12)) {
    throw DegenerateError("row " + std::to_string(m) +
                          " collapsed into the span of the other rows");
  }
  return hw;
}

}  // namespace

CostValue sparse_cost(const Vector& w, Eigen::Index m, const Matrix& z, const DemixingState& state,
                      const SparsityPenalty& penalty, std::optional<ebm::FunctionId> frozen) {
  if (w.size() != z.rows()) throw DimensionError("sparse_cost: dimension mismatch");
  const double hw = checked_hw(w, m, state);
  const Vector y = project_row(w, z);
  const auto ys = as_span(y);
  const auto est = frozen ? ebm::estimate_entropy_with(ys, *frozen) : ebm::estimate_entropy(ys);
  return cost_from(est, hw, ys, penalty.lambda_for(m), penalty.epsilon);
}

Vector sparse_cost_gradient(const Vector& w, Eigen::Index m, const Matrix& z,
                            const DemixingState& state, const SparsityPenalty& penalty,
                            const ebm::EntropyEstimate& est) {
  const double hw = checked_hw(w, m, state);
  const Vector y = project_row(w, z);
  const auto ys = as_span(y);
  Vector grad = ebm::entropy_gradient(ys, z, w, est);
  grad -= state.decoupling.row(m).transpose() / hw;
  const double lambda = penalty.lambda_for(m);
  if (lambda > 0.0) grad += lambda * smoothed_l1_gradient(ys, z, penalty.epsilon);
  return grad;
}

CostValue full_cost(const Matrix& w, const Matrix& z, const SparsityPenalty& penalty) {
  if (w.cols() != z.rows() || w.rows() != w.cols()) {
    throw DimensionError("full_cost: dimension mismatch");
  }
  CostValue c;
  const Matrix y = w * z;
  for (Eigen::Index m = 0; m < w.rows(); ++m) {
    const Vector row = y.row(m).transpose();
    const auto ys = as_span(row);
    c.entropy_sum += ebm::estimate_entropy(ys).value;
    const double lambda = penalty.lambda_for(m);
    if (lambda > 0.0) c.sparsity_term += lambda * smoothed_l1(ys, penalty.epsilon);
  }
  c.log_det_term = std::log(std::abs(w.determinant()));
  c.total = c.entropy_sum - c.log_det_term + c.sparsity_term;
  return c;
}

RowUpdate decoupled_row_update(Eigen::Index m, DemixingState& state, const Matrix& z,
                               const SparsityPenalty& penalty, const EngineParams& params,
                               std::optional<double> initial_step) {
  const Vector w = state.w.row(m).transpose();
  const double hw = checked_hw(w, m, state);
  const Vector y = project_row(w, z);
  const auto est = ebm::estimate_entropy(as_span(y));
  const double lambda = penalty.lambda_for(m);

  RowUpdate out;
  out.before = cost_from(est, hw, as_span(y), lambda, penalty.epsilon);
  out.after = out.before;

  Vector grad = sparse_cost_gradient(w, m, z, state, penalty, est);
  grad -= grad.dot(w) * w;  // tangent to the sphere
  const double g2 = grad.squaredNorm();
  if (!(g2 > 0.0) || !std::isfinite(g2)) return out;

  const auto& ls = params.line_search;
  double step = initial_step.value_or(ls.initial_step);
  // Trust region on the sphere: with large lambda the gradient norm is huge
  // and an Armijo-acceptable long step can land in another source's basin.
  step = std::min(step, ls.max_rotation / std::sqrt(g2));
  for (int k = 0; k <= ls.max_halvings; ++k, step *= ls.shrink) {
    Vector trial = w - step * grad;
    const double norm = trial.norm();
    if (!(norm > 0.0)) continue;
    trial /= norm;
    const double thw = state.decoupling.row(m).dot(trial);
    if (!(std::abs(thw) > 1e-12)) continue;
    const Vector ty = project_row(trial, z);
    ebm::EntropyEstimate test;
    try {
      test = ebm::estimate_entropy_with(as_span(ty), est.selected_function);
    } catch (const EstimationError&) {
      continue;
    }
    const CostValue c = cost_from(test, thw, as_span(ty), lambda, penalty.epsilon);
    if (c.total <= out.before.total - ls.armijo * step * g2 && c.total < out.before.total) {
      state.w.row(m) = trial.transpose();
      out.accepted = true;
      out.after = c;
      out.step = step;
      return out;
    }
  }
  return out;
}

Matrix random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

namespace {

void check_input(const DataMatrix& z) {
  if (z.n_rows() < 1) throw DimensionError("engine: empty data");
  if (z.n_samples() < z.n_rows()) {
    throw DimensionError("engine: need at least as many samples as rows");
  }
}

Matrix initial_demixing(const DataMatrix& z, const EngineParams& params, std::uint64_t seed) {
  const Eigen::Index n = z.n_rows();
  if (params.initial_w) {
    if (params.initial_w->rows() != n || params.initial_w->cols() != n) {
      throw DimensionError("engine: initial_w must be N x N");
    }
    Matrix w = *params.initial_w;
    w.rowwise().normalize();
    return w;
  }
  return random_orthogonal(n, seed);
}

EngineResult run_ebm_once(const Matrix& z, Matrix w0, const SparsityPenalty& penalty,
                          const EngineParams& params) {
  const Eigen::Index n = z.rows();
  EngineResult result;
  DemixingState& state = result.state;
  state.w = std::move(w0);
  refresh_decoupling(state);

  const double max_step = params.line_search.initial_step;
  std::vector<double> hint(static_cast<std::size_t>(n), max_step);
  for (int sweep = 1; sweep <= params.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      state.decoupling.row(m) = decoupling_vector(state.w, m).transpose();
      const Vector old = state.w.row(m).transpose();
      auto& h = hint[static_cast<std::size_t>(m)];
      const RowUpdate upd = decoupled_row_update(m, state, z, penalty, params, h);
      if (upd.accepted) {
        h = std::min(max_step, 2.0 * upd.step);
        const double change = 1.0 - std::abs(state.w.row(m).dot(old));
        max_change = std::max(max_change, change);
      }
      result.trace.push_back({sweep, m, upd.before, upd.after, upd.accepted});
    }
    state.iteration = static_cast<std::size_t>(sweep);
    if (max_change < params.tol) {
      state.converged = true;
      break;
    }
  }
  refresh_decoupling(state);
  result.final_cost = full_cost(state.w, z, penalty);
  return result;
}

Matrix symmetric_decorrelation(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
  const Vector inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

// Sum of row entropies; +inf when some row has no feasible bound.
double entropy_sum(const Matrix& w, const Matrix& z, std::vector<ebm::EntropyEstimate>* out) {
  const Matrix y = w * z;
  double total = 0.0;
  if (out) out->clear();
  for (Eigen::Index m = 0; m < w.rows(); ++m) {
    const Vector row = y.row(m).transpose();
    try {
      auto est = ebm::estimate_entropy(as_span(row));
      total += est.value;
      if (out) out->push_back(std::move(est));
    } catch (const EstimationError&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return total;
}

// Orthogonally constrained descent on the summed entropies. All rows move
// together and are re-orthogonalized, so a pair of rows cannot settle on two
// nearby mixtures of the same two sources the way the row-wise descent can.
Matrix orthogonal_stage(const Matrix& z, Matrix w, const EngineParams& params) {
  std::vector<ebm::EntropyEstimate> est;
  double cost = entropy_sum(w, z, &est);
  if (!std::isfinite(cost)) return w;
  const double max_step = params.line_search.initial_step;
  double step = max_step;
  for (int it = 0; it < params.max_sweeps && step > 1e-10; ++it) {
    Matrix grad(w.rows(), w.cols());
    const Matrix y = w * z;
    for (Eigen::Index m = 0; m < w.rows(); ++m) {
      const Vector row = y.row(m).transpose();
      grad.row(m) = ebm::entropy_gradient(as_span(row), z, w.row(m).transpose(),
                                          est[static_cast<std::size_t>(m)])
                        .transpose();
    }
    while (step > 1e-10) {
      const Matrix trial = symmetric_decorrelation(w - step * grad);
      std::vector<ebm::EntropyEstimate> trial_est;
      const double c = entropy_sum(trial, z, &trial_est);
      if (c < cost) {
        const double change =
            1.0 - (trial.array() * w.array()).rowwise().sum().abs().minCoeff();
        w = trial;
        cost = c;
        est = std::move(trial_est);
        step = std::min(max_step, 2.0 * step);
        if (change < params.tol) return w;
        break;
      }
      step *= params.line_search.shrink;
    }
  }
  return w;
}

bool penalized(const SparsityPenalty& penalty, Eigen::Index n) {
  for (Eigen::Index m = 0; m < n; ++m) {
    if (penalty.lambda_for(m) > 0.0) return true;
  }
  return false;
}

}  // namespace

EngineResult run_sparse_ica_ebm(const DataMatrix& z, const SparsityPenalty& penalty,
                                const EngineParams& params) {
  check_input(z);
  params.validate();
  penalty.validate(z.n_rows());
  const Eigen::Index n = z.n_rows();

  if (n == 1) {
    EngineResult r;
    r.state.w = Matrix::Ones(1, 1);
    refresh_decoupling(r.state);
    r.state.converged = true;
    r.final_cost = full_cost(r.state.w, z.values, penalty);
    return r;
  }

  std::mt19937_64 seeder(params.seed);
  EngineResult best;
  bool have_best = false;
  for (int r = 0; r < params.restarts; ++r) {
    const std::uint64_t init_seed = seeder();
    Matrix w0 = (r == 0 && params.initial_w) ? initial_demixing(z, params, init_seed)
                                             : random_orthogonal(n, init_seed);
    const bool user_start = r == 0 && params.initial_w.has_value();
    EngineResult run;
    if (!user_start) w0 = orthogonal_stage(z.values, std::move(w0), params);
    if (penalized(penalty, n) && !user_start) {
      // The penalty sum is unnormalized, so at large lambda it swamps the
      // log-det barrier and rows started at random fall into the same basin.
      // Separate first without it, then refine.
      SparsityPenalty off = penalty;
      off.lambda = 0.0;
      off.per_source.clear();
      EngineResult stage = run_ebm_once(z.values, std::move(w0), off, params);
      run = run_ebm_once(z.values, stage.state.w, penalty, params);
      run.trace.insert(run.trace.begin(), stage.trace.begin(), stage.trace.end());
    } else {
      run = run_ebm_once(z.values, std::move(w0), penalty, params);
    }
    if (!have_best || run.final_cost.total < best.final_cost.total) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

EngineResult run_ica_ebm(const DataMatrix& z, const EngineParams& params) {
  SparsityPenalty off;
  off.lambda = 0.0;
  return run_sparse_ica_ebm(z, off, params);
}

namespace {

// Negative log-likelihood per sample under a logistic source model, up to a
// constant: -ln|det W| + mean_t sum_n 2 ln cosh(y_nt / 2).
double infomax_cost(const Matrix& w, const Matrix& z, double* log_det = nullptr) {
  const Matrix y = w * z;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double a = std::abs(y(i, j));
      acc += a + 2.0 * std::log1p(std::exp(-a));
    }
  }
  const double ld = std::log(std::abs(w.determinant()));
  if (log_det) *log_det = ld;
  return acc / static_cast<double>(y.cols()) - ld;
}

}  // namespace

EngineResult run_infomax_ng(const DataMatrix& z, const EngineParams& params) {
  check_input(z);
  params.validate();
  const Eigen::Index n = z.n_rows();
  const double t = static_cast<double>(z.n_samples());
  constexpr double kEtaFloor = 1e-5;
  constexpr double kDiverged = 1e6;

  EngineResult result;
  Matrix w = params.initial_w ? *params.initial_w : Matrix::Identity(n, n);
  if (w.rows() != n || w.cols() != n) throw DimensionError("engine: initial_w must be N x N");
  double eta = params.infomax_eta0.value_or(0.1 / static_cast<double>(n));
  double cost = infomax_cost(w, z.values);
  const Matrix eye = Matrix::Identity(n, n);

  int it = 1;
  for (; it <= params.max_sweeps; ++it) {
    const Matrix y = w * z.values;
    const Matrix score = (0.5 * y.array()).tanh().matrix();
    const Matrix delta = eta * (eye - (score * y.transpose()) / t) * w;
    const double dnorm = delta.norm();
    if (!std::isfinite(dnorm) || dnorm > kDiverged) {
      result.diverged = true;
      break;
    }
    const Matrix trial = w + delta;
    double log_det = 0.0;
    const double trial_cost = infomax_cost(trial, z.values, &log_det);
    CostValue before{cost, cost, 0.0, 0.0};
    if (!(trial_cost <= cost) && eta > kEtaFloor) {
      eta = std::max(kEtaFloor, 0.5 * eta);
      result.trace.push_back({it, 0, before, before, false});
      continue;
    }
    if (!std::isfinite(trial_cost)) {
      result.diverged = true;
      break;
    }
    w = trial;
    cost = trial_cost;
    result.trace.push_back(
        {it, 0, before, CostValue{cost, cost + log_det, log_det, 0.0}, true});
    if (dnorm < params.tol) {
      result.state.converged = true;
      break;
    }
  }
  result.state.iteration = static_cast<std::size_t>(std::min(it, params.max_sweeps));
  result.state.w = w;
  result.state.w.rowwise().normalize();
  try {
    refresh_decoupling(result.state);
  } catch (const DegenerateError&) {
    result.state.decoupling.resize(0, 0);
  }
  double log_det = 0.0;
  const double final_cost = infomax_cost(w, z.values, &log_det);
  result.final_cost = {final_cost, final_cost + log_det, log_det, 0.0};
  return result;
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sparse_ebm: return "sparse_ebm";
    case Algorithm::ebm: return "ebm";
    case Algorithm::infomax_ng: return "infomax_ng";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_string(std::string_view s) {
  for (auto a : {Algorithm::sparse_ebm, Algorithm::ebm, Algorithm::infomax_ng}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

EngineResult run_algorithm(Algorithm algorithm, const DataMatrix& z,
                           const SparsityPenalty& penalty, const EngineParams& params) {
  switch (algorithm) {
    case Algorithm::sparse_ebm: return run_sparse_ica_ebm(z, penalty, params);
    case Algorithm::ebm: return run_ica_ebm(z, params);
    case Algorithm::infomax_ng: return run_infomax_ng(z, params);
  }
  throw ParameterError("unknown algorithm");
}

}  // namespace sparseica::ica
