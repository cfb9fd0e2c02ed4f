#include "sparseica/entropy.hpp"

#include "sparseica/csv.hpp"
#include "sparseica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

namespace sparseica::ebm {
namespace {

double g_fourth(double x) { double x2 = x * x; return x2 * x2; }
double gp_fourth(double x) { return 4.0 * x * x * x; }

double g_bounded_even(double x) { double a = std::abs(x); return a / (1.0 + a); }
double gp_bounded_even(double x) {
  if (x == 0.0) return 0.0;
  double a = 1.0 + std::abs(x);
  return (x > 0.0 ? 1.0 : -1.0) / (a * a);
}

double g_bounded_odd(double x) { double a = std::abs(x); return x * a / (1.0 + a); }
double gp_bounded_odd(double x) {
  double a = std::abs(x);
  double den = 1.0 + a;
  return a * (2.0 + a) / (den * den);
}

double g_gauss_odd(double x) { return x * std::exp(-0.5 * x * x); }
double gp_gauss_odd(double x) { return (1.0 - x * x) * std::exp(-0.5 * x * x); }

constexpr std::array<MeasuringFunction, kNumFunctions> kFunctions{{
    {FunctionId::even_fourth, Parity::even, &g_fourth, &gp_fourth},
    {FunctionId::bounded_even, Parity::even, &g_bounded_even, &gp_bounded_even},
    {FunctionId::bounded_odd, Parity::odd, &g_bounded_odd, &gp_bounded_odd},
    {FunctionId::gauss_odd, Parity::odd, &g_gauss_odd, &gp_gauss_odd},
}};

// Theoretical constraint limit on the side away from the Gaussian moment.
// For x^4 the bound only exists below the Gaussian value 3.
struct Limits {
  double lower;
  double upper;
};
Limits constraint_limits(FunctionId id) {
  switch (id) {
    case FunctionId::even_fourth: return {1.0, 3.0};
    case FunctionId::bounded_even: return {0.0, 0.5};
    case FunctionId::bounded_odd: return {-1.0, 1.0};
    case FunctionId::gauss_odd: return {-std::exp(-0.5), std::exp(-0.5)};
  }
  return {0.0, 0.0};
}

// Composite 8-point Gauss-Legendre rule on roughly [-5000, 5000]. Panels are fine near
// the origin (sparse densities put a sharp peak there), uniform through the
// bulk, and widen geometrically through the tails.
struct Rule {
  std::vector<double> x;
  std::vector<double> log_w;
  std::vector<double> w;
};

Rule make_rule() {
  static constexpr double kNodes[4] = {0.1834346424956498, 0.5255324099163290,
                                       0.7966664774136267, 0.9602898564975363};
  static constexpr double kWeights[4] = {0.3626837833783620, 0.3137066458778873,
                                         0.2223810344533745, 0.1012285362903763};
  std::vector<double> breaks{0.0};
  double width = 1e-3;
  while (width < 0.04) {
    breaks.push_back(breaks.back() + width);
    width *= 1.1;
  }
  width = 0.04;
  while (breaks.back() < 12.0) breaks.push_back(breaks.back() + width);
  while (breaks.back() < 5000.0) {
    width *= 1.08;
    breaks.push_back(breaks.back() + width);
  }

  Rule rule;
  auto add_panel = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int k = 3; k >= 0; --k) {
      rule.x.push_back(mid - half * kNodes[k]);
      rule.w.push_back(half * kWeights[k]);
    }
    for (int k = 0; k < 4; ++k) {
      rule.x.push_back(mid + half * kNodes[k]);
      rule.w.push_back(half * kWeights[k]);
    }
  };
  for (std::size_t i = breaks.size() - 1; i > 0; --i) add_panel(-breaks[i], -breaks[i - 1]);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) add_panel(breaks[i], breaks[i + 1]);
  rule.log_w.resize(rule.w.size());
  std::transform(rule.w.begin(), rule.w.end(), rule.log_w.begin(),
                 [](double v) { return std::log(v); });
  return rule;
}

const Rule& rule() {
  static const Rule r = make_rule();
  return r;
}

// G evaluated on the quadrature nodes, one vector per function.
const std::vector<double>& g_on_nodes(FunctionId id) {
  static const auto table = [] {
    std::array<std::vector<double>, kNumFunctions> out;
    const auto& r = rule();
    for (const auto& f : kFunctions) {
      auto& v = out[static_cast<std::size_t>(f.id)];
      v.resize(r.x.size());
      std::transform(r.x.begin(), r.x.end(), v.begin(), f.g);
    }
    return out;
  }();
  return table[static_cast<std::size_t>(id)];
}

struct DualEval {
  bool admissible = false;
  double phi = 0.0;      // log Z - theta . m
  double log_z = 0.0;
  Eigen::Vector3d grad;  // E{T} - m
  Eigen::Matrix3d hess;  // Cov{T}
};

// Dual of the max-entropy problem with sufficient statistics T = (x, x^2, G).
DualEval eval_dual(const MeasuringFunction& f, const Eigen::Vector3d& theta,
                   const Eigen::Vector3d& target, bool with_hessian) {
  DualEval out;
  const double b = theta(0), c = theta(1), d = theta(2);
  if (f.id == FunctionId::even_fourth) {
    if (!(d < 0.0 || (d == 0.0 && c < 0.0))) return out;
  } else if (!(c < 0.0)) {
    return out;
  }
  const auto& r = rule();
  const auto& gv = g_on_nodes(f.id);
  const std::size_t n = r.x.size();

  thread_local std::vector<double> s;
  s.resize(n);
  double smax = -std::numeric_limits<double>::infinity();
  double emax = smax;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = r.x[i];
    const double e = b * x + c * x * x + d * gv[i];
    emax = std::max(emax, e);
    s[i] = e + r.log_w[i];
    smax = std::max(smax, s[i]);
  }
  // Mass must have decayed well before the ends of the rule.
  const double edge = std::max(b * r.x.front() + c * r.x.front() * r.x.front() + d * gv.front(),
                               b * r.x.back() + c * r.x.back() * r.x.back() + d * gv.back());
  if (!std::isfinite(smax) || !(edge - emax < -60.0)) {
    return out;
  }

  double z = 0.0;
  Eigen::Vector3d m1 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d m2 = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::exp(s[i] - smax);
    if (p == 0.0) continue;
    const double x = r.x[i];
    const Eigen::Vector3d t(x, x * x, gv[i]);
    z += p;
    m1 += p * t;
    if (with_hessian) m2.noalias() += p * t * t.transpose();
  }
  m1 /= z;
  out.log_z = smax + std::log(z);
  out.phi = out.log_z - theta.dot(target);
  out.grad = m1 - target;
  if (with_hessian) out.hess = m2 / z - m1 * m1.transpose();
  out.admissible = std::isfinite(out.phi);
  return out;
}

}  // namespace

std::string_view to_string(FunctionId id) {
  switch (id) {
    case FunctionId::even_fourth: return "even_fourth";
    case FunctionId::bounded_even: return "bounded_even";
    case FunctionId::bounded_odd: return "bounded_odd";
    case FunctionId::gauss_odd: return "gauss_odd";
  }
  return "unknown";
}

std::optional<FunctionId> function_from_string(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (to_string(f.id) == name) return f.id;
  }
  return std::nullopt;
}

const MeasuringFunction& measuring_function(FunctionId id) {
  return kFunctions[static_cast<std::size_t>(id)];
}

double gaussian_moment(const MeasuringFunction& f) {
  if (f.parity == Parity::odd) return 0.0;
  if (f.id == FunctionId::even_fourth) return 3.0;
  const auto& r = rule();
  const auto& gv = g_on_nodes(f.id);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    acc += r.w[i] * gv[i] * std::exp(-0.5 * r.x[i] * r.x[i]);
  }
  return acc / std::sqrt(2.0 * M_PI);
}

std::optional<MaxEntSolution> solve_max_entropy(const MeasuringFunction& f, double mu,
                                                const MaxEntSolution& warm_start) {
  const Eigen::Vector3d target(0.0, 1.0, mu);
  Eigen::Vector3d theta(warm_start.b, warm_start.c, warm_start.d);
  DualEval cur = eval_dual(f, theta, target, true);
  if (!cur.admissible) {
    theta = Eigen::Vector3d(0.0, -0.5, 0.0);
    cur = eval_dual(f, theta, target, true);
  }

  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-11;
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    const double res = cur.grad.cwiseAbs().maxCoeff();
    if (res < kTol) break;
    Eigen::LDLT<Eigen::Matrix3d> ldlt(cur.hess);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Eigen::Vector3d step = -ldlt.solve(cur.grad);
    if (!step.allFinite()) return std::nullopt;
    const double slope = cur.grad.dot(step);

    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Eigen::Vector3d trial = theta + t * step;
      DualEval next = eval_dual(f, trial, target, true);
      if (!next.admissible) continue;
      const bool armijo = next.phi <= cur.phi + 1e-4 * t * slope;
      // Near the optimum phi stops resolving progress; fall back on the
      // residual itself.
      const bool flat = next.phi <= cur.phi + 1e-13 * (1.0 + std::abs(cur.phi)) &&
                        next.grad.cwiseAbs().maxCoeff() < res;
      if (armijo || flat) {
        theta = trial;
        cur = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  const double res = cur.grad.cwiseAbs().maxCoeff();
  if (!(res < 1e-9)) return std::nullopt;

  MaxEntSolution sol;
  sol.a = -cur.log_z;
  sol.b = theta(0);
  sol.c = theta(1);
  sol.d = theta(2);
  sol.entropy = cur.phi;
  sol.max_residual = res;
  sol.iterations = iter;
  return sol;
}

EntropyBoundTable::EntropyBoundTable(FunctionId id, std::vector<double> mu_grid,
                                     std::vector<double> h_max, std::vector<double> dh_dmu)
    : id_(id), mu_(std::move(mu_grid)), h_(std::move(h_max)), dh_(std::move(dh_dmu)) {
  const std::size_t n = mu_.size();
  if (n < 2 || h_.size() != n || dh_.size() != n) {
    throw TableError("bound table: grid vectors must share a length >= 2");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(mu_[i] > mu_[i - 1])) throw TableError("bound table: mu grid not strictly increasing");
  }
  // Fritsch-Carlson limiting of the exact node slopes, interval by interval.
  slope_ = dh_;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double secant = (h_[k + 1] - h_[k]) / (mu_[k + 1] - mu_[k]);
    if (secant == 0.0) {
      slope_[k] = slope_[k + 1] = 0.0;
      continue;
    }
    const double alpha = slope_[k] / secant, beta = slope_[k + 1] / secant;
    if (alpha < 0.0) slope_[k] = 0.0;
    if (beta < 0.0) slope_[k + 1] = 0.0;
    const double r2 = alpha * alpha + beta * beta;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      slope_[k] = tau * alpha * secant;
      slope_[k + 1] = tau * beta * secant;
    }
  }
}

BoundValue EntropyBoundTable::evaluate(double mu) const {
  if (!contains(mu)) throw EstimationError("bound table: mu outside feasible range");
  auto it = std::upper_bound(mu_.begin(), mu_.end(), mu);
  std::size_t k = static_cast<std::size_t>(std::distance(mu_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, mu_.size() - 1) - 1;
  const double h = mu_[k + 1] - mu_[k];
  const double t = (mu - mu_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  const double value =
      h00 * h_[k] + h10 * h * slope_[k] + h01 * h_[k + 1] + h11 * h * slope_[k + 1];
  const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  const double deriv =
      (d00 * h_[k] + d01 * h_[k + 1]) / h + d10 * slope_[k] + d11 * slope_[k + 1];
  return {value, deriv};
}

namespace {

// Walks from the Gaussian moment towards `limit` and returns the last
// constraint value the solver handled.
double probe_extent(const MeasuringFunction& f, double start, double limit) {
  constexpr int kSteps = 400;
  const double step = (limit - start) / kSteps;
  MaxEntSolution sol;
  double last = start;
  for (int i = 1; i < kSteps; ++i) {
    const double mu = start + i * step;
    auto s = solve_max_entropy(f, mu, sol);
    if (!s) break;
    sol = *s;
    last = mu;
  }
  return last;
}

struct GridPoint {
  double mu;
  std::optional<MaxEntSolution> sol;
};

// Solves along `mus` (ordered outward from the Gaussian point) with warm
// starts, stopping at the first failure.
std::vector<GridPoint> solve_outward(const MeasuringFunction& f, const std::vector<double>& mus) {
  std::vector<GridPoint> out;
  MaxEntSolution sol;
  for (double mu : mus) {
    auto s = solve_max_entropy(f, mu, sol);
    out.push_back({mu, s});
    if (!s) break;
    sol = *s;
  }
  return out;
}

}  // namespace

EntropyBoundTable build_bound_table(const MeasuringFunction& f, std::size_t grid_size) {
  if (grid_size < 64) throw ParameterError("build_bound_table: grid_size must be >= 64");
  const double mu_g = gaussian_moment(f);
  const Limits lim = constraint_limits(f.id);

  std::vector<double> mus, hs, dhs;
  auto append = [&](const std::vector<GridPoint>& pts) {
    for (const auto& p : pts) {
      if (!p.sol) break;
      mus.push_back(p.mu);
      hs.push_back(p.sol->entropy);
      dhs.push_back(-p.sol->d);
    }
  };

  if (f.parity == Parity::odd) {
    const std::size_t half = grid_size / 2;
    const double hi = probe_extent(f, 0.0, lim.upper);
    std::vector<double> up;
    for (std::size_t j = 0; j <= half; ++j) up.push_back(hi * static_cast<double>(j) / half);
    append(solve_outward(f, up));
    // Mirror: H(-mu) = H(mu), dH/dmu odd.
    const std::size_t n_pos = mus.size();
    std::vector<double> m2, h2, d2;
    for (std::size_t j = n_pos; j-- > 1;) {
      m2.push_back(-mus[j]);
      h2.push_back(hs[j]);
      d2.push_back(-dhs[j]);
    }
    m2.insert(m2.end(), mus.begin(), mus.end());
    h2.insert(h2.end(), hs.begin(), hs.end());
    d2.insert(d2.end(), dhs.begin(), dhs.end());
    mus = std::move(m2);
    hs = std::move(h2);
    dhs = std::move(d2);
  } else {
    const double lo = probe_extent(f, mu_g, lim.lower);
    const double hi = mu_g < lim.upper ? probe_extent(f, mu_g, lim.upper) : mu_g;
    const double span = hi - lo;
    std::size_t n_left = static_cast<std::size_t>(
        std::lround(static_cast<double>(grid_size - 1) * (mu_g - lo) / span));
    n_left = std::min(n_left, grid_size - 1);
    const std::size_t n_right = grid_size - 1 - n_left;

    std::vector<double> down, up;
    for (std::size_t j = 0; j <= n_left; ++j) {
      down.push_back(mu_g - (mu_g - lo) * static_cast<double>(j) / std::max<std::size_t>(n_left, 1));
    }
    for (std::size_t j = 1; j <= n_right; ++j) {
      up.push_back(mu_g + (hi - mu_g) * static_cast<double>(j) / n_right);
    }
    auto left = solve_outward(f, down);
    std::vector<double> lm, lh, ld;
    for (const auto& p : left) {
      if (!p.sol) break;
      lm.push_back(p.mu);
      lh.push_back(p.sol->entropy);
      ld.push_back(-p.sol->d);
    }
    std::reverse(lm.begin(), lm.end());
    std::reverse(lh.begin(), lh.end());
    std::reverse(ld.begin(), ld.end());
    mus = std::move(lm);
    hs = std::move(lh);
    dhs = std::move(ld);
    if (!up.empty()) append(solve_outward(f, up));
  }

  if (mus.size() < 8) {
    throw TableError("build_bound_table: only " + std::to_string(mus.size()) +
                     " feasible points for " + std::string(to_string(f.id)));
  }
  return EntropyBoundTable(f.id, std::move(mus), std::move(hs), std::move(dhs));
}

BoundSet build_bound_set(std::size_t grid_size) {
  BoundSet set;
  for (const auto& f : kFunctions) {
    set[static_cast<std::size_t>(f.id)] = build_bound_table(f, grid_size);
  }
  return set;
}

const BoundSet& default_bounds() {
  static const BoundSet set = build_bound_set(257);
  return set;
}

std::vector<double> standardize(std::span<const double> y) {
  if (y.empty()) throw EstimationError("standardize: empty sample");
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw EstimationError("standardize: zero variance");
  const double inv = 1.0 / std::sqrt(var);
  std::vector<double> out(y.size());
  std::transform(y.begin(), y.end(), out.begin(), [&](double v) { return (v - mean) * inv; });
  return out;
}

namespace {

void check_standardized(std::span<const double> y) {
  if (y.empty()) throw EstimationError("estimate_entropy: empty sample");
  const double n = static_cast<double>(y.size());
  double sum = 0.0, sq = 0.0;
  for (double v : y) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  if (!(std::abs(mean) < 1e-6) || !(std::abs(var - 1.0) < 1e-2)) {
    throw EstimationError("estimate_entropy: sample not standardized (mean " +
                          std::to_string(mean) + ", variance " + std::to_string(var) + ")");
  }
}

double sample_moment(std::span<const double> y, FunctionId id) {
  double acc = 0.0;
  switch (id) {
    case FunctionId::even_fourth:
      for (double v : y) acc += g_fourth(v);
      break;
    case FunctionId::bounded_even:
      for (double v : y) acc += g_bounded_even(v);
      break;
    case FunctionId::bounded_odd:
      for (double v : y) acc += g_bounded_odd(v);
      break;
    case FunctionId::gauss_odd:
      for (double v : y) acc += g_gauss_odd(v);
      break;
  }
  return acc / static_cast<double>(y.size());
}

}  // namespace

EntropyEstimate estimate_entropy(std::span<const double> y, const BoundSet& bounds) {
  check_standardized(y);
  EntropyEstimate est;
  bool any = false;
  for (const auto& table : bounds) {
    const auto id = table.function_id();
    const double mu = sample_moment(y, id);
    if (!table.contains(mu)) continue;
    const BoundValue b = table.evaluate(mu);
    est.bounds[static_cast<std::size_t>(id)] = b.value;
    if (!any || b.value < est.value) {
      est.value = b.value;
      est.selected_function = id;
      est.mu = mu;
      est.dvalue_dmu = b.derivative;
      any = true;
    }
  }
  if (!any) throw EstimationError("estimate_entropy: no measuring function is feasible");
  return est;
}

EntropyEstimate estimate_entropy_with(std::span<const double> y, FunctionId frozen,
                                      const BoundSet& bounds) {
  check_standardized(y);
  const auto& table = bounds[static_cast<std::size_t>(frozen)];
  const double mu = sample_moment(y, frozen);
  if (!table.contains(mu)) {
    throw EstimationError("estimate_entropy_with: " + std::string(to_string(frozen)) +
                          " moment outside its table");
  }
  const BoundValue b = table.evaluate(mu);
  EntropyEstimate est;
  est.value = b.value;
  est.selected_function = frozen;
  est.mu = mu;
  est.dvalue_dmu = b.derivative;
  est.bounds[static_cast<std::size_t>(frozen)] = b.value;
  return est;
}

Vector entropy_gradient(std::span<const double> y, const Matrix& z, const Vector& w,
                        const EntropyEstimate& est) {
  const auto t = static_cast<Eigen::Index>(y.size());
  if (z.cols() != t || z.rows() != w.size()) {
    throw DimensionError("entropy_gradient: dimension mismatch");
  }
  const auto& f = measuring_function(est.selected_function);
  Vector gp(t);
  double gy = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    gp(i) = f.g_prime(yi);
    gy += gp(i) * yi;
  }
  const double inv_t = 1.0 / static_cast<double>(t);
  Vector grad = (z * gp) * inv_t - (gy * inv_t) * w;
  return est.dvalue_dmu * grad;
}

void save_table_cache(const std::filesystem::path& path, const BoundSet& bounds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "function_id,mu,h_max,dh_dmu\n";
  for (const auto& t : bounds) {
    for (std::size_t i = 0; i < t.mu_grid().size(); ++i) {
      out << to_string(t.function_id()) << ',' << csv::format_double(t.mu_grid()[i]) << ','
          << csv::format_double(t.h_max()[i]) << ',' << csv::format_double(t.dh_dmu()[i])
          << '\n';
    }
  }
}

BoundSet load_table_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TableError("cannot open table cache " + path.string());
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "function_id,mu,h_max,dh_dmu") {
    throw TableError(path.string() + ": missing or wrong header");
  }
  std::map<FunctionId, std::array<std::vector<double>, 3>> cols;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw TableError(where + ": expected 4 fields");
    const auto id = function_from_string(fields[0]);
    if (!id) throw TableError(where + ": unknown function '" + fields[0] + "'");
    for (int k = 0; k < 3; ++k) {
      const auto v = csv::parse_double(fields[static_cast<std::size_t>(k) + 1]);
      if (!v || !std::isfinite(*v)) throw TableError(where + ": bad number");
      cols[*id][static_cast<std::size_t>(k)].push_back(*v);
    }
  }
  BoundSet set;
  for (const auto& f : kFunctions) {
    auto it = cols.find(f.id);
    if (it == cols.end()) {
      throw TableError(path.string() + ": no rows for " + std::string(to_string(f.id)));
    }
    auto& [mu, h, dh] = it->second;
    EntropyBoundTable table(f.id, mu, h, dh);
    const double mu_g = gaussian_moment(f);
    if (!table.contains(mu_g) ||
        std::abs(table.evaluate(mu_g).value - kGaussianEntropy) > 1e-4) {
      throw TableError(path.string() + ": " + std::string(to_string(f.id)) +
                       " table fails the Gaussian-point check");
    }
    set[static_cast<std::size_t>(f.id)] = std::move(table);
  }
  return set;
}

}  // namespace sparseica::ebm
