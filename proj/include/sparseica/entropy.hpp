#pragma once

// Differential-entropy estimation by entropy bound minimization.
//
// Each measuring function G constrains a maximum-entropy density
//   p*(x) = exp(a + b x + c x^2 + d G(x))
// to zero mean, unit variance and E{G} = mu. Its entropy H_max(mu) is an upper
// bound on the entropy of any unit-variance density with the same G-moment;
// the estimate of H(y) is the tightest of the bounds over all functions.

#include "sparseica/model.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace sparseica::ebm {

enum class FunctionId { even_fourth = 0, bounded_even = 1, bounded_odd = 2, gauss_odd = 3 };
enum class Parity { even, odd };

inline constexpr std::size_t kNumFunctions = 4;

std::string_view to_string(FunctionId id);
std::optional<FunctionId> function_from_string(std::string_view name);

struct MeasuringFunction {
  FunctionId id;
  Parity parity;
  double (*g)(double);
  double (*g_prime)(double);
};

/// G1 = x^4, G2 = |x|/(1+|x|), G3 = x|x|/(1+|x|), G4 = x exp(-x^2/2).
const MeasuringFunction& measuring_function(FunctionId id);

/// E{G(x)} for x ~ N(0,1), by quadrature.
double gaussian_moment(const MeasuringFunction& f);

/// 0.5 * ln(2 pi e), entropy of the unit-variance Gaussian in nats.
inline constexpr double kGaussianEntropy = 1.4189385332046727;

struct MaxEntSolution {
  double a = 0.0, b = 0.0, c = -0.5, d = 0.0;
  double entropy = kGaussianEntropy;
  double max_residual = 0.0;  // largest of the four moment residuals
  int iterations = 0;
};

/// Solves the four-moment maximum-entropy problem at constraint value `mu`
/// by damped Newton on the convex dual. Returns nullopt when the iteration
/// does not converge or leaves the integrable parameter region.
std::optional<MaxEntSolution> solve_max_entropy(const MeasuringFunction& f, double mu,
                                                const MaxEntSolution& warm_start = {});

/// Value and slope of a bound at one constraint value.
struct BoundValue {
  double value;
  double derivative;
};

class EntropyBoundTable {
 public:
  EntropyBoundTable() = default;
  EntropyBoundTable(FunctionId id, std::vector<double> mu_grid, std::vector<double> h_max,
                    std::vector<double> dh_dmu);

  FunctionId function_id() const { return id_; }
  const std::vector<double>& mu_grid() const { return mu_; }
  const std::vector<double>& h_max() const { return h_; }
  const std::vector<double>& dh_dmu() const { return dh_; }
  std::pair<double, double> feasible_range() const { return {mu_.front(), mu_.back()}; }
  bool contains(double mu) const { return mu >= mu_.front() && mu <= mu_.back(); }

  /// Piecewise cubic Hermite interpolation; the returned derivative is the
  /// exact derivative of the interpolant. Requires contains(mu).
  BoundValue evaluate(double mu) const;

 private:
  FunctionId id_ = FunctionId::even_fourth;
  std::vector<double> mu_, h_, dh_;
  std::vector<double> slope_;  // limited Hermite node slopes
};

/// Tabulates H_max over the feasible constraint range of `f`.
///
/// The Gaussian moment is always a grid node. Odd functions are tabulated on a
/// symmetric grid (grid_size rounded up to odd) and mirrored. Throws
/// ParameterError for grid_size < 64 and TableError when fewer than 8 points
/// are feasible.
EntropyBoundTable build_bound_table(const MeasuringFunction& f, std::size_t grid_size = 257);

/// One table per measuring function, indexed by FunctionId.
using BoundSet = std::array<EntropyBoundTable, kNumFunctions>;

/// Default tables, built once on first use and shared read-only afterwards.
const BoundSet& default_bounds();

BoundSet build_bound_set(std::size_t grid_size = 257);

struct EntropyEstimate {
  double value = kGaussianEntropy;
  FunctionId selected_function = FunctionId::even_fourth;
  double mu = 0.0;
  double dvalue_dmu = 0.0;
  std::array<std::optional<double>, kNumFunctions> bounds{};  // per function, if feasible
};

/// Returns (y - mean) / std with 1/T variance. Throws EstimationError on zero
/// variance.
std::vector<double> standardize(std::span<const double> y);

/// Minimum over the feasible bounds. `y` must already be standardized.
EntropyEstimate estimate_entropy(std::span<const double> y,
                                 const BoundSet& bounds = default_bounds());

/// Bound from a single fixed function; used when the selection is frozen
/// during a line search. Throws EstimationError when mu leaves the table.
EntropyEstimate estimate_entropy_with(std::span<const double> y, FunctionId frozen,
                                      const BoundSet& bounds = default_bounds());

/// Gradient of the estimate with respect to a unit demixing vector `w`, where
/// y = w^T Z. The radial component is projected out, so the result is tangent
/// to the unit sphere at `w`.
Vector entropy_gradient(std::span<const double> y, const Matrix& z, const Vector& w,
                        const EntropyEstimate& est);

// Table cache: CSV "function_id,mu,h_max,dh_dmu" with one header line.
void save_table_cache(const std::filesystem::path& path, const BoundSet& bounds);

/// Loads and validates a cache; every table must reproduce the Gaussian
/// entropy at the Gaussian moment within 1e-4. Throws TableError otherwise.
BoundSet load_table_cache(const std::filesystem::path& path);

}  // namespace sparseica::ebm
