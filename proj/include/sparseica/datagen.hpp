#pragma once

// Ground-truth generators: generalized Gaussian sources, random mixing
// matrices and fMRI-like spatiotemporal scenes.

#include "sparseica/model.hpp"
#include "sparseica/seeding.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace sparseica::datagen {

/// p(x) = eta * exp(-|x|^(2 beta) / (2 sigma^(2 beta))). beta = 1 is the
/// Gaussian with standard deviation sigma; beta < 1 is peakier with heavier
/// tails.
struct GgdSpec {
  double beta = 1.0;
  double sigma = 1.0;
  bool unit_variance = false;

  /// Parameters with sigma chosen for unit variance.
  static GgdSpec unit(double beta);

  double eta() const;
  double variance() const;
  double pdf(double x) const;
  /// E|x|^r.
  double abs_moment(double r) const;
  void validate() const;
};

/// x = s * sigma * (2U)^(1/(2 beta)), U ~ Gamma(1/(2 beta), 1), s = +-1.
std::vector<double> sample_ggd(const GgdSpec& spec, std::size_t t, Rng& rng);

/// N independent rows, each drawn from its own stream of `master_seed`.
Matrix sample_ggd_sources(const GgdSpec& spec, Eigen::Index n, Eigen::Index t,
                          std::uint64_t master_seed);

struct GiniPoint {
  double beta;
  double mean_gini;
};

/// Mean Gini index of `n_sources` unit-variance GGD draws per beta.
std::vector<GiniPoint> average_gini_vs_beta(std::span<const double> beta_grid,
                                            std::size_t n_sources, std::size_t t, Rng& rng);

/// Standard-normal N x N matrix, redrawn until cond(A) <= cond_cap.
Matrix random_mixing(Eigen::Index n, Rng& rng, double cond_cap = 100.0);

/// 2-norm condition number from the singular values.
double condition_number(const Matrix& a);

struct SceneSpec {
  int grid = 100;
  int n_components = 20;
  int n_frames = 260;
  double baseline = 800.0;
  double cnr = 1.0;               // +inf disables noise
  double blob_width = 0.0;        // Gaussian sigma in pixels; 0 -> grid / 12
  double signal_amplitude = 0.0;  // 0 -> 3% of baseline
  double amplitude_jitter = 0.05; // relative, per component
  double max_overlap = 0.5;       // pairwise normalized inner product bound, in (0, 0.5]

  void validate() const;
};

struct FmriScene {
  int grid = 0;
  int n_components = 0;
  Matrix maps;         // K x grid^2, row-major images, peak 1
  Matrix timecourses;  // K x T_f, zero mean, unit variance, uncorrelated
  Vector amplitudes;   // per-component signal amplitude
  double baseline = 0.0;
  double cnr = 0.0;
  double noise_sigma = 0.0;
  double blob_width = 0.0;  // Gaussian sigma actually used, pixels
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> centers;  // (row, col) of each blob
};

/// Noise-free pixel intensities, grid^2 x T_f.
Matrix scene_signal(const FmriScene& scene);

/// Builds a scene and its Rician-corrupted observation (grid^2 x T_f, pixels
/// as rows).
///
/// Throws ParameterError for cnr <= 0 or out-of-range sizes, and Error when
/// the map overlap limit cannot be met within 1e4 draws.
std::pair<FmriScene, DataMatrix> generate_fmri_scene(const SceneSpec& spec, std::uint64_t seed);

/// Temporal std of the peak pixel's noise-free fluctuation divided by the
/// std of (observed - signal).
double measured_cnr(const FmriScene& scene, const DataMatrix& observed);

/// Normalized inner product <a,b> / (|a||b|) between two maps.
double map_overlap(const Vector& a, const Vector& b);

/// Writes map_<k>.csv (grid x grid), timecourses.csv, mixtures.csv and
/// manifest.json into `dir`.
void export_scene(const std::filesystem::path& dir, const FmriScene& scene,
                  const DataMatrix& observed);

}  // namespace sparseica::datagen
