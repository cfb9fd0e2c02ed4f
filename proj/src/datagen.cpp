#include "sparseica/datagen.hpp"

#include "sparseica/errors.hpp"
#include "sparseica/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace sparseica::datagen {

GgdSpec GgdSpec::unit(double beta) {
  GgdSpec s;
  s.beta = beta;
  s.unit_variance = true;
  s.validate();
  // Var = sigma^2 2^(1/beta) Gamma(3/(2 beta)) / Gamma(1/(2 beta)).
  const double log_ratio = std::lgamma(3.0 / (2.0 * beta)) - std::lgamma(1.0 / (2.0 * beta));
  s.sigma = std::exp(-0.5 * (std::log(2.0) / beta + log_ratio));
  return s;
}

void GgdSpec::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("ggd: beta must be > 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("ggd: sigma must be > 0");
}

double GgdSpec::eta() const {
  const double k = 1.0 / (2.0 * beta);
  return beta / (std::pow(2.0, k) * std::tgamma(k) * sigma);
}

double GgdSpec::variance() const { return abs_moment(2.0); }

double GgdSpec::abs_moment(double r) const {
  const double k = 1.0 / (2.0 * beta);
  return std::pow(sigma, r) * std::pow(2.0, r * k) *
         std::exp(std::lgamma((r + 1.0) * k) - std::lgamma(k));
}

double GgdSpec::pdf(double x) const {
  const double u = std::pow(std::abs(x) / sigma, 2.0 * beta);
  return eta() * std::exp(-0.5 * u);
}

std::vector<double> sample_ggd(const GgdSpec& spec, std::size_t t, Rng& rng) {
  spec.validate();
  if (t == 0) throw ParameterError("sample_ggd: need at least one sample");
  const double k = 1.0 / (2.0 * spec.beta);
  std::gamma_distribution<double> gamma(k, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> out(t);
  for (auto& x : out) {
    const double u = gamma(rng);
    const double mag = spec.sigma * std::pow(2.0 * u, k);
    x = coin(rng) ? mag : -mag;
  }
  return out;
}

Matrix sample_ggd_sources(const GgdSpec& spec, Eigen::Index n, Eigen::Index t,
                          std::uint64_t master_seed) {
  Matrix s(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = make_stream(master_seed, static_cast<std::uint64_t>(i));
    const auto row = sample_ggd(spec, static_cast<std::size_t>(t), rng);
    s.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), t);
  }
  return s;
}

std::vector<GiniPoint> average_gini_vs_beta(std::span<const double> beta_grid,
                                            std::size_t n_sources, std::size_t t, Rng& rng) {
  if (beta_grid.empty()) throw ParameterError("average_gini_vs_beta: empty beta grid");
  if (n_sources == 0) throw ParameterError("average_gini_vs_beta: need at least one source");
  std::vector<GiniPoint> out;
  for (double beta : beta_grid) {
    const GgdSpec spec = GgdSpec::unit(beta);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_sources; ++i) {
      acc += metrics::gini_index(sample_ggd(spec, t, rng));
    }
    out.push_back({beta, acc / static_cast<double>(n_sources)});
  }
  return out;
}

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  return smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
}

Matrix random_mixing(Eigen::Index n, Rng& rng, double cond_cap) {
  if (n < 1) throw ParameterError("random_mixing: N must be >= 1");
  if (!(cond_cap >= 1.0)) throw ParameterError("random_mixing: cond_cap must be >= 1");
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) a(i, j) = normal(rng);
    }
    if (condition_number(a) <= cond_cap) return a;
  }
  throw Error("random_mixing: 100 consecutive draws exceeded the condition cap");
}

void SceneSpec::validate() const {
  if (!(cnr > 0.0)) throw ParameterError("fmri scene: cnr must be > 0");
  if (grid < 32) throw ParameterError("fmri scene: grid must be >= 32");
  if (n_components < 1 || n_components > 30) {
    throw ParameterError("fmri scene: component count must lie in [1, 30]");
  }
  if (n_frames < n_components) {
    throw ParameterError("fmri scene: need at least as many frames as components");
  }
  if (!(baseline > 0.0)) throw ParameterError("fmri scene: baseline must be > 0");
  if (blob_width < 0.0 || signal_amplitude < 0.0 || amplitude_jitter < 0.0) {
    throw ParameterError("fmri scene: widths and amplitudes must be nonnegative");
  }
  if (!(max_overlap > 0.0 && max_overlap <= 0.5)) {
    throw ParameterError("fmri scene: max_overlap must lie in (0, 0.5]");
  }
}

double map_overlap(const Vector& a, const Vector& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

namespace {

Vector blob_map(int grid, int row, int col, double width) {
  Vector m(static_cast<Eigen::Index>(grid) * grid);
  const double inv = 1.0 / (2.0 * width * width);
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const double d2 = double(r - row) * (r - row) + double(c - col) * (c - col);
      m(static_cast<Eigen::Index>(r) * grid + c) = std::exp(-d2 * inv);
    }
  }
  return m;
}

// Unit-variance, zero-mean, mutually uncorrelated smoothed noise.
Matrix make_timecourses(int k, int frames, Rng& rng) {
  constexpr int kWindow = 5;
  std::normal_distribution<double> normal;
  Matrix tc(k, frames);
  for (int i = 0; i < k; ++i) {
    std::vector<double> raw(static_cast<std::size_t>(frames + kWindow - 1));
    for (auto& v : raw) v = normal(rng);
    for (int t = 0; t < frames; ++t) {
      double acc = 0.0;
      for (int j = 0; j < kWindow; ++j) acc += raw[static_cast<std::size_t>(t + j)];
      tc(i, t) = acc / kWindow;
    }
  }
  tc = tc.colwise() - tc.rowwise().mean();
  // Symmetric decorrelation: C^{-1/2} tc has identity covariance.
  const Matrix cov = sample_covariance(tc);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Matrix inv_sqrt = eig.eigenvectors() *
                          eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
  return inv_sqrt * tc;
}

// Temporal std of each pixel's noise-free signal; timecourses are white so
// the variance is sum_k (a_k m_k(p))^2.
Vector pixel_signal_std(const FmriScene& s) {
  const Matrix weighted = s.amplitudes.asDiagonal() * s.maps;
  return weighted.colwise().norm().transpose();
}

}  // namespace

Matrix scene_signal(const FmriScene& s) {
  const Matrix weighted = s.amplitudes.asDiagonal() * s.maps;  // K x P
  Matrix signal = weighted.transpose() * s.timecourses;         // P x T
  signal.array() += s.baseline;
  return signal;
}

std::pair<FmriScene, DataMatrix> generate_fmri_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  FmriScene scene;
  scene.grid = spec.grid;
  scene.n_components = spec.n_components;
  scene.baseline = spec.baseline;
  scene.cnr = spec.cnr;
  scene.seed = seed;

  Rng map_rng = make_stream(seed, 0);
  Rng tc_rng = make_stream(seed, 1);
  Rng amp_rng = make_stream(seed, 2);
  Rng noise_rng = make_stream(seed, 3);

  const double width = spec.blob_width > 0.0 ? spec.blob_width : spec.grid / 12.0;
  scene.blob_width = width;
  const int margin = static_cast<int>(std::ceil(width));
  std::uniform_int_distribution<int> pos(margin, spec.grid - 1 - margin);

  const auto pixels = static_cast<Eigen::Index>(spec.grid) * spec.grid;
  scene.maps.resize(spec.n_components, pixels);
  int rejections = 0;
  for (int k = 0; k < spec.n_components;) {
    const int r = pos(map_rng), c = pos(map_rng);
    Vector m = blob_map(spec.grid, r, c, width);
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) {
      ok = map_overlap(m, scene.maps.row(j).transpose()) < spec.max_overlap;
    }
    if (!ok) {
      if (++rejections >= 10000) {
        throw Error("fmri scene: could not place " + std::to_string(spec.n_components) +
                    " maps with overlap < " + std::to_string(spec.max_overlap));
      }
      continue;
    }
    scene.maps.row(k) = m.transpose();
    scene.centers.emplace_back(r, c);
    ++k;
  }

  scene.timecourses = make_timecourses(spec.n_components, spec.n_frames, tc_rng);

  const double amp = spec.signal_amplitude > 0.0 ? spec.signal_amplitude : 0.03 * spec.baseline;
  std::normal_distribution<double> normal;
  scene.amplitudes.resize(spec.n_components);
  for (int k = 0; k < spec.n_components; ++k) {
    scene.amplitudes(k) = amp * std::max(0.1, 1.0 + spec.amplitude_jitter * normal(amp_rng));
  }

  const double peak_std = pixel_signal_std(scene).maxCoeff();
  scene.noise_sigma = std::isinf(spec.cnr) ? 0.0 : peak_std / spec.cnr;

  Matrix observed = scene_signal(scene);
  if (scene.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, scene.noise_sigma);
    for (Eigen::Index t = 0; t < observed.cols(); ++t) {
      for (Eigen::Index p = 0; p < observed.rows(); ++p) {
        const double re = observed(p, t) + noise(noise_rng);
        const double im = noise(noise_rng);
        observed(p, t) = std::sqrt(re * re + im * im);
      }
    }
  } else {
    observed = observed.cwiseAbs();
  }
  return {std::move(scene), DataMatrix(std::move(observed), Role::mixtures)};
}

double measured_cnr(const FmriScene& scene, const DataMatrix& observed) {
  const Matrix signal = scene_signal(scene);
  if (signal.rows() != observed.n_rows() || signal.cols() != observed.n_samples()) {
    throw DimensionError("measured_cnr: observation does not match scene");
  }
  Eigen::Index peak = 0;
  const Matrix centered = signal.colwise() - signal.rowwise().mean();
  centered.rowwise().squaredNorm().maxCoeff(&peak);
  const double peak_std =
      std::sqrt(centered.row(peak).squaredNorm() / static_cast<double>(signal.cols()));
  const Matrix resid = observed.values - signal;
  const double mean = resid.mean();
  const double noise_std =
      std::sqrt((resid.array() - mean).square().sum() / static_cast<double>(resid.size()));
  return noise_std > 0.0 ? peak_std / noise_std : std::numeric_limits<double>::infinity();
}

void export_scene(const std::filesystem::path& dir, const FmriScene& scene,
                  const DataMatrix& observed) {
  std::filesystem::create_directories(dir);
  for (int k = 0; k < scene.n_components; ++k) {
    Matrix img(scene.grid, scene.grid);
    for (int r = 0; r < scene.grid; ++r) {
      img.row(r) = scene.maps.row(k).segment(static_cast<Eigen::Index>(r) * scene.grid, scene.grid);
    }
    write_matrix_csv(dir / ("map_" + std::to_string(k) + ".csv"), img);
  }
  write_matrix_csv(dir / "timecourses.csv", scene.timecourses);
  write_matrix_csv(dir / "mixtures.csv", observed.values);

  nlohmann::ordered_json j;
  j["grid"] = scene.grid;
  j["n_components"] = scene.n_components;
  j["n_frames"] = scene.timecourses.cols();
  j["baseline"] = scene.baseline;
  j["cnr"] = std::isinf(scene.cnr) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(scene.cnr);
  j["noise_sigma"] = scene.noise_sigma;
  j["blob_width"] = scene.blob_width;
  j["seed"] = scene.seed;
  j["amplitudes"] = std::vector<double>(scene.amplitudes.data(),
                                        scene.amplitudes.data() + scene.amplitudes.size());
  nlohmann::ordered_json centers = nlohmann::ordered_json::array();
  for (const auto& [r, c] : scene.centers) centers.push_back({r, c});
  j["centers"] = centers;
  j["amplitude_model"] =
      "per-component amplitude jitter is a modelling guess, not a measured value";
  std::ofstream(dir / "manifest.json") << j.dump(2) << '\n';
}

}  // namespace sparseica::datagen
