#include "sparseica/bench/sweep.hpp"

#include "sparseica/csv.hpp"
#include "sparseica/datagen.hpp"
#include "sparseica/metrics.hpp"
#include "sparseica/seeding.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

namespace sparseica::bench {

namespace {
constexpr const char* kNoAlgorithm = "none";
}

std::vector<RunTask> enumerate_tasks(const SweepConfig& cfg) {
  std::vector<RunTask> tasks;
  std::vector<std::string> algos;
  if (cfg.experiment == Experiment::gini_vs_beta) {
    algos.emplace_back(kNoAlgorithm);
  } else {
    for (auto a : cfg.algorithms) algos.emplace_back(ica::to_string(a));
  }
  for (const auto& a : algos) {
    for (double v : cfg.sweep_values) {
      for (int r = 0; r < cfg.runs; ++r) tasks.push_back({a, v, r});
    }
  }
  return tasks;
}

std::uint64_t child_seed(const SweepConfig& cfg, const RunTask& task) {
  std::uint64_t h = mix64(cfg.master_seed);
  h = hash_combine(h, to_string(cfg.experiment));
  h = hash_combine(h, std::string_view(task.algorithm));
  h = hash_combine(h, task.sweep_value);
  h = hash_combine(h, static_cast<std::uint64_t>(task.run_index));
  return h;
}

std::uint64_t data_seed(const SweepConfig& cfg, double sweep_value, int run_index) {
  std::uint64_t h = mix64(cfg.master_seed);
  h = hash_combine(h, to_string(cfg.experiment));
  h = hash_combine(h, std::string_view("data"));
  h = hash_combine(h, sweep_value);
  h = hash_combine(h, static_cast<std::uint64_t>(run_index));
  return h;
}

SyntheticProblem make_synthetic_problem(const SweepConfig& cfg, double sweep_value,
                                        int run_index) {
  int n = cfg.n_sources, t = cfg.samples;
  double beta = cfg.beta;
  switch (cfg.experiment) {
    case Experiment::isr_vs_beta: beta = sweep_value; break;
    case Experiment::isr_vs_T: t = static_cast<int>(sweep_value); break;
    case Experiment::isr_vs_N: n = static_cast<int>(sweep_value); break;
    default: break;
  }
  const std::uint64_t seed = data_seed(cfg, sweep_value, run_index);
  SyntheticProblem p;
  p.sources = datagen::sample_ggd_sources(datagen::GgdSpec::unit(beta), n, t, hash_combine(seed, std::uint64_t{0}));
  Rng mix_rng = make_stream(seed, 1);
  p.mixing = datagen::random_mixing(n, mix_rng, cfg.cond_cap);
  p.mixtures = p.mixing * p.sources;
  return p;
}

namespace {

struct Outcome {
  double metric;
  bool converged;
};

Outcome run_isr(const SweepConfig& cfg, ica::Algorithm algo, const RunTask& task,
                std::uint64_t seed) {
  const SyntheticProblem p = make_synthetic_problem(cfg, task.sweep_value, task.run_index);
  auto [z, transform] = whiten(DataMatrix(p.mixtures, Role::mixtures), p.mixtures.rows());
  const auto result = ica::run_algorithm(algo, z, cfg.penalty(), cfg.engine_params(seed));
  const Matrix w_full = result.state.w * transform.projection;
  const auto isr = metrics::normalized_isr(global_matrix(w_full, p.mixing));
  return {isr.normalized_isr, result.state.converged && !result.diverged};
}

Outcome run_fmri(const SweepConfig& cfg, ica::Algorithm algo, const RunTask& task,
                 std::uint64_t seed) {
  datagen::SceneSpec spec;
  spec.grid = cfg.grid;
  spec.n_components = cfg.components;
  spec.n_frames = cfg.frames;
  spec.baseline = cfg.baseline;
  spec.cnr = task.sweep_value;
  auto [scene, observed] =
      datagen::generate_fmri_scene(spec, data_seed(cfg, task.sweep_value, task.run_index));
  // Spatial ICA: frames are channels and pixels are samples.
  const DataMatrix frames(observed.values.transpose(), Role::mixtures);
  auto [z, transform] = whiten(frames, cfg.components);
  const auto result = ica::run_algorithm(algo, z, cfg.penalty(), cfg.engine_params(seed));
  const Matrix estimates = result.state.w * z.values;
  const auto pairing = metrics::pair_components(scene.maps, estimates);
  return {pairing.mean_abs_corr, result.state.converged && !result.diverged};
}

Outcome run_gini(const SweepConfig& cfg, const RunTask& task) {
  Rng rng = make_stream(data_seed(cfg, task.sweep_value, task.run_index), 0);
  const double beta[] = {task.sweep_value};
  const auto pts = datagen::average_gini_vs_beta(beta, static_cast<std::size_t>(cfg.n_sources),
                                                 static_cast<std::size_t>(cfg.samples), rng);
  return {pts.front().mean_gini, true};
}

}  // namespace

RunRecord execute_task(const SweepConfig& cfg, const RunTask& task) {
  RunRecord rec;
  rec.experiment = std::string(to_string(cfg.experiment));
  rec.algorithm = task.algorithm;
  rec.sweep_value = task.sweep_value;
  rec.run_index = task.run_index;
  rec.seed = child_seed(cfg, task);
  rec.metric_name = std::string(metric_name(cfg.experiment));

  const auto start = std::chrono::steady_clock::now();
  try {
    Outcome o{};
    if (cfg.experiment == Experiment::gini_vs_beta) {
      o = run_gini(cfg, task);
    } else {
      const auto algo = ica::algorithm_from_string(task.algorithm);
      if (!algo) throw ParameterError("unknown algorithm '" + task.algorithm + "'");
      o = cfg.experiment == Experiment::fmri_cnr ? run_fmri(cfg, *algo, task, rec.seed)
                                                 : run_isr(cfg, *algo, task, rec.seed);
    }
    rec.metric_value = o.metric;
    rec.converged = o.converged;
  } catch (const std::exception& e) {
    rec.metric_value = std::numeric_limits<double>::quiet_NaN();
    rec.converged = false;
    rec.error = e.what();
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<RunRecord> run_sweep(const SweepConfig& cfg, int workers) {
  if (auto problems = validate(cfg); !problems.empty()) throw ConfigError(std::move(problems));
  const auto tasks = enumerate_tasks(cfg);
  std::vector<RunRecord> records(tasks.size());
  // Tables are built lazily; build them before threads race for them.
  (void)ebm::default_bounds();

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      records[i] = execute_task(cfg, tasks[i]);
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return records;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records, bool with_timing) {
  out << kRunsHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.algorithm << ',' << csv::format_double(r.sweep_value) << ','
        << r.run_index << ',' << r.seed << ',' << r.metric_name << ','
        << csv::format_double(r.metric_value) << ','
        << (with_timing ? csv::format_double(r.wall_time_s) : std::string("0")) << ','
        << (r.converged ? "true" : "false") << '\n';
  }
}

void write_runs_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                    bool with_timing) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_runs_csv(out, records, with_timing);
}

std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kRunsHeader) {
    throw Error(path.string() + ": not a runs file (header mismatch)");
  }
  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 9) throw DimensionError(where + ": expected 9 fields");
    RunRecord r;
    r.experiment = f[0];
    r.algorithm = f[1];
    const auto sv = csv::parse_double(f[2]);
    const auto mv = csv::parse_double(f[6]);
    const auto wt = csv::parse_double(f[7]);
    if (!sv || !mv || !wt) throw Error(where + ": malformed number");
    r.sweep_value = *sv;
    r.metric_value = *mv;
    r.wall_time_s = *wt;
    try {
      r.run_index = std::stoi(f[3]);
      r.seed = std::stoull(f[4]);
    } catch (const std::exception&) {
      throw Error(where + ": malformed integer");
    }
    r.metric_name = f[5];
    if (f[8] != "true" && f[8] != "false") throw Error(where + ": converged must be true/false");
    r.converged = f[8] == "true";
    out.push_back(std::move(r));
  }
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("SPARSEICA_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace sparseica::bench
