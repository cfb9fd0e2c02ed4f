// sparseica: data generation, single runs, sweeps, summaries and plots.

#include "sparseica/bench/config.hpp"
#include "sparseica/bench/plot.hpp"
#include "sparseica/bench/selftest.hpp"
#include "sparseica/bench/summary.hpp"
#include "sparseica/bench/sweep.hpp"
#include "sparseica/csv.hpp"
#include "sparseica/datagen.hpp"
#include "sparseica/errors.hpp"
#include "sparseica/seeding.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace sparseica;
using namespace sparseica::bench;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Overrides {
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
};

SweepConfig load_with(const std::string& path, const Overrides& o) {
  SweepConfig cfg = load_config(path);
  if (o.runs) cfg.runs = *o.runs;
  if (o.seed) cfg.master_seed = *o.seed;
  if (auto problems = validate(cfg); !problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

double pick_value(const SweepConfig& cfg, std::optional<double> value) {
  if (!value) return cfg.sweep_values.front();
  return *value;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int cmd_gen(const std::string& config, const Overrides& o, const std::string& out,
            std::optional<double> value, int run) {
  const SweepConfig cfg = load_with(config, o);
  const double v = pick_value(cfg, value);
  fs::create_directories(out);
  if (cfg.experiment == Experiment::fmri_cnr) {
    datagen::SceneSpec spec;
    spec.grid = cfg.grid;
    spec.n_components = cfg.components;
    spec.n_frames = cfg.frames;
    spec.baseline = cfg.baseline;
    spec.cnr = v;
    auto [scene, observed] = datagen::generate_fmri_scene(spec, data_seed(cfg, v, run));
    datagen::export_scene(out, scene, observed);
  } else if (cfg.experiment == Experiment::gini_vs_beta) {
    Matrix s = datagen::sample_ggd_sources(datagen::GgdSpec::unit(v), cfg.n_sources, cfg.samples,
                                           data_seed(cfg, v, run));
    write_matrix_csv(fs::path(out) / "sources.csv", s);
  } else {
    const auto p = make_synthetic_problem(cfg, v, run);
    write_matrix_csv(fs::path(out) / "sources.csv", p.sources);
    write_matrix_csv(fs::path(out) / "mixing.csv", p.mixing);
    write_matrix_csv(fs::path(out) / "mixtures.csv", p.mixtures);
  }
  write_text(fs::path(out) / "config.txt", save_config(cfg));
  std::cout << "wrote " << to_string(cfg.experiment) << " data for value "
            << csv::format_double(v) << ", run " << run << " to " << out << "\n";
  return kOk;
}

int cmd_run(const std::string& config, const Overrides& o, std::optional<std::string> algorithm,
            std::optional<double> value, int run) {
  const SweepConfig cfg = load_with(config, o);
  RunTask task;
  task.sweep_value = pick_value(cfg, value);
  task.run_index = run;
  if (cfg.experiment == Experiment::gini_vs_beta) {
    task.algorithm = "none";
  } else if (algorithm) {
    if (!ica::algorithm_from_string(*algorithm)) {
      throw ParameterError("unknown algorithm '" + *algorithm + "'");
    }
    task.algorithm = *algorithm;
  } else {
    task.algorithm = std::string(ica::to_string(cfg.algorithms.front()));
  }
  const RunRecord rec = execute_task(cfg, task);
  write_runs_csv(std::cout, {rec}, true);
  if (!rec.error.empty()) {
    std::cerr << "run failed: " << rec.error << "\n";
    return kRuntime;
  }
  return kOk;
}

PlotResult plot_to(const std::vector<SummaryRow>& rows, const fs::path& path,
                   const std::optional<PlotSpec>& spec_override) {
  const PlotSpec spec = spec_override ? *spec_override : default_plot_spec(rows.front().experiment);
  PlotResult plot = render_plot(rows, spec);
  write_text(path, plot.svg);
  if (plot.dropped_points > 0) {
    std::cerr << "warning: " << plot.dropped_points << " point(s) not drawable and dropped\n";
  }
  return plot;
}

int cmd_sweep(const std::string& config, const Overrides& o, const std::string& out_opt,
              std::optional<int> workers) {
  const SweepConfig cfg = load_with(config, o);
  const fs::path out = out_opt.empty() ? fs::path(cfg.output_dir) : fs::path(out_opt);
  fs::create_directories(out);
  const int n = workers.value_or(default_workers());
  const auto records = run_sweep(cfg, n);
  write_runs_csv(out / "runs.csv", records, cfg.timing);
  const auto summary = summarize(records);
  write_summary_csv(out / "summary.csv", summary);
  write_text(out / "config.txt", save_config(cfg));
  plot_to(summary, out / "plot.svg", std::nullopt);

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.error.empty() ? 0 : 1;
  for (const auto& row : summary) {
    if (row.all_failed()) {
      std::cerr << "warning: every run failed for " << row.algorithm << " at "
                << csv::format_double(row.sweep_value) << "\n";
    }
  }
  std::cout << records.size() << " runs (" << failed << " failed) written to " << out.string()
            << "\n";
  return kOk;
}

int cmd_summarize(const std::string& in, const std::string& out) {
  const auto summary = summarize(read_runs_csv(in));
  const fs::path path = out.empty() ? fs::path(in).parent_path() / "summary.csv" : fs::path(out);
  write_summary_csv(path, summary);
  write_summary_csv(std::cout, summary);
  return kOk;
}

int cmd_plot(const std::string& in, const std::string& out, std::optional<std::string> title,
             bool log_x, bool log_y, const std::string& statistic) {
  const auto rows = read_summary_csv(in);
  if (rows.empty()) throw Error(in + ": empty summary");
  PlotSpec spec = default_plot_spec(rows.front().experiment);
  if (title) spec.title = *title;
  spec.log_x = spec.log_x || log_x;
  spec.log_y = spec.log_y || log_y;
  if (statistic == "mean") spec.statistic = Statistic::mean;
  if (statistic == "median") spec.statistic = Statistic::median;
  const fs::path path = out.empty() ? fs::path(in).parent_path() / "plot.svg" : fs::path(out);
  const auto plot = plot_to(rows, path, spec);
  std::cout << "plotted " << plot.series << " series to " << path.string() << "\n";
  return kOk;
}

int cmd_replay(const std::string& config, const Overrides& o, const std::string& runs_file,
               std::size_t record) {
  const SweepConfig cfg = load_with(config, o);
  const auto records = read_runs_csv(runs_file);
  if (record >= records.size()) {
    throw ParameterError("record " + std::to_string(record) + " out of range (file has " +
                         std::to_string(records.size()) + ")");
  }
  const RunRecord& want = records[record];
  if (want.experiment != to_string(cfg.experiment)) {
    throw ParameterError("record belongs to experiment '" + want.experiment + "'");
  }
  const RunTask task{want.algorithm, want.sweep_value, want.run_index};
  if (child_seed(cfg, task) != want.seed) {
    throw ParameterError("seed mismatch: the record was not produced by this configuration");
  }
  const RunRecord got = execute_task(cfg, task);
  write_runs_csv(std::cout, {want, got}, false);
  const bool same = csv::format_double(got.metric_value) == csv::format_double(want.metric_value) &&
                    got.converged == want.converged;
  std::cout << (same ? "replay matches\n" : "replay DIFFERS\n");
  return same ? kOk : kRuntime;
}

int cmd_selftest() {
  int failed = 0;
  for (const auto& c : run_selftest()) {
    std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name;
    if (!c.passed) std::cout << ": " << c.detail;
    std::cout << "\n";
    failed += c.passed ? 0 : 1;
  }
  return failed == 0 ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SparseICA-EBM experiments"};
  app.require_subcommand(1);

  std::string config, out, in, runs_file, statistic = "median";
  Overrides over;
  std::optional<int> workers;
  std::optional<double> value;
  std::optional<std::string> algorithm, title;
  int run = 0;
  std::size_t record = 0;
  bool log_x = false, log_y = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config, "experiment config file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--runs", over.runs, "override runs per point")->check(CLI::PositiveNumber);
    sub->add_option("--seed", over.seed, "override master seed");
  };

  auto* gen = app.add_subcommand("gen", "write one generated dataset");
  add_common(gen, true);
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--value", value, "sweep value (default: first)");
  gen->add_option("--run", run, "run index")->check(CLI::NonNegativeNumber);

  auto* single = app.add_subcommand("run", "execute one run and print its record");
  add_common(single, true);
  single->add_option("--algorithm", algorithm, "sparse_ebm, ebm or infomax_ng");
  single->add_option("--value", value, "sweep value (default: first)");
  single->add_option("--run", run, "run index")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "run a full experiment");
  add_common(sweep, true);
  sweep->add_option("--out", out, "output directory (default: output_dir from config)");
  sweep->add_option("--workers", workers, "worker threads (default: SPARSEICA_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  auto* summ = app.add_subcommand("summarize", "summary statistics of a runs file");
  summ->add_option("--in", in, "runs.csv")->required()->check(CLI::ExistingFile);
  summ->add_option("--out", out, "summary file (default: next to the input)");

  auto* plot = app.add_subcommand("plot", "SVG plot of a summary file");
  plot->add_option("--in", in, "summary.csv")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out, "SVG file (default: next to the input)");
  plot->add_option("--title", title, "plot title");
  plot->add_option("--statistic", statistic, "mean or median")
      ->check(CLI::IsMember({"mean", "median"}));
  plot->add_flag("--log-x", log_x, "logarithmic x axis");
  plot->add_flag("--log-y", log_y, "logarithmic y axis");

  auto* replay = app.add_subcommand("replay", "re-execute one record of a runs file");
  add_common(replay, true);
  replay->add_option("--runs-file", runs_file, "runs.csv")->required()->check(CLI::ExistingFile);
  replay->add_option("--record", record, "0-based record index")->required();

  auto* self = app.add_subcommand("selftest", "run the invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*gen) return cmd_gen(config, over, out, value, run);
    if (*single) return cmd_run(config, over, algorithm, value, run);
    if (*sweep) return cmd_sweep(config, over, out, workers);
    if (*summ) return cmd_summarize(in, out);
    if (*plot) return cmd_plot(in, out, title, log_x, log_y, statistic);
    if (*replay) return cmd_replay(config, over, runs_file, record);
    if (*self) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& p : e.problems()) {
      std::cerr << "  ";
      if (p.line > 0) std::cerr << "line " << p.line << ": ";
      if (!p.key.empty()) std::cerr << p.key << ": ";
      std::cerr << p.message << "\n";
    }
    return kValidation;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
