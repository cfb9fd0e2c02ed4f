#include <doctest.h>

#include "sparseica/bench/config.hpp"
#include "sparseica/bench/plot.hpp"
#include "sparseica/bench/selftest.hpp"
#include "sparseica/bench/summary.hpp"
#include "sparseica/bench/sweep.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

using namespace sparseica;
using namespace sparseica::bench;
namespace fs = std::filesystem;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

RunRecord rec(const std::string& algo, double x, int run, double v) {
  RunRecord r;
  r.experiment = "isr_vs_beta";
  r.algorithm = algo;
  r.sweep_value = x;
  r.run_index = run;
  r.metric_name = "normalized_isr";
  r.metric_value = v;
  r.converged = !std::isnan(v);
  return r;
}

SweepConfig small_isr() {
  return parse_config(
      "experiment = isr_vs_beta\n"
      "algorithms = sparse_ebm, ebm, infomax_ng\n"
      "sweep_values = 0.2, 0.5\n"
      "N = 3\nT = 300\nlambda = 1\nruns = 3\nmaster_seed = 99\n");
}

std::string runs_text(const std::vector<RunRecord>& r) {
  std::ostringstream os;
  write_runs_csv(os, r, false);
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("sparseica_bench_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPARSEICA_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal config fills defaults and round-trips") {
  const auto cfg = parse_config("experiment = isr_vs_beta\nsweep_values = 0.1, 0.2\n");
  CHECK(cfg.runs == 300);
  CHECK(cfg.tol == 1e-6);
  CHECK(cfg.n_sources == 10);
  CHECK(cfg.samples == 1000);
  CHECK(cfg.lambda == 1e4);
  CHECK(cfg.epsilon == 1e-2);
  CHECK(cfg.algorithms.size() == 2);
  CHECK(parse_config(save_config(cfg)) == cfg);

  auto full = small_isr();
  full.infomax_eta0 = 0.02;
  full.master_seed = 18446744073709551615ULL;
  full.timing = true;
  full.sweep_values = {0.1, 0.15000000000000002, 1.0 / 3.0};
  CHECK(parse_config(save_config(full)) == full);

  const auto path = fs::temp_directory_path() / "sparseica_cfg.txt";
  {
    std::ofstream out(path);
    out << "# comment\nexperiment = fmri_cnr  # trailing\ncnr = 0.5, 1\nK = 4\ngrid = 32\n";
  }
  const auto f = load_config(path);
  CHECK(f.experiment == Experiment::fmri_cnr);
  CHECK(f.sweep_values == std::vector<double>{0.5, 1.0});
  CHECK(f.components == 4);
  fs::remove(path);
}

TEST_CASE("config errors are all reported with key and line") {
  try {
    (void)parse_config("experiment = isr_vs_beta\nsweep_values = 0.1\nruns = 0\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.problems().size() == 1);
    CHECK(e.problems()[0].key == "runs");
    CHECK(e.problems()[0].line == 3);
    CHECK(std::string(e.what()).find("runs") != std::string::npos);
  }
  try {
    (void)parse_config("experiment = nope\nbogus = 1\nT = abc\nsweep_values = 0.1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::set<std::string> keys;
    for (const auto& p : e.problems()) keys.insert(p.key);
    CHECK(keys.count("experiment"));
    CHECK(keys.count("bogus"));
    CHECK(keys.count("T"));
  }
  CHECK_THROWS_AS(parse_config("experiment = isr_vs_beta\nsweep_values = 0.3, 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = isr_vs_beta\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = isr_vs_beta\nsweep_values = 0.1\nsweep_values = 0.2\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = isr_vs_N\nsweep_values = 5, 2000\nT = 1000\n"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/sparseica.cfg"), ConfigError);
}

TEST_CASE("task enumeration and seeds") {
  auto cfg = parse_config(
      "experiment = isr_vs_beta\nalgorithms = sparse_ebm, ebm\n"
      "sweep_values = 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5\nruns = 20\n");
  const auto tasks = enumerate_tasks(cfg);
  CHECK(tasks.size() == 2 * 9 * 20);
  std::set<std::uint64_t> seeds;
  std::set<std::tuple<std::string, double, int>> keys;
  for (const auto& t : tasks) {
    seeds.insert(child_seed(cfg, t));
    keys.insert({t.algorithm, t.sweep_value, t.run_index});
  }
  CHECK(seeds.size() == tasks.size());
  CHECK(keys.size() == tasks.size());
  CHECK(tasks.front().algorithm == "sparse_ebm");
  CHECK(tasks.back().algorithm == "ebm");

  // The data seed ignores the algorithm; the engine seed does not.
  const RunTask a{"sparse_ebm", 0.2, 3}, b{"ebm", 0.2, 3};
  CHECK(child_seed(cfg, a) != child_seed(cfg, b));
  const auto pa = make_synthetic_problem(cfg, 0.2, 3);
  const auto pb = make_synthetic_problem(cfg, 0.2, 3);
  CHECK(pa.mixtures == pb.mixtures);
  CHECK(pa.sources.rows() == 10);
  CHECK(make_synthetic_problem(cfg, 0.2, 4).mixtures != pa.mixtures);

  auto other = cfg;
  other.master_seed = 1;
  CHECK(child_seed(other, a) != child_seed(cfg, a));

  cfg.experiment = Experiment::gini_vs_beta;
  CHECK(enumerate_tasks(cfg).size() == 9 * 20);
}

TEST_CASE("sweeps are deterministic across worker counts") {
  const auto cfg = small_isr();
  const auto one = run_sweep(cfg, 1);
  const auto again = run_sweep(cfg, 1);
  const auto many = run_sweep(cfg, 4);
  CHECK(one.size() == 3 * 2 * 3);
  CHECK(runs_text(one) == runs_text(again));
  CHECK(runs_text(one) == runs_text(many));
  for (const auto& r : one) {
    CHECK(std::isfinite(r.metric_value));
    CHECK(r.metric_value >= 0.0);
  }
}

TEST_CASE("runs file round trip") {
  const auto dir = scratch("runs");
  const auto records = run_sweep(small_isr(), 2);
  write_runs_csv(dir / "runs.csv", records, false);
  const auto text = slurp(dir / "runs.csv");
  CHECK(text.rfind(std::string(kRunsHeader) + "\n", 0) == 0);
  const auto back = read_runs_csv(dir / "runs.csv");
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].seed == records[i].seed);
    CHECK(back[i].metric_value == records[i].metric_value);
    CHECK(back[i].wall_time_s == 0.0);
  }
  {
    std::ofstream out(dir / "bad.csv");
    out << kRunsHeader << "\nisr_vs_beta,ebm,0.1,0\n";
  }
  CHECK_THROWS(read_runs_csv(dir / "bad.csv"));
  fs::remove_all(dir);
}

TEST_CASE("failed runs are isolated") {
  auto cfg = small_isr();
  const auto r = execute_task(cfg, {"not_an_algorithm", 0.2, 0});
  CHECK(std::isnan(r.metric_value));
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.error.empty());
  const auto ok = execute_task(cfg, {"ebm", 0.2, 0});
  CHECK(std::isfinite(ok.metric_value));
}

TEST_CASE("gini sweep") {
  const auto cfg = parse_config(
      "experiment = gini_vs_beta\nsweep_values = 0.1, 0.3, 0.5\nN = 5\nT = 2000\nruns = 2\n");
  const auto r = run_sweep(cfg, 1);
  REQUIRE(r.size() == 6);
  CHECK(r[0].metric_name == "mean_gini");
  CHECK(r[0].metric_value > r[2].metric_value);
  CHECK(r[2].metric_value > r[4].metric_value);
}

TEST_CASE("summary statistics") {
  const auto single = summarize({rec("ebm", 0.1, 0, 0.25)});
  REQUIRE(single.size() == 1);
  CHECK(single[0].mean == 0.25);
  CHECK(single[0].median == 0.25);
  CHECK(single[0].q75 - single[0].q25 == 0.0);

  const auto three = summarize({rec("ebm", 0.1, 0, 3), rec("ebm", 0.1, 1, 1), rec("ebm", 0.1, 2, 2)});
  CHECK(three[0].mean == 2.0);
  CHECK(three[0].median == 2.0);
  CHECK(three[0].q25 == 1.5);
  CHECK(three[0].q75 == 2.5);

  // 300 runs against a streaming (Welford) mean.
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(-6.0, 2.0);
  std::vector<RunRecord> many;
  double welford = 0;
  for (int i = 0; i < 300; ++i) {
    const double v = ln(rng);
    many.push_back(rec("sparse_ebm", 0.5, i, v));
    welford += (v - welford) / (i + 1);
  }
  const auto s = summarize(many);
  CHECK(std::abs(s[0].mean - welford) <= 1e-12 * std::abs(welford));
  CHECK(s[0].n_runs == 300);

  // NaN sentinels are counted, all-NaN cells are kept.
  const auto mixed = summarize({rec("ebm", 0.1, 0, 1.0), rec("ebm", 0.1, 1, kNaN),
                                rec("ebm", 0.2, 0, kNaN), rec("sparse_ebm", 0.1, 0, 2.0)});
  REQUIRE(mixed.size() == 3);
  CHECK(mixed[0].algorithm == "ebm");
  CHECK(mixed[0].n_excluded == 1);
  CHECK(mixed[0].mean == 1.0);
  CHECK(mixed[1].all_failed());
  CHECK(std::isnan(mixed[1].mean));
  CHECK(mixed[1].n_excluded == 1);
  CHECK(mixed[2].algorithm == "sparse_ebm");

  CHECK_THROWS_AS(summarize({}), Error);

  const auto dir = scratch("summary");
  write_summary_csv(dir / "summary.csv", mixed);
  CHECK(slurp(dir / "summary.csv").rfind(std::string(kSummaryHeader) + "\n", 0) == 0);
  const auto back = read_summary_csv(dir / "summary.csv");
  REQUIRE(back.size() == mixed.size());
  CHECK(back[0].mean == mixed[0].mean);
  CHECK(std::isnan(back[1].median));
  fs::remove_all(dir);
}

TEST_CASE("quantiles") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  CHECK(quantile_sorted(v, 0.25) == 1.75);
}

TEST_CASE("plot of a single two-point series") {
  const auto rows = summarize({rec("ebm", 0.1, 0, 0.5), rec("ebm", 0.3, 0, 0.2)});
  PlotSpec spec;
  spec.title = "A & B <test>";
  const auto res = render_plot(rows, spec);
  const std::regex poly("<polyline[^>]*points=\"([^\"]*)\"");
  std::vector<std::string> found;
  for (auto it = std::sregex_iterator(res.svg.begin(), res.svg.end(), poly); it != std::sregex_iterator(); ++it) {
    found.push_back((*it)[1]);
  }
  REQUIRE(found.size() == 1);
  std::istringstream pts(found[0]);
  std::vector<std::pair<double, double>> xy;
  std::string tok;
  while (pts >> tok) {
    const auto c = tok.find(',');
    xy.emplace_back(std::stod(tok.substr(0, c)), std::stod(tok.substr(c + 1)));
  }
  REQUIRE(xy.size() == 2);
  CHECK(res.svg.find("A &amp; B &lt;test&gt;") != std::string::npos);
  CHECK(res.svg.rfind("<?xml", 0) == 0);
  CHECK(res.svg.find("</svg>") != std::string::npos);

  // Pixels map back to the data within half a pixel.
  const double xs[] = {0.1, 0.3}, ys[] = {0.5, 0.2};
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(res.x.to_pixel(res.x.to_data(xy[i].first)) - res.x.to_pixel(xs[i])) < 0.5);
    CHECK(std::abs(xy[i].first - res.x.to_pixel(xs[i])) < 0.5);
    CHECK(std::abs(xy[i].second - res.y.to_pixel(ys[i])) < 0.5);
    CHECK(std::abs(res.y.to_data(xy[i].second) - ys[i]) <
          0.5 * std::abs(res.y.data_hi - res.y.data_lo) / std::abs(res.y.pixel_hi - res.y.pixel_lo));
  }
}

TEST_CASE("plot log axes and errors") {
  const auto rows = summarize({rec("ebm", 1, 0, 1e-3), rec("ebm", 10, 0, 1e-1),
                               rec("ebm", 100, 0, 0.0), rec("sparse_ebm", 1, 0, 1e-2),
                               rec("sparse_ebm", 100, 0, 1e-4)});
  PlotSpec spec;
  spec.log_x = spec.log_y = true;
  const auto res = render_plot(rows, spec);
  CHECK(res.series == 2);
  CHECK(res.dropped_points == 1);
  // Log map: equal ratios give equal pixel spans.
  CHECK(res.x.to_pixel(10) - res.x.to_pixel(1) ==
        doctest::Approx(res.x.to_pixel(100) - res.x.to_pixel(10)));
  for (double v : {2e-4, 3e-3, 0.07}) CHECK(res.y.to_data(res.y.to_pixel(v)) == doctest::Approx(v));

  CHECK_THROWS_AS(render_plot({}, spec), Error);
  const auto nothing = summarize({rec("ebm", 1, 0, 0.0)});
  CHECK_THROWS_AS(render_plot(nothing, spec), Error);
}

TEST_CASE("selftest passes") {
  for (const auto& c : run_selftest()) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("command line interface") {
  const auto dir = scratch("cli");
  {
    std::ofstream out(dir / "cfg.txt");
    out << "experiment = isr_vs_beta\nalgorithms = sparse_ebm, ebm\nsweep_values = 0.3, 0.5\n"
        << "N = 3\nT = 300\nlambda = 1\nruns = 2\nmaster_seed = 4\noutput_dir = "
        << (dir / "out").string() << "\n";
  }
  const std::string cfg = " --config " + (dir / "cfg.txt").string();
  CHECK(run_cli("sweep" + cfg + " --workers 2") == 0);
  for (const char* f : {"runs.csv", "summary.csv", "plot.svg", "config.txt"}) {
    CHECK(fs::exists(dir / "out" / f));
  }
  const auto first = slurp(dir / "out" / "runs.csv");
  CHECK(run_cli("sweep" + cfg + " --workers 1 --out " + (dir / "out2").string()) == 0);
  CHECK(slurp(dir / "out2" / "runs.csv") == first);
  CHECK(read_runs_csv(dir / "out" / "runs.csv").size() == 8);

  CHECK(run_cli("replay" + cfg + " --runs-file " + (dir / "out" / "runs.csv").string() + " --record 5") == 0);
  CHECK(run_cli("summarize --in " + (dir / "out" / "runs.csv").string() + " --out " +
                (dir / "s.csv").string()) == 0);
  CHECK(run_cli("plot --in " + (dir / "s.csv").string() + " --out " + (dir / "p.svg").string() +
                " --log-y") == 0);
  CHECK(run_cli("run" + cfg + " --algorithm ebm --value 0.5 --run 1") == 0);
  CHECK(run_cli("gen" + cfg + " --out " + (dir / "gen").string()) == 0);
  CHECK(fs::exists(dir / "gen" / "mixtures.csv"));

  // Validation failures exit with 1, runtime failures with 2.
  CHECK(run_cli("sweep" + cfg + " --runs 0") == 1);
  CHECK(run_cli("sweep --config " + (dir / "missing.txt").string()) == 1);
  CHECK(run_cli("frobnicate") == 1);
  {
    std::ofstream out(dir / "bad.txt");
    out << "experiment = isr_vs_beta\nsweep_values = 0.1\nruns = 0\n";
  }
  CHECK(run_cli("sweep --config " + (dir / "bad.txt").string()) == 1);
  CHECK(run_cli("run" + cfg + " --algorithm bogus") != 0);
  CHECK(run_cli("replay --config " + (dir / "bad.txt").string() + " --runs-file " +
                (dir / "out" / "runs.csv").string() + " --record 0") == 1);
  fs::remove_all(dir);
}
