#include "sparseica/bench/config.hpp"

#include "sparseica/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sparseica::bench {

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::gini_vs_beta: return "gini_vs_beta";
    case Experiment::isr_vs_beta: return "isr_vs_beta";
    case Experiment::isr_vs_T: return "isr_vs_T";
    case Experiment::isr_vs_N: return "isr_vs_N";
    case Experiment::fmri_cnr: return "fmri_cnr";
  }
  return "unknown";
}

std::optional<Experiment> experiment_from_string(std::string_view s) {
  for (auto e : {Experiment::gini_vs_beta, Experiment::isr_vs_beta, Experiment::isr_vs_T,
                 Experiment::isr_vs_N, Experiment::fmri_cnr}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

std::string_view metric_name(Experiment e) {
  switch (e) {
    case Experiment::gini_vs_beta: return "mean_gini";
    case Experiment::fmri_cnr: return "mean_abs_corr";
    default: return "normalized_isr";
  }
}

ica::SparsityPenalty SweepConfig::penalty() const {
  ica::SparsityPenalty p;
  p.lambda = lambda;
  p.epsilon = epsilon;
  return p;
}

ica::EngineParams SweepConfig::engine_params(std::uint64_t seed) const {
  ica::EngineParams p;
  p.max_sweeps = max_sweeps;
  p.tol = tol;
  p.restarts = restarts;
  p.seed = seed;
  p.infomax_eta0 = infomax_eta0;
  return p;
}

namespace {

std::string describe(const std::vector<ConfigProblem>& problems) {
  std::ostringstream os;
  os << problems.size() << " configuration problem(s):";
  for (const auto& p : problems) {
    os << "\n  ";
    if (p.line) os << "line " << p.line << ": ";
    if (!p.key.empty()) os << p.key << ": ";
    os << p.message;
  }
  return os.str();
}

std::optional<long long> parse_int(std::string_view s) {
  s = csv::trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  s = csv::trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  s = csv::trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += csv::format_double(v[i]);
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigProblem> problems)
    : Error(describe(problems)), problems_(std::move(problems)) {}

SweepConfig parse_config(std::string_view text) {
  SweepConfig cfg;
  std::vector<ConfigProblem> problems;
  bool have_sweep = false;
  std::map<std::string, std::size_t> seen;

  using Setter = std::function<std::optional<std::string>(std::string_view)>;
  auto int_field = [](int& dst) -> Setter {
    return [&dst](std::string_view v) -> std::optional<std::string> {
      auto i = parse_int(v);
      if (!i || *i < INT32_MIN || *i > INT32_MAX) return "expected an integer";
      dst = static_cast<int>(*i);
      return std::nullopt;
    };
  };
  auto double_field = [](double& dst) -> Setter {
    return [&dst](std::string_view v) -> std::optional<std::string> {
      auto d = csv::parse_double(v);
      if (!d) return "expected a number";
      dst = *d;
      return std::nullopt;
    };
  };
  auto list_field = [](std::vector<double>& dst) -> Setter {
    return [&dst](std::string_view v) -> std::optional<std::string> {
      dst.clear();
      for (const auto& f : csv::split(v)) {
        auto d = csv::parse_double(f);
        if (!d) return "expected a comma-separated list of numbers, got '" + f + "'";
        dst.push_back(*d);
      }
      return std::nullopt;
    };
  };

  const std::map<std::string, Setter, std::less<>> setters{
      {"experiment",
       [&](std::string_view v) -> std::optional<std::string> {
         auto e = experiment_from_string(csv::trim(v));
         if (!e) return "unknown experiment '" + std::string(csv::trim(v)) + "'";
         cfg.experiment = *e;
         return std::nullopt;
       }},
      {"algorithms",
       [&](std::string_view v) -> std::optional<std::string> {
         cfg.algorithms.clear();
         for (const auto& f : csv::split(v)) {
           auto a = ica::algorithm_from_string(f);
           if (!a) return "unknown algorithm '" + f + "'";
           cfg.algorithms.push_back(*a);
         }
         return std::nullopt;
       }},
      {"sweep_values",
       [&, inner = list_field(cfg.sweep_values)](std::string_view v) {
         have_sweep = true;
         return inner(v);
       }},
      {"N", int_field(cfg.n_sources)},
      {"T", int_field(cfg.samples)},
      {"beta", double_field(cfg.beta)},
      {"cond_cap", double_field(cfg.cond_cap)},
      {"lambda", double_field(cfg.lambda)},
      {"epsilon", double_field(cfg.epsilon)},
      {"max_sweeps", int_field(cfg.max_sweeps)},
      {"tol", double_field(cfg.tol)},
      {"restarts", int_field(cfg.restarts)},
      {"infomax_eta0",
       [&](std::string_view v) -> std::optional<std::string> {
         auto d = csv::parse_double(v);
         if (!d) return "expected a number";
         cfg.infomax_eta0 = *d;
         return std::nullopt;
       }},
      {"runs", int_field(cfg.runs)},
      {"master_seed",
       [&](std::string_view v) -> std::optional<std::string> {
         auto u = parse_u64(v);
         if (!u) return "expected an unsigned 64-bit integer";
         cfg.master_seed = *u;
         return std::nullopt;
       }},
      {"cnr", list_field(cfg.cnr)},
      {"grid", int_field(cfg.grid)},
      {"K", int_field(cfg.components)},
      {"frames", int_field(cfg.frames)},
      {"baseline", double_field(cfg.baseline)},
      {"output_dir",
       [&](std::string_view v) -> std::optional<std::string> {
         cfg.output_dir = std::string(csv::trim(v));
         if (cfg.output_dir.empty()) return "must not be empty";
         return std::nullopt;
       }},
      {"timing",
       [&](std::string_view v) -> std::optional<std::string> {
         auto b = parse_bool(v);
         if (!b) return "expected true or false";
         cfg.timing = *b;
         return std::nullopt;
       }},
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? text.npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back({line_no, "", "expected 'key = value'"});
      continue;
    }
    const std::string key(csv::trim(line.substr(0, eq)));
    const std::string_view value = csv::trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) {
      problems.push_back({line_no, key, "unknown key"});
      continue;
    }
    if (auto prev = seen.find(key); prev != seen.end()) {
      problems.push_back({line_no, key,
                          "duplicate key (first set on line " + std::to_string(prev->second) + ")"});
      continue;
    }
    seen[key] = line_no;
    if (auto err = it->second(value)) problems.push_back({line_no, key, *err});
  }

  if (seen.find("experiment") == seen.end()) {
    problems.push_back({0, "experiment", "required key missing"});
  }
  if (!have_sweep && cfg.experiment == Experiment::fmri_cnr && !cfg.cnr.empty()) {
    cfg.sweep_values = cfg.cnr;
    have_sweep = true;
  }
  if (!have_sweep && seen.find("sweep_values") == seen.end()) {
    problems.push_back({0, "sweep_values", "required key missing"});
  }
  if (problems.empty()) {
    for (auto& p : validate(cfg)) {
      if (auto s = seen.find(p.key); s != seen.end()) p.line = s->second;
      problems.push_back(std::move(p));
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

std::vector<ConfigProblem> validate(const SweepConfig& cfg) {
  std::vector<ConfigProblem> out;
  auto fail = [&](const char* key, std::string msg) { out.push_back({0, key, std::move(msg)}); };

  if (cfg.runs < 1) fail("runs", "must be >= 1");
  if (cfg.sweep_values.empty()) fail("sweep_values", "must not be empty");
  if (!std::is_sorted(cfg.sweep_values.begin(), cfg.sweep_values.end()) ||
      std::adjacent_find(cfg.sweep_values.begin(), cfg.sweep_values.end()) !=
          cfg.sweep_values.end()) {
    fail("sweep_values", "must be strictly increasing");
  }
  for (double v : cfg.sweep_values) {
    if (std::isnan(v)) fail("sweep_values", "NaN is not a valid sweep value");
  }
  if (cfg.algorithms.empty() && cfg.experiment != Experiment::gini_vs_beta) {
    fail("algorithms", "must name at least one algorithm");
  }
  if (cfg.n_sources < 1) fail("N", "must be >= 1");
  if (cfg.samples < 1) fail("T", "must be >= 1");
  if (cfg.samples < cfg.n_sources && cfg.experiment != Experiment::gini_vs_beta &&
      cfg.experiment != Experiment::fmri_cnr) {
    fail("T", "must be >= N");
  }
  if (!(cfg.beta > 0.0)) fail("beta", "must be > 0");
  if (!(cfg.cond_cap >= 1.0)) fail("cond_cap", "must be >= 1");
  if (!(cfg.lambda >= 0.0)) fail("lambda", "must be >= 0");
  if (!(cfg.epsilon > 0.0)) fail("epsilon", "must be > 0");
  if (cfg.max_sweeps < 1) fail("max_sweeps", "must be >= 1");
  if (!(cfg.tol > 0.0)) fail("tol", "must be > 0");
  if (cfg.restarts < 1) fail("restarts", "must be >= 1");
  if (cfg.infomax_eta0 && !(*cfg.infomax_eta0 > 0.0)) fail("infomax_eta0", "must be > 0");
  if (cfg.grid < 32) fail("grid", "must be >= 32");
  if (cfg.components < 1 || cfg.components > 30) fail("K", "must lie in [1, 30]");
  if (cfg.frames < cfg.components) fail("frames", "must be >= K");
  if (!(cfg.baseline > 0.0)) fail("baseline", "must be > 0");
  for (double c : cfg.cnr) {
    if (!(c > 0.0)) fail("cnr", "values must be > 0");
  }

  for (double v : cfg.sweep_values) {
    switch (cfg.experiment) {
      case Experiment::gini_vs_beta:
      case Experiment::isr_vs_beta:
        if (!(v > 0.0)) fail("sweep_values", "beta values must be > 0");
        break;
      case Experiment::isr_vs_T:
        if (v != std::floor(v) || v < cfg.n_sources) {
          fail("sweep_values", "sample sizes must be integers >= N");
        }
        break;
      case Experiment::isr_vs_N:
        if (v != std::floor(v) || v < 1 || v > cfg.samples) {
          fail("sweep_values", "source counts must be integers in [1, T]");
        }
        break;
      case Experiment::fmri_cnr:
        if (!(v > 0.0)) fail("sweep_values", "CNR values must be > 0");
        break;
    }
  }
  return out;
}

SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({{0, "", "cannot open " + path.string()}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string save_config(const SweepConfig& cfg) {
  std::ostringstream os;
  os << "experiment = " << to_string(cfg.experiment) << '\n';
  os << "algorithms = ";
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
    os << (i ? ", " : "") << ica::to_string(cfg.algorithms[i]);
  }
  os << '\n';
  os << "sweep_values = " << join_doubles(cfg.sweep_values) << '\n';
  os << "N = " << cfg.n_sources << '\n';
  os << "T = " << cfg.samples << '\n';
  os << "beta = " << csv::format_double(cfg.beta) << '\n';
  os << "cond_cap = " << csv::format_double(cfg.cond_cap) << '\n';
  os << "lambda = " << csv::format_double(cfg.lambda) << '\n';
  os << "epsilon = " << csv::format_double(cfg.epsilon) << '\n';
  os << "max_sweeps = " << cfg.max_sweeps << '\n';
  os << "tol = " << csv::format_double(cfg.tol) << '\n';
  os << "restarts = " << cfg.restarts << '\n';
  if (cfg.infomax_eta0) os << "infomax_eta0 = " << csv::format_double(*cfg.infomax_eta0) << '\n';
  os << "runs = " << cfg.runs << '\n';
  os << "master_seed = " << cfg.master_seed << '\n';
  if (!cfg.cnr.empty()) os << "cnr = " << join_doubles(cfg.cnr) << '\n';
  os << "grid = " << cfg.grid << '\n';
  os << "K = " << cfg.components << '\n';
  os << "frames = " << cfg.frames << '\n';
  os << "baseline = " << csv::format_double(cfg.baseline) << '\n';
  os << "output_dir = " << cfg.output_dir << '\n';
  os << "timing = " << (cfg.timing ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace sparseica::bench
