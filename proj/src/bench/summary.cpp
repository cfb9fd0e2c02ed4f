#include "sparseica/bench/summary.hpp"

#include "sparseica/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace sparseica::bench {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw Error("summarize: no records");

  std::vector<std::string> algo_order;
  using Key = std::tuple<std::string, std::size_t, double>;  // experiment, algo rank, value
  std::map<Key, std::vector<double>> cells;
  std::map<Key, std::size_t> excluded;
  for (const auto& r : records) {
    auto it = std::find(algo_order.begin(), algo_order.end(), r.algorithm);
    if (it == algo_order.end()) it = algo_order.insert(algo_order.end(), r.algorithm);
    const Key key{r.experiment, static_cast<std::size_t>(it - algo_order.begin()), r.sweep_value};
    auto& values = cells[key];
    if (std::isfinite(r.metric_value)) {
      values.push_back(r.metric_value);
    } else {
      ++excluded[key];
    }
  }

  std::vector<SummaryRow> out;
  out.reserve(cells.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& [key, values] : cells) {
    SummaryRow row;
    row.experiment = std::get<0>(key);
    row.algorithm = algo_order[std::get<1>(key)];
    row.sweep_value = std::get<2>(key);
    row.n_runs = values.size();
    row.n_excluded = excluded.count(key) ? excluded.at(key) : 0;
    if (values.empty()) {
      row.mean = row.median = row.q25 = row.q75 = nan;
    } else {
      std::sort(values.begin(), values.end());
      row.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                 static_cast<double>(values.size());
      row.median = quantile_sorted(values, 0.5);
      row.q25 = quantile_sorted(values, 0.25);
      row.q75 = quantile_sorted(values, 0.75);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.algorithm << ',' << csv::format_double(r.sweep_value) << ','
        << r.n_runs << ',' << csv::format_double(r.mean) << ',' << csv::format_double(r.median)
        << ',' << csv::format_double(r.q25) << ',' << csv::format_double(r.q75) << ','
        << r.n_excluded << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_summary_csv(out, rows);
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kSummaryHeader) {
    throw Error(path.string() + ": not a summary file (header mismatch)");
  }
  std::vector<SummaryRow> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 9) throw DimensionError(where + ": expected 9 fields");
    SummaryRow r;
    r.experiment = f[0];
    r.algorithm = f[1];
    double* numbers[] = {&r.sweep_value, &r.mean, &r.median, &r.q25, &r.q75};
    const std::size_t columns[] = {2, 4, 5, 6, 7};
    for (std::size_t i = 0; i < 5; ++i) {
      const auto v = csv::parse_double(f[columns[i]]);
      if (!v) throw Error(where + ": malformed number in column " + std::to_string(columns[i] + 1));
      *numbers[i] = *v;
    }
    try {
      r.n_runs = std::stoul(f[3]);
      r.n_excluded = std::stoul(f[8]);
    } catch (const std::exception&) {
      throw Error(where + ": malformed count");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sparseica::bench
