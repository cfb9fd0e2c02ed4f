#include "sparseica/bench/plot.hpp"

#include "sparseica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <utility>

namespace sparseica::bench {

double AxisMap::to_pixel(double v) const {
  const double a = log ? std::log10(data_lo) : data_lo;
  const double b = log ? std::log10(data_hi) : data_hi;
  const double t = ((log ? std::log10(v) : v) - a) / (b - a);
  return pixel_lo + t * (pixel_hi - pixel_lo);
}

double AxisMap::to_data(double p) const {
  const double a = log ? std::log10(data_lo) : data_lo;
  const double b = log ? std::log10(data_hi) : data_hi;
  const double u = a + (p - pixel_lo) / (pixel_hi - pixel_lo) * (b - a);
  return log ? std::pow(10.0, u) : u;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Widens a degenerate range and, for linear axes, rounds outward to a nice step.
std::pair<double, double> padded_range(double lo, double hi, bool log) {
  if (log) {
    if (lo == hi) return {lo / 2.0, hi * 2.0};
    return {lo, hi};
  }
  if (lo == hi) {
    const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - d, hi + d};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::vector<double> ticks(double lo, double hi, bool log) {
  std::vector<double> out;
  if (log) {
    for (int k = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
         k <= static_cast<int>(std::floor(std::log10(hi) + 1e-9)); ++k) {
      out.push_back(std::pow(10.0, k));
    }
    if (out.size() >= 2) return out;
    out.clear();
    // Less than a decade: fall back to evenly spaced values in log space.
    for (int i = 0; i <= 4; ++i) {
      out.push_back(std::pow(10.0, std::log10(lo) + i * (std::log10(hi) - std::log10(lo)) / 4));
    }
    return out;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

}  // namespace

PlotResult render_plot(const std::vector<SummaryRow>& rows, const PlotSpec& spec) {
  if (rows.empty()) throw Error("render_plot: empty summary");

  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
  };
  std::vector<Series> series;
  PlotResult result;
  for (const auto& r : rows) {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.name == r.algorithm; });
    if (it == series.end()) it = series.insert(series.end(), Series{r.algorithm, {}});
    const double y = spec.statistic == Statistic::mean ? r.mean : r.median;
    const double x = r.sweep_value;
    const bool ok = std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0.0) &&
                    (!spec.log_y || y > 0.0);
    if (ok) {
      it->points.emplace_back(x, y);
    } else {
      ++result.dropped_points;
    }
  }
  std::erase_if(series, [](const Series& s) { return s.points.empty(); });
  if (series.empty()) throw Error("render_plot: no drawable points");
  for (auto& s : series) std::sort(s.points.begin(), s.points.end());

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  std::tie(xlo, xhi) = padded_range(xlo, xhi, spec.log_x);
  std::tie(ylo, yhi) = padded_range(ylo, yhi, spec.log_y);

  const double left = 70, right = 150, top = 40, bottom = 55;
  result.x = {xlo, xhi, left, spec.width - right, spec.log_x};
  result.y = {ylo, yhi, spec.height - bottom, top, spec.log_y};
  result.series = series.size();

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(spec.width)
      << "\" height=\"" << fmt(spec.height) << "\" viewBox=\"0 0 " << fmt(spec.width) << ' '
      << fmt(spec.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << fmt(spec.width / 2) << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << escape(spec.title) << "</text>\n";

  const double x0 = result.x.pixel_lo, x1 = result.x.pixel_hi;
  const double y0 = result.y.pixel_lo, y1 = result.y.pixel_hi;
  svg << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
      << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\""
      << fmt(y0) << "\"/>\n"
      << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\""
      << fmt(y1) << "\"/>\n</g>\n";

  svg << "<g class=\"xticks\">\n";
  for (double v : ticks(xlo, xhi, spec.log_x)) {
    const double p = result.x.to_pixel(v);
    svg << "<line x1=\"" << fmt(p) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(p) << "\" y2=\""
        << fmt(y0 + 5) << "\" stroke=\"black\"/>"
        << "<text x=\"" << fmt(p) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">"
        << tick_label(v) << "</text>\n";
  }
  svg << "</g>\n<g class=\"yticks\">\n";
  for (double v : ticks(ylo, yhi, spec.log_y)) {
    const double p = result.y.to_pixel(v);
    svg << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(p) << "\" x2=\"" << fmt(x0)
        << "\" y2=\"" << fmt(p) << "\" stroke=\"black\"/>"
        << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(p + 4) << "\" text-anchor=\"end\">"
        << tick_label(v) << "</text>\n";
  }
  svg << "</g>\n";

  svg << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(spec.height - 12)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << fmt((y0 + y1) / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << fmt((y0 + y1) / 2) << ")\">" << escape(spec.y_label)
      << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    svg << "<polyline class=\"series\" data-name=\"" << escape(series[i].name)
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto [x, y] = series[i].points[k];
      svg << (k ? " " : "") << fmt(result.x.to_pixel(x)) << ',' << fmt(result.y.to_pixel(y));
    }
    svg << "\"/>\n";
  }

  svg << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    const double lx = spec.width - right + 15;
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 25)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << kPalette[i % std::size(kPalette)]
        << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(ly + 4) << "\">"
        << escape(series[i].name) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";

  result.svg = svg.str();
  return result;
}

PlotSpec default_plot_spec(const std::string& experiment) {
  PlotSpec spec;
  spec.title = experiment;
  if (experiment == "gini_vs_beta") {
    spec = {"Average Gini index vs shape parameter", "beta", "mean Gini index"};
    spec.statistic = Statistic::mean;
  } else if (experiment == "isr_vs_beta") {
    spec = {"Normalized ISR vs shape parameter", "beta", "normalized ISR (median)"};
    spec.log_y = true;
  } else if (experiment == "isr_vs_T") {
    spec = {"Normalized ISR vs number of samples", "T", "normalized ISR (median)", true, true};
  } else if (experiment == "isr_vs_N") {
    spec = {"Normalized ISR vs number of sources", "N", "normalized ISR (median)"};
    spec.log_y = true;
  } else if (experiment == "fmri_cnr") {
    spec = {"Mean |correlation| vs CNR", "CNR", "mean |corr|", true, false};
    spec.statistic = Statistic::mean;
  }
  return spec;
}

}  // namespace sparseica::bench
