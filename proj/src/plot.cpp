#include "cerl/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace cerl::plot {

namespace fs = std::filesystem;

const std::vector<double>& Table::column(const std::string& name) const {
  auto it = columns.find(name);
  if (it == columns.end()) throw PlotError("missing column '" + name + "'");
  return it->second;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PlotError(path.string() + ": cannot open");
  Table t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw PlotError(path.string() + ": empty file, no header");
  if (line.back() == '\r') line.pop_back();
  t.header = split(line);
  for (const auto& h : t.header) {
    if (t.columns.contains(h)) throw PlotError(path.string() + ": duplicate column '" + h + "'");
    t.columns[h];
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw PlotError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = std::numeric_limits<double>::quiet_NaN();
      const std::string& c = cells[i];
      if (!c.empty()) {
        const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
        // Non-numeric columns (e.g. elite lists) are kept as NaN.
        if (ec != std::errc() || p != c.data() + c.size()) v = std::numeric_limits<double>::quiet_NaN();
      }
      t.columns[t.header[i]].push_back(v);
    }
    ++t.rows;
  }
  return t;
}

Interval t_interval(std::span<const double> xs, double level) {
  if (xs.empty()) throw PlotError("confidence interval of an empty sample");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() == 1) return {mean, mean, mean};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
  const double half = t * sd / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

Curve aggregate(const std::string& label, const std::vector<Table>& runs,
                const std::string& x_column, const std::string& y_column) {
  if (runs.empty()) throw PlotError(label + ": no runs to aggregate");
  Curve c;
  c.label = label;
  c.seeds = runs.size();
  std::size_t rows = std::numeric_limits<std::size_t>::max();
  for (const auto& t : runs) rows = std::min(rows, t.rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> ys;
    double x = 0.0;
    for (const auto& t : runs) {
      ys.push_back(t.column(y_column)[r]);
      x += t.column(x_column)[r];
    }
    const Interval iv = t_interval(ys);
    c.x.push_back(x / static_cast<double>(runs.size()));
    c.mean.push_back(iv.mean);
    c.lower.push_back(iv.lower);
    c.upper.push_back(iv.upper);
  }
  return c;
}

std::vector<fs::path> metrics_files(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw PlotError(run_dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with("seed_") && fs::exists(entry.path() / "metrics.csv")) {
      files.push_back(entry.path() / "metrics.csv");
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty() && fs::exists(run_dir / "metrics.csv")) files.push_back(run_dir / "metrics.csv");
  if (files.empty()) throw PlotError(run_dir.string() + ": no metrics.csv found");
  return files;
}

Curve load_curve(const fs::path& run_dir, const std::string& y_column, const std::string& x_column) {
  std::vector<Table> tables;
  for (const auto& f : metrics_files(run_dir)) {
    Table t = read_csv(f);
    for (const auto& col : {x_column, y_column}) {
      if (!t.columns.contains(col)) throw PlotError(f.string() + ": missing column '" + col + "'");
    }
    tables.push_back(std::move(t));
  }
  std::string label = run_dir.filename().string();
  if (label.empty() || label == ".") label = fs::absolute(run_dir).parent_path().filename().string();
  return aggregate(label, tables, x_column, y_column);
}

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string escape(const std::string& in) {
  std::string out;
  for (char ch : in) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<Curve>& curves, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  constexpr double W = 720, H = 440, L = 80, R = 180, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.mean[i]) || !std::isfinite(c.x[i])) continue;
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.lower[i]);
      y1 = std::max(y1, c.upper[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
    << H - T - B << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    s << "<line x1=\"" << px(xv) << "\" y1=\"" << T << "\" x2=\"" << px(xv) << "\" y2=\"" << H - B
      << "\" stroke=\"#eee\"/>\n";
    s << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - R << "\" y2=\"" << py(yv)
      << "\" stroke=\"#eee\"/>\n";
    s << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  s << "<text transform=\"translate(20," << (T + H - B) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const Curve& c = curves[ci];
    const char* color = kPalette[ci % std::size(kPalette)];
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (std::isfinite(c.mean[i]) && std::isfinite(c.x[i])) pts.push_back(i);
    }
    if (c.seeds > 1 && !pts.empty()) {
      s << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (auto i : pts) s << px(c.x[i]) << ',' << py(c.upper[i]) << ' ';
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) s << px(c.x[*it]) << ',' << py(c.lower[*it]) << ' ';
      s << "\"/>\n";
    }
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto i : pts) s << px(c.x[i]) << ',' << py(c.mean[i]) << ' ';
    s << "\"/>\n";
    const double ly = T + 16 + 20.0 * static_cast<double>(ci);
    s << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << escape(c.label) << " (n="
      << c.seeds << ")</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace cerl::plot
