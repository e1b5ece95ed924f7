#pragma once

// Learning-curve plots from metrics.csv files. Each run directory is one
// curve; its seed_* subdirectories (or the directory itself, if it holds a
// metrics.csv) are aligned by generation and summarized as the mean with a
// Student-t 95% confidence band.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cerl/error.hpp"

namespace cerl::plot {

class PlotError : public Error {
 public:
  using Error::Error;
};

/// Columns of a CSV addressed by header name. Empty cells read as NaN.
struct Table {
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> columns;
  std::size_t rows = 0;

  const std::vector<double>& column(const std::string& name) const;  // PlotError if absent
};

Table read_csv(const std::filesystem::path& path);

struct Interval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// mean -/+ t(1 - (1 - level)/2, n-1) * s / sqrt(n); zero width for n = 1.
Interval t_interval(std::span<const double> xs, double level = 0.95);

struct Curve {
  std::string label;
  std::size_t seeds = 0;
  std::vector<double> x;  // mean of x_column across seeds
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Aligns tables row by row over their common length.
Curve aggregate(const std::string& label, const std::vector<Table>& runs,
                const std::string& x_column, const std::string& y_column);

/// metrics.csv paths for a run directory: seed_*/metrics.csv, else ./metrics.csv.
std::vector<std::filesystem::path> metrics_files(const std::filesystem::path& run_dir);

Curve load_curve(const std::filesystem::path& run_dir, const std::string& y_column,
                 const std::string& x_column = "total_steps");

std::string render_svg(const std::vector<Curve>& curves, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace cerl::plot
