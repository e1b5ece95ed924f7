#include "cerl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cerl/error.hpp"

namespace cerl {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " given " + std::to_string(values_.size()) + " values");
  }
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw ShapeError("hconcat: row counts differ (" + std::to_string(left.rows()) + " vs " +
                     std::to_string(right.rows()) + ")");
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + left.cols());
  }
  return out;
}

Matrix column_slice(const Matrix& m, std::size_t first, std::size_t count) {
  if (first + count > m.cols()) throw ShapeError("column_slice out of range");
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r).subspan(first, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace cerl
