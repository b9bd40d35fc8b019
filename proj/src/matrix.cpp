#include "fitted/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fitted/errors.hpp"

namespace fitted {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ShapeMismatchError("matrix: expected " + std::to_string(rows_ * cols_) +
                             " values, got " + std::to_string(values_.size()));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw ShapeMismatchError("matrix: ragged row " + std::to_string(r));
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double max_row_sum_deviation(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (double v : m.row(r)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

}  // namespace fitted
