#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cecpd/errors.hpp"

namespace cecpd {

// Dense row-major n x d matrix of finite reals. Rows are observations,
// columns are variables.
class SampleMatrix {
 public:
  SampleMatrix() = default;

  SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ == 0 || cols_ == 0) {
      throw ConfigError("SampleMatrix: need at least one row and one column");
    }
    if (values_.size() != rows_ * cols_) {
      throw ConfigError("SampleMatrix: value count does not match shape");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw ConfigError("SampleMatrix: non-finite entry at row " +
                          std::to_string(i / cols_) + ", column " +
                          std::to_string(i % cols_));
      }
    }
  }

  static SampleMatrix from_columns(const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw ConfigError("SampleMatrix: no columns");
    const std::size_t n = columns.front().size();
    std::vector<double> values(n * columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != n) throw ConfigError("SampleMatrix: ragged columns");
      for (std::size_t i = 0; i < n; ++i) values[i * columns.size() + j] = columns[j][i];
    }
    return {n, columns.size(), std::move(values)};
  }

  static SampleMatrix column_vector(std::vector<double> column) {
    const std::size_t n = column.size();
    return {n, 1, std::move(column)};
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const { return values_; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  // Rows [first, last).
  SampleMatrix slice(std::size_t first, std::size_t last) const {
    if (first >= last || last > rows_) throw ConfigError("SampleMatrix: bad row slice");
    return {last - first, cols_,
            std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                                values_.begin() + static_cast<std::ptrdiff_t>(last * cols_))};
  }

  // Vertical concatenation.
  static SampleMatrix stack(const SampleMatrix& top, const SampleMatrix& bottom) {
    if (top.cols() != bottom.cols()) {
      throw ConfigError("SampleMatrix: dimension mismatch (" + std::to_string(top.cols()) +
                        " vs " + std::to_string(bottom.cols()) + ")");
    }
    std::vector<double> values(top.values_);
    values.insert(values.end(), bottom.values_.begin(), bottom.values_.end());
    return {top.rows() + bottom.rows(), top.cols(), std::move(values)};
  }

  // Appends one column on the right.
  SampleMatrix with_column(std::span<const double> column) const {
    if (column.size() != rows_) throw ConfigError("SampleMatrix: appended column has wrong length");
    std::vector<double> values;
    values.reserve(rows_ * (cols_ + 1));
    for (std::size_t i = 0; i < rows_; ++i) {
      auto r = row(i);
      values.insert(values.end(), r.begin(), r.end());
      values.push_back(column[i]);
    }
    return {rows_, cols_ + 1, std::move(values)};
  }

  friend bool operator==(const SampleMatrix&, const SampleMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace cecpd
