#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace fbp {

/// Dense row-major 2-D array. Rows are time steps, columns are receivers
/// throughout this library.
template <typename T>
struct Array2D {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Array2D() = default;
  Array2D(int rows_, int cols_, T fill = T{})
      : rows(rows_), cols(cols_), v(static_cast<size_t>(rows_) * cols_, fill) {}

  T& at(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return v[static_cast<size_t>(r) * cols + c];
  }
  const T& at(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return v[static_cast<size_t>(r) * cols + c];
  }

  size_t size() const { return v.size(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  bool same_shape(const Array2D& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const Array2D& o) const { return rows == o.rows && cols == o.cols && v == o.v; }
};

}  // namespace fbp
