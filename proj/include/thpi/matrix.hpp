#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <vector>
#include <string_view>
#include <utility>

namespace thpi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense real matrix, one row per instance. Every value is finite.
///
/// Zero-row matrices are representable (an empty source-extra block when
/// alpha = 1); operations that need data call require_nonempty().
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(Matrix values);
  DataMatrix(std::initializer_list<std::initializer_list<double>> rows);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  bool empty() const noexcept { return values_.rows() == 0; }
  const Matrix& values() const noexcept { return values_; }

  /// Throws DataError naming `what` when the matrix has no rows or columns.
  void require_nonempty(std::string_view what) const;

  /// Rows selected by index, in the given order.
  DataMatrix select_rows(const std::vector<Index>& indices) const;

  friend bool operator==(const DataMatrix& a, const DataMatrix& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

 private:
  Matrix values_;
};

/// Column means removed by zero_center(); reused to center queries.
struct CenteringInfo {
  Vector mean;
};

std::pair<DataMatrix, CenteringInfo> zero_center(const DataMatrix& x);

/// Subtracts a previously recorded mean (test queries reuse the training mean).
DataMatrix apply_centering(const DataMatrix& x, const CenteringInfo& info);

/// Rows of `top` followed by rows of `bottom`; column counts must agree.
DataMatrix stack_rows(const DataMatrix& top, const DataMatrix& bottom);

}  // namespace thpi
