#include "thpi/matrix.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>

namespace thpi {

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw NumericalError("data matrix contains non-finite values");
  }
}

DataMatrix::DataMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  const Index n = static_cast<Index>(rows.size());
  const Index d = n == 0 ? 0 : static_cast<Index>(rows.begin()->size());
  Matrix m(n, d);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != d) {
      throw DataError("ragged initializer for data matrix");
    }
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  *this = DataMatrix(std::move(m));
}

void DataMatrix::require_nonempty(std::string_view what) const {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DataError(fmt::format("{}: matrix is empty ({}x{})", what, values_.rows(),
                                values_.cols()));
  }
}

DataMatrix DataMatrix::select_rows(const std::vector<Index>& indices) const {
  Matrix out(static_cast<Index>(indices.size()), values_.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.row(static_cast<Index>(r)) = values_.row(indices[r]);
  }
  return DataMatrix(std::move(out));
}

std::pair<DataMatrix, CenteringInfo> zero_center(const DataMatrix& x) {
  x.require_nonempty("zero_center");
  CenteringInfo info{x.values().colwise().mean().transpose()};
  Matrix centered = x.values().rowwise() - info.mean.transpose();
  return {DataMatrix(std::move(centered)), std::move(info)};
}

DataMatrix apply_centering(const DataMatrix& x, const CenteringInfo& info) {
  if (x.cols() != info.mean.size()) {
    throw DataError(fmt::format("centering: data has {} columns, mean has {}", x.cols(),
                                info.mean.size()));
  }
  Matrix centered = x.values().rowwise() - info.mean.transpose();
  return DataMatrix(std::move(centered));
}

DataMatrix stack_rows(const DataMatrix& top, const DataMatrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols()) {
    throw DataError(fmt::format("stack_rows: column counts differ ({} vs {})", top.cols(),
                                bottom.cols()));
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top.values();
  out.bottomRows(bottom.rows()) = bottom.values();
  return DataMatrix(std::move(out));
}

}  // namespace thpi
