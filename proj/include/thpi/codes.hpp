#pragma once

#include "thpi/matrix.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace thpi {

/// n x c matrix over {-1,+1} plus its packed form, one row of
/// ceil(c/64) words per code. Bit b of a row is set iff sign(b) = +1;
/// padding bits past c are always zero.
class BinaryCodeMatrix {
 public:
  using SignMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

  BinaryCodeMatrix() = default;
  explicit BinaryCodeMatrix(SignMatrix signs);

  Index rows() const noexcept { return signs_.rows(); }
  Index bits() const noexcept { return signs_.cols(); }
  std::size_t words_per_row() const noexcept { return words_; }

  const SignMatrix& signs() const noexcept { return signs_; }
  std::span<const std::uint64_t> packed_row(Index i) const {
    return {packed_.data() + static_cast<std::size_t>(i) * words_, words_};
  }
  std::span<const std::uint64_t> packed() const noexcept { return packed_; }

  /// Signs as doubles, for use in objective evaluations.
  Matrix as_real() const { return signs_.cast<double>(); }

  /// Rows [first, first + count).
  BinaryCodeMatrix top_rows(Index count) const;

  friend bool operator==(const BinaryCodeMatrix& a, const BinaryCodeMatrix& b) {
    return a.signs_.rows() == b.signs_.rows() && a.signs_.cols() == b.signs_.cols() &&
           a.signs_ == b.signs_;
  }

 private:
  SignMatrix signs_;
  std::vector<std::uint64_t> packed_;
  std::size_t words_ = 0;
};

/// Elementwise sign with sgn(0) = +1.
BinaryCodeMatrix sgn(const Matrix& m);

/// Number of differing bits via word-wise XOR + popcount.
/// Throws DataError when the word counts differ.
std::uint32_t hamming_distance(std::span<const std::uint64_t> a,
                               std::span<const std::uint64_t> b);

}  // namespace thpi
