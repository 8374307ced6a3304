#include "thpi/codes.hpp"

#include "thpi/error.hpp"

#include <bit>

namespace thpi {

BinaryCodeMatrix::BinaryCodeMatrix(SignMatrix signs) : signs_(std::move(signs)) {
  const Index n = signs_.rows();
  const Index c = signs_.cols();
  words_ = static_cast<std::size_t>((c + 63) / 64);
  packed_.assign(static_cast<std::size_t>(n) * words_, 0);
  for (Index i = 0; i < n; ++i) {
    std::uint64_t* row = packed_.data() + static_cast<std::size_t>(i) * words_;
    for (Index b = 0; b < c; ++b) {
      const std::int8_t s = signs_(i, b);
      if (s != 1 && s != -1) {
        throw DataError("binary code entry must be -1 or +1");
      }
      if (s == 1) row[b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }
}

BinaryCodeMatrix BinaryCodeMatrix::top_rows(Index count) const {
  return BinaryCodeMatrix(signs_.topRows(count));
}

BinaryCodeMatrix sgn(const Matrix& m) {
  BinaryCodeMatrix::SignMatrix s(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      s(i, j) = m(i, j) >= 0.0 ? std::int8_t{1} : std::int8_t{-1};
    }
  }
  return BinaryCodeMatrix(std::move(s));
}

std::uint32_t hamming_distance(std::span<const std::uint64_t> a,
                               std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) {
    throw DataError("hamming_distance: code lengths differ");
  }
  std::uint32_t d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) {
    d += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
  }
  return d;
}

}  // namespace thpi
