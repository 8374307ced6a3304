#pragma once

// Data-parallel kernels behind retrieval and graph construction.
//
// Every kernel has a plain serial reference (kernels_serial.cpp: full sorts,
// no shortcuts) and an OpenMP version (kernels_omp.cpp: counting sorts and
// selection, parallel over rows). Both produce identical results; the
// reference exists for tests and for the benchmark baseline.

#include "thpi/codes.hpp"
#include "thpi/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace thpi::kernels {

enum class Exec { serial, parallel };

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IdList = std::vector<std::uint32_t>;

/// Euclidean distance with a fixed summation order so that both kernel
/// flavours agree bit-for-bit.
inline double euclidean(const double* a, const double* b, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

namespace serial {
/// Database positions sorted by (Hamming distance, position), one list per query.
std::vector<IdList> hamming_rank(const BinaryCodeMatrix& db, const BinaryCodeMatrix& queries);
/// For each of the first n codes: its k nearest other codes among those n,
/// ties broken by ascending index.
std::vector<IdList> knn_hamming(const BinaryCodeMatrix& codes, Index n, Index k);
/// Distance from each database row to its r-th nearest other row (1 <= r < N).
std::vector<double> kth_neighbor_distance(const RowMajor& db, Index r);
/// Distance from each query to its r-th nearest database row (1 <= r <= N).
std::vector<double> query_kth_neighbor_distance(const RowMajor& db, const RowMajor& queries,
                                                Index r);
/// Database positions within `radius` (inclusive) of each query, ascending.
std::vector<IdList> within_radius(const RowMajor& db, const RowMajor& queries, double radius);
}  // namespace serial

namespace omp {
std::vector<IdList> hamming_rank(const BinaryCodeMatrix& db, const BinaryCodeMatrix& queries);
std::vector<IdList> knn_hamming(const BinaryCodeMatrix& codes, Index n, Index k);
std::vector<double> kth_neighbor_distance(const RowMajor& db, Index r);
std::vector<double> query_kth_neighbor_distance(const RowMajor& db, const RowMajor& queries,
                                                Index r);
std::vector<IdList> within_radius(const RowMajor& db, const RowMajor& queries, double radius);
/// Single-query ranking with a counting sort over the c+1 possible distances.
IdList hamming_rank_one(const BinaryCodeMatrix& db, std::span<const std::uint64_t> query);
}  // namespace omp

}  // namespace thpi::kernels
