#include "thpi/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace thpi::kernels::serial {

std::vector<IdList> hamming_rank(const BinaryCodeMatrix& db, const BinaryCodeMatrix& queries) {
  std::vector<IdList> out;
  out.reserve(static_cast<std::size_t>(queries.rows()));
  for (Index q = 0; q < queries.rows(); ++q) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> scored;
    for (Index i = 0; i < db.rows(); ++i) {
      scored.emplace_back(hamming_distance(db.packed_row(i), queries.packed_row(q)),
                          static_cast<std::uint32_t>(i));
    }
    std::sort(scored.begin(), scored.end());
    IdList ids;
    for (const auto& [dist, id] : scored) ids.push_back(id);
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<IdList> knn_hamming(const BinaryCodeMatrix& codes, Index n, Index k) {
  std::vector<IdList> out;
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> scored;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      scored.emplace_back(hamming_distance(codes.packed_row(i), codes.packed_row(j)),
                          static_cast<std::uint32_t>(j));
    }
    std::sort(scored.begin(), scored.end());
    IdList ids;
    for (Index m = 0; m < k; ++m) ids.push_back(scored[static_cast<std::size_t>(m)].second);
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<double> kth_neighbor_distance(const RowMajor& db, Index r) {
  const Index n = db.rows();
  std::vector<double> out;
  for (Index i = 0; i < n; ++i) {
    std::vector<double> d;
    for (Index j = 0; j < n; ++j) {
      if (j != i) d.push_back(euclidean(db.row(i).data(), db.row(j).data(), db.cols()));
    }
    std::sort(d.begin(), d.end());
    out.push_back(d[static_cast<std::size_t>(r - 1)]);
  }
  return out;
}

std::vector<double> query_kth_neighbor_distance(const RowMajor& db, const RowMajor& queries,
                                                Index r) {
  std::vector<double> out;
  for (Index q = 0; q < queries.rows(); ++q) {
    std::vector<double> d;
    for (Index j = 0; j < db.rows(); ++j) {
      d.push_back(euclidean(queries.row(q).data(), db.row(j).data(), db.cols()));
    }
    std::sort(d.begin(), d.end());
    out.push_back(d[static_cast<std::size_t>(r - 1)]);
  }
  return out;
}

std::vector<IdList> within_radius(const RowMajor& db, const RowMajor& queries, double radius) {
  std::vector<IdList> out;
  for (Index q = 0; q < queries.rows(); ++q) {
    IdList ids;
    for (Index j = 0; j < db.rows(); ++j) {
      if (euclidean(queries.row(q).data(), db.row(j).data(), db.cols()) <= radius) {
        ids.push_back(static_cast<std::uint32_t>(j));
      }
    }
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace thpi::kernels::serial
