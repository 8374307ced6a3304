#include "thpi/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <utility>

namespace thpi::kernels::omp {

IdList hamming_rank_one(const BinaryCodeMatrix& db, std::span<const std::uint64_t> query) {
  const Index n = db.rows();
  const auto c = static_cast<std::size_t>(db.bits());
  std::vector<std::uint32_t> dist(static_cast<std::size_t>(n));
  std::vector<std::uint32_t> offset(c + 2, 0);
  for (Index i = 0; i < n; ++i) {
    const std::uint32_t d = hamming_distance(db.packed_row(i), query);
    dist[static_cast<std::size_t>(i)] = d;
    ++offset[d + 1];
  }
  for (std::size_t b = 1; b < offset.size(); ++b) offset[b] += offset[b - 1];
  IdList ranked(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    ranked[offset[dist[static_cast<std::size_t>(i)]]++] = static_cast<std::uint32_t>(i);
  }
  return ranked;
}

std::vector<IdList> hamming_rank(const BinaryCodeMatrix& db, const BinaryCodeMatrix& queries) {
  std::vector<IdList> out(static_cast<std::size_t>(queries.rows()));
#pragma omp parallel for schedule(dynamic, 4)
  for (Index q = 0; q < queries.rows(); ++q) {
    out[static_cast<std::size_t>(q)] = hamming_rank_one(db, queries.packed_row(q));
  }
  return out;
}

std::vector<IdList> knn_hamming(const BinaryCodeMatrix& codes, Index n, Index k) {
  const auto c = static_cast<std::size_t>(codes.bits());
  std::vector<IdList> out(static_cast<std::size_t>(n));
#pragma omp parallel
  {
    std::vector<std::uint32_t> dist(static_cast<std::size_t>(n));
    std::vector<std::uint32_t> hist(c + 1);
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < n; ++i) {
      std::fill(hist.begin(), hist.end(), 0);
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const std::uint32_t d = hamming_distance(codes.packed_row(i), codes.packed_row(j));
        dist[static_cast<std::size_t>(j)] = d;
        ++hist[d];
      }
      // Smallest distance `cut` whose cumulative count reaches k.
      std::uint32_t cut = 0;
      Index below = 0;
      while (below + static_cast<Index>(hist[cut]) < k) below += hist[cut++];
      Index at_cut = k - below;
      std::vector<std::pair<std::uint32_t, std::uint32_t>> picked;
      picked.reserve(static_cast<std::size_t>(k));
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const std::uint32_t d = dist[static_cast<std::size_t>(j)];
        if (d < cut || (d == cut && at_cut-- > 0)) {
          picked.emplace_back(d, static_cast<std::uint32_t>(j));
        }
      }
      std::sort(picked.begin(), picked.end());
      IdList ids;
      ids.reserve(picked.size());
      for (const auto& [d, j] : picked) ids.push_back(j);
      out[static_cast<std::size_t>(i)] = std::move(ids);
    }
  }
  return out;
}

std::vector<double> kth_neighbor_distance(const RowMajor& db, Index r) {
  const Index n = db.rows();
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel
  {
    std::vector<double> d(static_cast<std::size_t>(n - 1));
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < n; ++i) {
      std::size_t m = 0;
      for (Index j = 0; j < n; ++j) {
        if (j != i) d[m++] = euclidean(db.row(i).data(), db.row(j).data(), db.cols());
      }
      std::nth_element(d.begin(), d.begin() + (r - 1), d.end());
      out[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(r - 1)];
    }
  }
  return out;
}

std::vector<double> query_kth_neighbor_distance(const RowMajor& db, const RowMajor& queries,
                                                Index r) {
  std::vector<double> out(static_cast<std::size_t>(queries.rows()));
#pragma omp parallel
  {
    std::vector<double> d(static_cast<std::size_t>(db.rows()));
#pragma omp for schedule(dynamic, 16)
    for (Index q = 0; q < queries.rows(); ++q) {
      for (Index j = 0; j < db.rows(); ++j) {
        d[static_cast<std::size_t>(j)] =
            euclidean(queries.row(q).data(), db.row(j).data(), db.cols());
      }
      std::nth_element(d.begin(), d.begin() + (r - 1), d.end());
      out[static_cast<std::size_t>(q)] = d[static_cast<std::size_t>(r - 1)];
    }
  }
  return out;
}

std::vector<IdList> within_radius(const RowMajor& db, const RowMajor& queries, double radius) {
  std::vector<IdList> out(static_cast<std::size_t>(queries.rows()));
#pragma omp parallel for schedule(dynamic, 8)
  for (Index q = 0; q < queries.rows(); ++q) {
    IdList ids;
    for (Index j = 0; j < db.rows(); ++j) {
      if (euclidean(queries.row(q).data(), db.row(j).data(), db.cols()) <= radius) {
        ids.push_back(static_cast<std::uint32_t>(j));
      }
    }
    out[static_cast<std::size_t>(q)] = std::move(ids);
  }
  return out;
}

}  // namespace thpi::kernels::omp
