#include "thpi/kernels.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace thpi {
namespace {

kernels::RowMajor points(Index n, Index d, std::uint64_t seed) {
  return test::gaussian(n, d, seed);
}

TEST(Kernels, RankingAgreesWithNaiveSortAndAcrossFlavours) {
  for (Index bits : {8, 32, 100}) {
    const BinaryCodeMatrix db = test::random_codes(200, bits, 1 + static_cast<std::uint64_t>(bits));
    const BinaryCodeMatrix q = test::random_codes(15, bits, 2 + static_cast<std::uint64_t>(bits));
    const auto serial = kernels::serial::hamming_rank(db, q);
    const auto par = kernels::omp::hamming_rank(db, q);
    ASSERT_EQ(serial, par);
    for (Index i = 0; i < q.rows(); ++i) {
      EXPECT_EQ(serial[static_cast<std::size_t>(i)], test::naive_rank(db, q, i));
    }
  }
}

TEST(Kernels, KnnAgreesAcrossFlavoursAndWithBruteForce) {
  const BinaryCodeMatrix codes = test::random_codes(120, 12, 3);  // many ties at 12 bits
  for (Index k : {1, 5, 17}) {
    const auto serial = kernels::serial::knn_hamming(codes, 100, k);
    const auto par = kernels::omp::knn_hamming(codes, 100, k);
    ASSERT_EQ(serial, par) << "k=" << k;
    for (Index i = 0; i < 100; ++i) {
      std::vector<std::pair<int, std::uint32_t>> all;
      for (Index j = 0; j < 100; ++j)
        if (j != i) all.emplace_back(test::naive_hamming(codes, i, codes, j), static_cast<std::uint32_t>(j));
      std::sort(all.begin(), all.end());
      kernels::IdList expected;
      for (Index t = 0; t < k; ++t) expected.push_back(all[static_cast<std::size_t>(t)].second);
      EXPECT_EQ(serial[static_cast<std::size_t>(i)], expected);
    }
  }
}

TEST(Kernels, NeighborDistancesAgreeExactly) {
  const kernels::RowMajor db = points(150, 7, 4);
  const kernels::RowMajor q = points(20, 7, 5);
  for (Index r : {1, 10, 149}) {
    EXPECT_EQ(kernels::serial::kth_neighbor_distance(db, r),
              kernels::omp::kth_neighbor_distance(db, r));
    EXPECT_EQ(kernels::serial::query_kth_neighbor_distance(db, q, r),
              kernels::omp::query_kth_neighbor_distance(db, q, r));
  }
  EXPECT_EQ(kernels::serial::within_radius(db, q, 3.0), kernels::omp::within_radius(db, q, 3.0));
}

TEST(Kernels, KthNeighborOnALine) {
  kernels::RowMajor db(4, 1);
  db << 0, 1, 3, 7;
  const auto d1 = kernels::serial::kth_neighbor_distance(db, 1);
  EXPECT_EQ(d1, (std::vector<double>{1, 1, 2, 4}));
  const auto d3 = kernels::omp::kth_neighbor_distance(db, 3);
  EXPECT_EQ(d3, (std::vector<double>{7, 6, 4, 7}));
}

TEST(Kernels, EuclideanFixedOrder) {
  const double a[3] = {1.0, 2.0, 2.0};
  const double b[3] = {0.0, 0.0, 0.0};
  EXPECT_EQ(kernels::euclidean(a, b, 3), 3.0);
}

}  // namespace
}  // namespace thpi
