#include "thpi/error.hpp"
#include "thpi/lap_itq_plus.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace thpi {
namespace {

AdjacencyGraph random_graph(Index n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(density);
  std::vector<kernels::IdList> lists(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (edge(rng)) lists[static_cast<std::size_t>(i)].push_back(static_cast<std::uint32_t>(j));
  return AdjacencyGraph(n, 1, lists);
}

double edge_sum(const AdjacencyGraph& g, const Vector& x) {
  double s = 0.0;
  for (Index i = 0; i < g.nodes(); ++i)
    for (std::uint32_t j : g.neighbors(i)) s += (x(i) - x(j)) * (x(i) - x(j));
  return 0.5 * s;  // each undirected edge appears in both orientations
}

TEST(KnnHammingGraph, ThreeCodesExample) {
  BinaryCodeMatrix::SignMatrix s(3, 4);
  s << 1, 1, 1, 1,
       1, 1, 1, 1,
       -1, -1, 1, 1;
  const AdjacencyGraph g = knn_hamming_graph(BinaryCodeMatrix(s), 3, 1);
  // Pairwise table: d(0,1)=0, d(0,2)=2, d(1,2)=2. Node 2 ties between 0 and 1 and picks 0.
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(0, 2));
  EXPECT_FALSE(g.has_edge(1, 2));
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(KnnHammingGraph, TotalTieLinksToSmallestOtherIndex) {
  const BinaryCodeMatrix same = sgn(Matrix::Ones(5, 8));
  const AdjacencyGraph g = knn_hamming_graph(same, 5, 1);
  EXPECT_EQ(g.neighbors(0), (kernels::IdList{1, 2, 3, 4}));
  for (Index i = 1; i < 5; ++i) EXPECT_TRUE(g.has_edge(i, 0));
  EXPECT_FALSE(g.has_edge(1, 2));
}

TEST(KnnHammingGraph, SymmetricNoSelfLoopsMinDegreeAndColumnInvariant) {
  const BinaryCodeMatrix codes = test::random_codes(80, 16, 3);
  const AdjacencyGraph g = knn_hamming_graph(codes, 60, 4);
  for (Index i = 0; i < g.nodes(); ++i) {
    EXPECT_FALSE(g.has_edge(i, i));
    EXPECT_GE(static_cast<Index>(g.neighbors(i).size()), 4);
    for (std::uint32_t j : g.neighbors(i)) EXPECT_TRUE(g.has_edge(j, i));
  }
  // Reversing the bit order leaves every Hamming distance unchanged.
  const BinaryCodeMatrix::SignMatrix flipped = codes.signs().rowwise().reverse();
  const AdjacencyGraph h = knn_hamming_graph(BinaryCodeMatrix(flipped), 60, 4);
  for (Index i = 0; i < g.nodes(); ++i) EXPECT_EQ(g.neighbors(i), h.neighbors(i));
  EXPECT_THROW(knn_hamming_graph(codes, 60, 60), ConfigError);
  EXPECT_THROW(knn_hamming_graph(codes, 60, 0), ConfigError);
  EXPECT_THROW(knn_hamming_graph(codes, 81, 3), DataError);
}

TEST(KnnHammingGraph, EdgeListDump) {
  std::vector<kernels::IdList> lists{{1}, {2}, {}};
  std::ostringstream out;
  AdjacencyGraph(3, 1, lists).write_edge_list(out);
  EXPECT_EQ(out.str(), "0 1\n1 2\n");
}

TEST(Laplacian, PathGraph) {
  std::vector<kernels::IdList> lists{{1}, {2}, {}};
  const LaplacianMatrix l = laplacian(AdjacencyGraph(3, 1, lists));
  Matrix expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_EQ(Matrix(l.matrix()), expected);
  EXPECT_NEAR(l.lambda_max(), 3.0, 1e-6);
}

TEST(Laplacian, EmptyGraphIsZero) {
  const LaplacianMatrix l = laplacian(AdjacencyGraph(4, 1, std::vector<kernels::IdList>(4)));
  EXPECT_TRUE(Matrix(l.matrix()).isZero(0.0));
  EXPECT_EQ(l.lambda_max(), 0.0);
}

TEST(Laplacian, EdgeSumIdentityRowSumsAndPsd) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AdjacencyGraph g = random_graph(30, 0.15, seed);
    const LaplacianMatrix l = laplacian(g);
    const Matrix dense(l.matrix());
    EXPECT_LT(dense.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
    for (int probe = 0; probe < 5; ++probe) {
      const Vector x = test::gaussian(30, 1, seed * 100 + static_cast<std::uint64_t>(probe)).col(0);
      EXPECT_NEAR(l.quadratic_form(x), edge_sum(g, x), 1e-9);
      EXPECT_GE(l.quadratic_form(x), -1e-9);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(dense);
    EXPECT_NEAR(l.lambda_max(), eig.eigenvalues().maxCoeff(),
                0.05 * eig.eigenvalues().maxCoeff() + 1e-9);
  }
}

TEST(UpdateBRelaxed, LambdaZeroAndZeroLaplacianGiveSignOfK) {
  const Matrix k = test::gaussian(3, 12, 5);
  const LaplacianMatrix zero = laplacian(AdjacencyGraph(12, 1, std::vector<kernels::IdList>(12)));
  const LaplacianMatrix l = laplacian(random_graph(12, 0.3, 6));
  EXPECT_EQ(update_b_relaxed(k, l, 0.0).codes, sgn(k.transpose()));
  EXPECT_EQ(update_b_relaxed(k, zero, 5.0).codes, sgn(k.transpose()));
}

TEST(UpdateBRelaxed, SmallInstanceAgainstEnumeration) {
  std::vector<kernels::IdList> lists{{1}, {2}, {}, {}};  // 2-edge graph on 4 nodes
  const LaplacianMatrix l = laplacian(AdjacencyGraph(4, 1, lists));
  Matrix k(1, 4);
  k << 0.9, -0.2, 0.4, -1.1;
  const double lambda2 = 0.3;
  const RelaxedBResult r = update_b_relaxed(k, l, lambda2, 200);
  for (std::size_t t = 1; t < r.objective.size(); ++t) {
    EXPECT_LE(r.objective[t], r.objective[t - 1] + 1e-9);
  }
  const double f_start = relaxed_b_objective(sgn(k.transpose()).as_real(), k, l, lambda2);
  EXPECT_LE(r.objective.back(), f_start + 1e-12);
  EXPECT_TRUE((r.relaxed.array().abs() <= 1.0).all());
  // Binarized result against all 16 sign vectors.
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 16; ++mask) {
    Matrix b(4, 1);
    for (int i = 0; i < 4; ++i) b(i, 0) = (mask >> i) & 1 ? 1.0 : -1.0;
    best = std::min(best, relaxed_b_objective(b, k, l, lambda2));
  }
  EXPECT_LE(r.objective.back(), best + 1e-12);  // relaxation lower-bounds the binary optimum
  EXPECT_GE(relaxed_b_objective(r.codes.as_real(), k, l, lambda2), best - 1e-12);
}

TEST(UpdateBRelaxed, InnerObjectiveMonotoneOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LaplacianMatrix l = laplacian(random_graph(40, 0.2, seed));
    const Matrix k = test::gaussian(6, 40, seed + 50);
    for (double lambda2 : {0.01, 0.5, 5.0}) {
      const RelaxedBResult r = update_b_relaxed(k, l, lambda2, 100);
      for (std::size_t t = 1; t < r.objective.size(); ++t) {
        ASSERT_LE(r.objective[t], r.objective[t - 1] + 1e-9);
      }
    }
  }
  const LaplacianMatrix l = laplacian(random_graph(5, 0.5, 1));
  Matrix bad = Matrix::Zero(1, 5);
  bad(0, 2) = std::nan("");
  EXPECT_THROW(update_b_relaxed(bad, l, 0.1), NumericalError);
  EXPECT_THROW(update_b_relaxed(Matrix::Zero(1, 4), l, 0.1), DataError);
  EXPECT_THROW(update_b_relaxed(Matrix::Zero(1, 5), l, -0.1), ConfigError);
}

TEST(SourceCodesOffline, NoExtraRowsMatchesItqAndLossMonotone) {
  const DataMatrix xs = test::gaussian_data(50, 6, 7, 2.0);
  std::vector<double> trace;
  const BinaryCodeMatrix b = source_codes_offline(xs, 4, 30, 3, 1e-6, &trace);
  ItqOptions opts;
  opts.iters = 30;
  opts.seed = 3;
  ItqResult fit;
  itq_fit(xs, 4, opts, &fit);
  EXPECT_EQ(b, fit.codes);
  for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-9);
  EXPECT_EQ(source_codes_offline(xs, 4, 30, 3), b);
}

TEST(LapItqPlus, LambdaTwoZeroMatchesItqPlusWithSignStep) {
  const DataMatrix xt = test::gaussian_data(60, 8, 20);
  const DataMatrix xs = test::gaussian_data(60, 7, 21);
  const DataMatrix xu = test::gaussian_data(40, 7, 22);
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    LapItqPlusOptions lap;
    lap.seed = seed;
    lap.iters = 30;
    lap.lambda2 = 0.0;
    const LapItqPlusResult r = lap_itq_plus_train(xt, xs, xu, 6, 0.2, lap);
    ItqPlusOptions plus;
    plus.seed = seed;
    plus.iters = 30;
    plus.b_step = BStep::sign;
    const auto [model, state] = itq_plus_train(xt, xs, 6, 0.2, plus);
    EXPECT_EQ(r.state.b, state.b);
    EXPECT_EQ(r.model.rotation, model.rotation);
  }
}

TEST(LapItqPlus, BothLambdasZeroMatchSignItq) {
  const DataMatrix xt = test::gaussian_data(40, 6, 30);
  const DataMatrix xs = test::gaussian_data(40, 6, 31);
  LapItqPlusOptions lap;
  lap.iters = 25;
  lap.lambda2 = 0.0;
  const LapItqPlusResult r = lap_itq_plus_train(xt, xs, DataMatrix(), 4, 0.0, lap);
  ItqOptions opts;
  opts.iters = 25;
  const HashModel itq = itq_fit(xt, 4, opts);
  EXPECT_LT((r.model.rotation - itq.rotation).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LapItqPlus, SameClusterTargetsCloserInHamming) {
  // Two well separated clusters shared by both views.
  double same = 0.0, cross = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const Index n = 40;
    Matrix xt(n, 6), xs(n, 5);
    std::vector<int> label(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      label[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
      const double c = i % 2 ? 4.0 : -4.0;
      for (Index j = 0; j < 6; ++j) xt(i, j) = (j < 2 ? c : 0.0) + g(rng);
      for (Index j = 0; j < 5; ++j) xs(i, j) = (j == 0 ? c : 0.0) + 0.3 * g(rng);
    }
    LapItqPlusOptions opts;
    opts.seed = seed;
    opts.iters = 30;
    opts.lambda2 = 0.1;
    const LapItqPlusResult r =
        lap_itq_plus_train(DataMatrix(xt), DataMatrix(xs), DataMatrix(), 4, 0.1, opts);
    double s = 0, x = 0;
    int ns = 0, nx = 0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double d = hamming_distance(r.state.b.packed_row(i), r.state.b.packed_row(j));
        if (label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)]) {
          s += d;
          ++ns;
        } else {
          x += d;
          ++nx;
        }
      }
    }
    same += s / ns;
    cross += x / nx;
  }
  EXPECT_LT(same, cross);
}

TEST(LapItqPlus, ObjectiveTracesAndDeterminism) {
  const DataMatrix xt = test::gaussian_data(100, 10, 40);
  const DataMatrix xs = test::gaussian_data(100, 8, 41);
  const DataMatrix xu = test::gaussian_data(100, 8, 42);
  LapItqPlusOptions opts;
  opts.iters = 40;
  opts.rel_tol = 0.0;
  const LapItqPlusResult a = lap_itq_plus_train(xt, xs, xu, 6, 0.1, opts);
  const LapItqPlusResult b = lap_itq_plus_train(xt, xs, xu, 6, 0.1, opts);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.full_objective_trace, b.full_objective_trace);
  ASSERT_EQ(a.relaxed_objective_trace.size(), a.full_objective_trace.size());
  // The relaxed B-step drops the ||B||^2 term, so neither trace is monotone in
  // general; both settle once the codes stop changing.
  const auto& rt = a.relaxed_objective_trace;
  ASSERT_GE(rt.size(), 3u);
  EXPECT_NEAR(rt.back(), rt[rt.size() - 2], 1e-6 * rt.back());
  for (double v : rt) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(a.model.method, Method::lap_itq_plus);
  EXPECT_EQ(a.model.hyper.k_graph, 5u);
}

TEST(LapItqPlus, Errors) {
  const DataMatrix xt = test::gaussian_data(6, 4, 1);
  const DataMatrix xs = test::gaussian_data(6, 4, 2);
  LapItqPlusOptions opts;
  opts.k_graph = 6;
  EXPECT_THROW(lap_itq_plus_train(xt, xs, DataMatrix(), 2, 0.1, opts), ConfigError);
  opts.k_graph = 2;
  EXPECT_THROW(lap_itq_plus_train(xt, xs, test::gaussian_data(3, 5, 3), 2, 0.1, opts), DataError);
  opts.lambda2 = -1.0;
  EXPECT_THROW(lap_itq_plus_train(xt, xs, DataMatrix(), 2, 0.1, opts), ConfigError);
}

}  // namespace
}  // namespace thpi
