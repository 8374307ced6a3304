#pragma once

#include "thpi/codes.hpp"
#include "thpi/itq_plus.hpp"
#include "thpi/kernels.hpp"

#include <Eigen/SparseCore>

#include <iosfwd>
#include <vector>

namespace thpi {

/// Symmetric 0/1 kNN graph over n nodes, no self-loops.
class AdjacencyGraph {
 public:
  /// Builds from directed neighbor lists by union symmetrization.
  AdjacencyGraph(Index n, Index k, const std::vector<kernels::IdList>& directed);

  Index nodes() const noexcept { return static_cast<Index>(adjacency_.size()); }
  Index k() const noexcept { return k_; }
  /// Sorted neighbor ids of node i.
  const kernels::IdList& neighbors(Index i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  std::size_t edge_count() const noexcept { return edges_; }
  bool has_edge(Index i, Index j) const;

  /// One "i j" line per undirected edge with i < j.
  void write_edge_list(std::ostream& out) const;

 private:
  std::vector<kernels::IdList> adjacency_;
  Index k_ = 0;
  std::size_t edges_ = 0;
};

/// kNN graph by Hamming distance over the first n rows of `codes`.
AdjacencyGraph knn_hamming_graph(const BinaryCodeMatrix& codes, Index n, Index k,
                                 kernels::Exec exec = kernels::Exec::parallel);

/// L = D - W, stored sparse, with a power-iteration estimate of its largest
/// eigenvalue (50 steps).
class LaplacianMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  explicit LaplacianMatrix(Sparse l);

  Index size() const noexcept { return l_.rows(); }
  const Sparse& matrix() const noexcept { return l_; }
  double lambda_max() const noexcept { return lambda_max_; }

  double quadratic_form(const Vector& x) const { return x.dot(l_ * x); }
  /// tr(B^T L B) for an n x c matrix.
  double trace_form(const Matrix& b) const { return (b.transpose() * (l_ * b)).trace(); }

 private:
  Sparse l_;
  double lambda_max_ = 0.0;
};

LaplacianMatrix laplacian(const AdjacencyGraph& graph);

/// Plain ITQ codes for all (n + n_S) centered source rows.
BinaryCodeMatrix source_codes_offline(const DataMatrix& x_s, Index c, std::uint32_t iters,
                                      std::uint64_t seed, double rel_tol = 1e-6,
                                      std::vector<double>* loss_trace = nullptr);

/// f(B) = -2 tr(B K) + lambda2 tr(B^T L B) for B n x c, K c x n.
double relaxed_b_objective(const Matrix& b, const Matrix& k, const LaplacianMatrix& l,
                           double lambda2);

struct RelaxedBResult {
  BinaryCodeMatrix codes;          // sgn of the relaxed solution
  Matrix relaxed;                  // n x c, inside [-1, 1]
  std::vector<double> objective;   // f after each inner step (first entry: start point)
};

/// Minimizes f over the box [-1, 1]^{n x c} by projected gradient descent
/// from sgn(K^T) with step 1/(2 lambda2 lambda_max + 1e-12), then binarizes.
RelaxedBResult update_b_relaxed(const Matrix& k, const LaplacianMatrix& l, double lambda2,
                                std::uint32_t inner_iters = 100);

struct LapItqPlusOptions {
  std::uint32_t iters = 150;
  std::uint64_t seed = 0;
  double rel_tol = 1e-6;
  double lambda2 = 0.01;
  Index k_graph = 5;
  std::uint32_t inner_iters = 100;
  /// Post-hoc per-column re-balancing of the binarized codes.
  bool rebalance = false;
  /// Iterations of the offline source-side ITQ (defaults to `iters`).
  std::uint32_t source_iters = 0;
};

struct LapItqPlusResult {
  HashModel model;
  ItqPlusState state;
  /// ITQ+ objective + lambda2 tr(B^T L B) at the binary codes, per sweep.
  std::vector<double> full_objective_trace;
  /// Same objective evaluated at the relaxed B-step solution, per sweep.
  std::vector<double> relaxed_objective_trace;
  AdjacencyGraph graph;
};

/// The B-step matrix K = (1/2 + lambda1) R^T X_T^T + lambda1 P^T X_SC^T (c x n),
/// so that -2 tr(B K) is the B-dependent part of the objective at binary B.
Matrix lap_k_matrix(const Matrix& r, const Matrix& p, const Matrix& x_t, const Matrix& x_sc,
                    double lambda1);

/// Alternating optimization on centered inputs with the graph prebuilt.
ItqPlusState lap_itq_plus_optimize(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                                   double lambda1, const LaplacianMatrix& l,
                                   const LapItqPlusOptions& options,
                                   std::vector<double>* full_trace = nullptr,
                                   std::vector<double>* relaxed_trace = nullptr);

/// Source ITQ on [X_SC; X_SU], kNN graph over the first n source codes,
/// Laplacian, then alternating optimization with the relaxed B-step.
LapItqPlusResult lap_itq_plus_train(const DataMatrix& x_t, const DataMatrix& x_sc,
                                    const DataMatrix& x_su, Index c, double lambda1,
                                    const LapItqPlusOptions& options = {});

}  // namespace thpi
