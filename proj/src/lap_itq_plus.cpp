#include "thpi/lap_itq_plus.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <ostream>
#include <random>

namespace thpi {

AdjacencyGraph::AdjacencyGraph(Index n, Index k, const std::vector<kernels::IdList>& directed)
    : adjacency_(static_cast<std::size_t>(n)), k_(k) {
  if (static_cast<Index>(directed.size()) != n) {
    throw DataError("adjacency graph: neighbor lists do not cover every node");
  }
  for (Index i = 0; i < n; ++i) {
    for (std::uint32_t j : directed[static_cast<std::size_t>(i)]) {
      if (static_cast<Index>(j) == i || static_cast<Index>(j) >= n) {
        throw DataError(fmt::format("adjacency graph: invalid neighbor {} of node {}", j, i));
      }
      adjacency_[static_cast<std::size_t>(i)].push_back(j);
      adjacency_[j].push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    edges_ += list.size();
  }
  edges_ /= 2;
}

bool AdjacencyGraph::has_edge(Index i, Index j) const {
  const auto& list = neighbors(i);
  return std::binary_search(list.begin(), list.end(), static_cast<std::uint32_t>(j));
}

void AdjacencyGraph::write_edge_list(std::ostream& out) const {
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (std::uint32_t j : adjacency_[i]) {
      if (i < j) out << i << ' ' << j << '\n';
    }
  }
}

AdjacencyGraph knn_hamming_graph(const BinaryCodeMatrix& codes, Index n, Index k,
                                 kernels::Exec exec) {
  if (n > codes.rows()) {
    throw DataError(fmt::format("knn graph over {} rows requested, codes have {}", n,
                                codes.rows()));
  }
  if (k < 1 || k >= n) {
    throw ConfigError(fmt::format("knn graph: k={} must satisfy 1 <= k < n={}", k, n));
  }
  auto directed = exec == kernels::Exec::serial ? kernels::serial::knn_hamming(codes, n, k)
                                                : kernels::omp::knn_hamming(codes, n, k);
  return AdjacencyGraph(n, k, directed);
}

LaplacianMatrix::LaplacianMatrix(Sparse l) : l_(std::move(l)) {
  const Index n = l_.rows();
  if (n == 0 || l_.squaredNorm() == 0.0) {
    lambda_max_ = 0.0;
    return;
  }
  // Fixed start vector so the estimate is reproducible.
  std::mt19937_64 rng(0x4c61704c);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = gauss(rng);
  x.normalize();
  double estimate = 0.0;
  for (int step = 0; step < 50; ++step) {
    Vector y = l_ * x;
    const double norm = y.norm();
    if (norm == 0.0) break;
    x = y / norm;
    estimate = x.dot(l_ * x);
  }
  lambda_max_ = estimate;
}

LaplacianMatrix laplacian(const AdjacencyGraph& graph) {
  const Index n = graph.nodes();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) + 2 * graph.edge_count());
  for (Index i = 0; i < n; ++i) {
    const auto& nb = graph.neighbors(i);
    if (!nb.empty()) triplets.emplace_back(i, i, static_cast<double>(nb.size()));
    for (std::uint32_t j : nb) triplets.emplace_back(i, static_cast<Index>(j), -1.0);
  }
  LaplacianMatrix::Sparse l(n, n);
  l.setFromTriplets(triplets.begin(), triplets.end());
  l.makeCompressed();
  return LaplacianMatrix(std::move(l));
}

BinaryCodeMatrix source_codes_offline(const DataMatrix& x_s, Index c, std::uint32_t iters,
                                      std::uint64_t seed, double rel_tol,
                                      std::vector<double>* loss_trace) {
  auto [centered, info] = zero_center(x_s);
  ItqOptions opts;
  opts.iters = iters;
  opts.seed = seed;
  opts.rel_tol = rel_tol;
  ItqResult fit = itq_train(centered, c, opts);
  if (loss_trace) *loss_trace = fit.loss_trace;
  return std::move(fit.codes);
}

double relaxed_b_objective(const Matrix& b, const Matrix& k, const LaplacianMatrix& l,
                           double lambda2) {
  double f = -2.0 * b.cwiseProduct(k.transpose()).sum();
  if (lambda2 != 0.0) f += lambda2 * l.trace_form(b);
  return f;
}

RelaxedBResult update_b_relaxed(const Matrix& k, const LaplacianMatrix& l, double lambda2,
                                std::uint32_t inner_iters) {
  if (!(lambda2 >= 0.0)) throw ConfigError("update_b_relaxed: lambda2 must be >= 0");
  if (k.cols() != l.size()) {
    throw DataError(fmt::format("update_b_relaxed: K has {} columns, Laplacian is {}x{}",
                                k.cols(), l.size(), l.size()));
  }
  if (!k.allFinite()) throw NumericalError("update_b_relaxed: K has non-finite entries");

  const Matrix kt = k.transpose();
  BinaryCodeMatrix start = sgn(kt);
  Matrix b = start.as_real();
  double f = relaxed_b_objective(b, k, l, lambda2);
  RelaxedBResult out{std::move(start), Matrix{}, {f}};
  const double lipschitz = 2.0 * lambda2 * l.lambda_max();
  if (lipschitz == 0.0) {
    // The linear term alone is minimized at the box corner sgn(K^T).
    out.relaxed = std::move(b);
    return out;
  }

  double step = 1.0 / (lipschitz + 1e-12);
  for (std::uint32_t it = 0; it < inner_iters; ++it) {
    const Matrix grad = -2.0 * kt + (2.0 * lambda2) * (l.matrix() * b);
    Matrix next;
    double f_next = 0.0;
    // The step is safe when lambda_max is accurate; halve it if the power
    // iteration estimate was too low.
    int halvings = 0;
    for (;; ++halvings) {
      next = (b - step * grad).cwiseMax(-1.0).cwiseMin(1.0);
      f_next = relaxed_b_objective(next, k, l, lambda2);
      if (f_next <= f || halvings == 30) break;
      step *= 0.5;
    }
    if (f_next > f) break;
    const bool stalled = next == b;
    b = std::move(next);
    f = f_next;
    out.objective.push_back(f);
    if (stalled) break;
  }
  out.codes = sgn(b);
  out.relaxed = std::move(b);
  return out;
}

Matrix lap_k_matrix(const Matrix& r, const Matrix& p, const Matrix& x_t, const Matrix& x_sc,
                    double lambda1) {
  return 0.5 * itq_plus_scores(r, p, x_t, x_sc, lambda1).transpose();
}

namespace {

double relaxed_full_objective(const Matrix& b, const Matrix& r, const Matrix& p, const Matrix& x_t,
                              const Matrix& x_sc, double lambda1, const LaplacianMatrix& l,
                              double lambda2) {
  const Matrix e = b - x_t * r;
  return 0.5 * e.squaredNorm() + lambda1 * (e - x_sc * p).squaredNorm() +
         lambda2 * l.trace_form(b);
}

}  // namespace

ItqPlusState lap_itq_plus_optimize(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                                   double lambda1, const LaplacianMatrix& l,
                                   const LapItqPlusOptions& options,
                                   std::vector<double>* full_trace,
                                   std::vector<double>* relaxed_trace) {
  check_transfer_shapes(x_t, x_sc, c, lambda1);
  if (!(options.lambda2 >= 0.0)) throw ConfigError("lambda2 must be >= 0");
  if (l.size() != x_t.rows()) {
    throw DataError(fmt::format("Laplacian is {}x{} but there are {} target rows", l.size(),
                                l.size(), x_t.rows()));
  }
  if (options.iters < 1) throw ConfigError("lapitq+: iters must be >= 1");
  const Matrix& xt = x_t.values();
  const Matrix& xs = x_sc.values();

  ItqPlusState state{BinaryCodeMatrix{}, random_orthonormal(xt.cols(), c, options.seed),
                     random_orthonormal(xs.cols(), c, options.seed + 1), lambda1, {}};
  double previous = std::numeric_limits<double>::infinity();
  for (std::uint32_t t = 0; t < options.iters; ++t) {
    const Matrix k = lap_k_matrix(state.r.values(), state.p.values(), xt, xs, lambda1);
    RelaxedBResult relaxed = update_b_relaxed(k, l, options.lambda2, options.inner_iters);
    state.b = options.rebalance ? update_b_balanced(relaxed.relaxed) : std::move(relaxed.codes);
    state.r = update_r(state.b, xt, xs, state.p.values(), lambda1, &state.r);
    state.p = update_p(state.b, xt, state.r.values(), xs, state.p);

    const double obj =
        itq_plus_objective(state.b, state.r.values(), state.p.values(), xt, xs, lambda1) +
        options.lambda2 * l.trace_form(state.b.as_real());
    state.objective_trace.push_back(obj);
    if (full_trace) full_trace->push_back(obj);
    if (relaxed_trace) {
      relaxed_trace->push_back(relaxed_full_objective(relaxed.relaxed, state.r.values(),
                                                      state.p.values(), xt, xs, lambda1, l,
                                                      options.lambda2));
    }
    if (obj == 0.0) break;
    if (options.rel_tol > 0 && std::isfinite(previous) &&
        std::abs(previous - obj) < options.rel_tol * std::abs(previous)) {
      break;
    }
    previous = obj;
  }
  return state;
}

LapItqPlusResult lap_itq_plus_train(const DataMatrix& x_t, const DataMatrix& x_sc,
                                    const DataMatrix& x_su, Index c, double lambda1,
                                    const LapItqPlusOptions& options) {
  check_transfer_shapes(x_t, x_sc, c, lambda1);
  if (!x_su.empty() && x_su.cols() != x_sc.cols()) {
    throw DataError(fmt::format("extra source rows have {} columns, correspondences have {}",
                                x_su.cols(), x_sc.cols()));
  }
  const Index n = x_t.rows();
  if (options.k_graph < 1 || options.k_graph >= n) {
    throw ConfigError(fmt::format("graph k={} must satisfy 1 <= k < n={}", options.k_graph, n));
  }

  const DataMatrix x_s = stack_rows(x_sc, x_su);
  const std::uint32_t source_iters = options.source_iters ? options.source_iters : options.iters;
  const BinaryCodeMatrix b_s =
      source_codes_offline(x_s, c, source_iters, options.seed, options.rel_tol);
  AdjacencyGraph graph = knn_hamming_graph(b_s, n, options.k_graph);
  const LaplacianMatrix l = laplacian(graph);

  auto [xt, info] = zero_center(x_t);
  auto [xs, source_info] = zero_center(x_sc);
  std::vector<double> full;
  std::vector<double> relaxed;
  ItqPlusState state = lap_itq_plus_optimize(xt, xs, c, lambda1, l, options, &full, &relaxed);

  HashModel model;
  model.method = Method::lap_itq_plus;
  model.centering = std::move(info);
  model.preprocessing = LinearProjection::identity(x_t.cols());
  model.rotation = state.r.values();
  model.bits = static_cast<std::uint32_t>(c);
  model.hyper = {lambda1, options.lambda2, static_cast<std::uint32_t>(options.k_graph),
                 options.iters, options.seed};
  return {std::move(model), std::move(state), std::move(full), std::move(relaxed),
          std::move(graph)};
}

}  // namespace thpi
