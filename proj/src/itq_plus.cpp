#include "thpi/itq_plus.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace thpi {

double itq_plus_objective(const BinaryCodeMatrix& b, const Matrix& r, const Matrix& p,
                          const Matrix& x_t, const Matrix& x_sc, double lambda1) {
  if (b.rows() != x_t.rows() || b.rows() != x_sc.rows() || x_t.cols() != r.rows() ||
      x_sc.cols() != p.rows() || r.cols() != b.bits() || p.cols() != b.bits()) {
    throw DataError(fmt::format(
        "itq_plus_objective: shapes B {}x{}, R {}x{}, P {}x{}, X_T {}x{}, X_SC {}x{} disagree",
        b.rows(), b.bits(), r.rows(), r.cols(), p.rows(), p.cols(), x_t.rows(), x_t.cols(),
        x_sc.rows(), x_sc.cols()));
  }
  const Matrix e = b.as_real() - x_t * r;
  return 0.5 * e.squaredNorm() + lambda1 * (e - x_sc * p).squaredNorm();
}

Matrix itq_plus_scores(const Matrix& r, const Matrix& p, const Matrix& x_t, const Matrix& x_sc,
                       double lambda1) {
  Matrix s = (1.0 + 2.0 * lambda1) * (x_t * r);
  if (lambda1 != 0.0) s += (2.0 * lambda1) * (x_sc * p);
  return s;
}

BinaryCodeMatrix update_b_balanced(const Matrix& scores) {
  const Index n = scores.rows();
  const Index c = scores.cols();
  if (n < 2) throw DataError("update_b_balanced: need at least 2 rows");
  const Index positives = (n + 1) / 2;
  BinaryCodeMatrix::SignMatrix signs =
      BinaryCodeMatrix::SignMatrix::Constant(n, c, std::int8_t{-1});
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index k = 0; k < c; ++k) {
    std::iota(order.begin(), order.end(), Index{0});
    auto col = scores.col(k);
    // Descending score, ascending row on ties: a strict total order.
    auto before = [&col](Index a, Index b) {
      return col(a) > col(b) || (col(a) == col(b) && a < b);
    };
    std::nth_element(order.begin(), order.begin() + positives, order.end(), before);
    for (Index i = 0; i < positives; ++i) signs(order[static_cast<std::size_t>(i)], k) = 1;
  }
  return BinaryCodeMatrix(std::move(signs));
}

OrthonormalMatrix update_r(const BinaryCodeMatrix& b, const Matrix& x_t, const Matrix& x_sc,
                           const Matrix& p, double lambda1, const OrthonormalMatrix* previous) {
  if (lambda1 < 0) throw ConfigError("update_r: lambda1 must be >= 0");
  if (b.rows() != x_t.rows() || b.rows() != x_sc.rows() || x_sc.cols() != p.rows() ||
      p.cols() != b.bits()) {
    throw DataError("update_r: shapes of B, X_T, X_SC and P disagree");
  }
  Matrix target = b.as_real();
  if (lambda1 != 0.0) target -= (2.0 * lambda1 / (1.0 + 2.0 * lambda1)) * (x_sc * p);
  return previous ? procrustes_step(target, x_t, *previous) : procrustes(target, x_t);
}

OrthonormalMatrix update_p(const BinaryCodeMatrix& b, const Matrix& x_t, const Matrix& r,
                           const Matrix& x_sc, const OrthonormalMatrix& previous) {
  if (x_sc.cols() < b.bits()) {
    throw ConfigError(fmt::format("update_p: d_S={} is smaller than c={}", x_sc.cols(), b.bits()));
  }
  if (b.rows() != x_t.rows() || b.rows() != x_sc.rows() || x_t.cols() != r.rows()) {
    throw DataError("update_p: shapes of B, X_T, R and X_SC disagree");
  }
  const Matrix e = b.as_real() - x_t * r;
  const double scale = e.norm() * x_sc.norm();
  const double cross = (x_sc.transpose() * e).norm();
  if (!(scale > 0.0) || cross <= 1e-13 * scale) {
    return previous;
  }
  return procrustes_step(e, x_sc, previous);
}

void check_transfer_shapes(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                           double lambda1) {
  x_t.require_nonempty("target training data");
  x_sc.require_nonempty("source correspondence data");
  if (x_t.rows() != x_sc.rows()) {
    throw DataError(fmt::format("target has {} rows but source correspondences have {}",
                                x_t.rows(), x_sc.rows()));
  }
  if (x_t.rows() < 2) throw DataError("transfer training needs at least 2 correspondences");
  if (c < 1 || c > std::min(x_t.cols(), x_sc.cols())) {
    throw ConfigError(fmt::format("{} bits exceed min(d_T={}, d_S={})", c, x_t.cols(),
                                  x_sc.cols()));
  }
  if (!(lambda1 >= 0.0)) throw ConfigError(fmt::format("lambda1 must be >= 0, got {}", lambda1));
}

ItqPlusState itq_plus_optimize(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                               double lambda1, const ItqPlusOptions& options) {
  check_transfer_shapes(x_t, x_sc, c, lambda1);
  if (options.iters < 1) throw ConfigError("itq+: iters must be >= 1");
  const Matrix& xt = x_t.values();
  const Matrix& xs = x_sc.values();

  ItqPlusState state{BinaryCodeMatrix{}, random_orthonormal(xt.cols(), c, options.seed),
                     random_orthonormal(xs.cols(), c, options.seed + 1), lambda1, {}};
  double previous = std::numeric_limits<double>::infinity();
  for (std::uint32_t t = 0; t < options.iters; ++t) {
    const Matrix scores = itq_plus_scores(state.r.values(), state.p.values(), xt, xs, lambda1);
    state.b = options.b_step == BStep::balanced ? update_b_balanced(scores) : sgn(scores);
    state.r = update_r(state.b, xt, xs, state.p.values(), lambda1, &state.r);
    state.p = update_p(state.b, xt, state.r.values(), xs, state.p);
    const double obj =
        itq_plus_objective(state.b, state.r.values(), state.p.values(), xt, xs, lambda1);
    state.objective_trace.push_back(obj);
    if (obj == 0.0) break;
    if (options.rel_tol > 0 && std::isfinite(previous) &&
        std::abs(previous - obj) < options.rel_tol * previous) {
      break;
    }
    previous = obj;
  }
  return state;
}

std::pair<HashModel, ItqPlusState> itq_plus_train(const DataMatrix& x_t, const DataMatrix& x_sc,
                                                  Index c, double lambda1,
                                                  const ItqPlusOptions& options) {
  check_transfer_shapes(x_t, x_sc, c, lambda1);
  auto [xt, info] = zero_center(x_t);
  auto [xs, source_info] = zero_center(x_sc);
  ItqPlusState state = itq_plus_optimize(xt, xs, c, lambda1, options);
  HashModel model;
  model.method = Method::itq_plus;
  model.centering = std::move(info);
  model.preprocessing = LinearProjection::identity(x_t.cols());
  model.rotation = state.r.values();
  model.bits = static_cast<std::uint32_t>(c);
  model.hyper = {lambda1, 0.0, 0, options.iters, options.seed};
  return {std::move(model), std::move(state)};
}

}  // namespace thpi
