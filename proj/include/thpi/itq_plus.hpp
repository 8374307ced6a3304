#pragma once

#include "thpi/codes.hpp"
#include "thpi/itq.hpp"
#include "thpi/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace thpi {

/// Trainer state after ITQ+ (or LapITQ+) alternating optimization.
struct ItqPlusState {
  BinaryCodeMatrix b;  // n x c
  OrthonormalMatrix r; // d_T x c
  OrthonormalMatrix p; // d_S x c, the slack map g(X_SC) = X_SC P
  double lambda1 = 0.0;
  std::vector<double> objective_trace;  // one value per full sweep
};

/// (1/2)||E||^2 + lambda1 ||E - X_SC P||^2 with E = B - X_T R.
double itq_plus_objective(const BinaryCodeMatrix& b, const Matrix& r, const Matrix& p,
                          const Matrix& x_t, const Matrix& x_sc, double lambda1);

/// Score matrix S (n x c) whose balanced sign pattern maximizes tr(B^T S),
/// i.e. minimizes the objective over B with R and P fixed:
/// S = (1 + 2 lambda1) X_T R + 2 lambda1 X_SC P.
Matrix itq_plus_scores(const Matrix& r, const Matrix& p, const Matrix& x_t, const Matrix& x_sc,
                       double lambda1);

/// Balanced B-step: per column the ceil(n/2) largest scores get +1, ties by
/// ascending row index.
BinaryCodeMatrix update_b_balanced(const Matrix& scores);

/// R-step: procrustes(B - w X_SC P, X_T) with w = 2 lambda1 / (1 + 2 lambda1).
/// With `previous` the warm-started procrustes_step is used instead.
OrthonormalMatrix update_r(const BinaryCodeMatrix& b, const Matrix& x_t, const Matrix& x_sc,
                           const Matrix& p, double lambda1,
                           const OrthonormalMatrix* previous = nullptr);

/// P-step: procrustes_step(B - X_T R, X_SC, previous). When E or X_SC is
/// numerically zero the previous P is returned unchanged.
OrthonormalMatrix update_p(const BinaryCodeMatrix& b, const Matrix& x_t, const Matrix& r,
                           const Matrix& x_sc, const OrthonormalMatrix& previous);

struct ItqPlusOptions {
  std::uint32_t iters = 150;
  std::uint64_t seed = 0;
  double rel_tol = 1e-6;
  BStep b_step = BStep::balanced;
};

/// Alternating optimization on centered inputs: B, then R, then P per sweep.
/// R and P start from random_orthonormal(seed) and random_orthonormal(seed + 1).
ItqPlusState itq_plus_optimize(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                               double lambda1, const ItqPlusOptions& options = {});

/// Centers both views, runs itq_plus_optimize and packages the target encoder.
std::pair<HashModel, ItqPlusState> itq_plus_train(const DataMatrix& x_t, const DataMatrix& x_sc,
                                                  Index c, double lambda1,
                                                  const ItqPlusOptions& options = {});

/// Shared precondition check for the transfer trainers.
void check_transfer_shapes(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                           double lambda1);

}  // namespace thpi
