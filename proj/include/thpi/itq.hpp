#pragma once

#include "thpi/codes.hpp"
#include "thpi/matrix.hpp"
#include "thpi/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace thpi {

/// d x c real matrix with orthonormal columns (R^T R = I within 1e-8).
class OrthonormalMatrix {
 public:
  OrthonormalMatrix() = default;  // 0 x 0
  explicit OrthonormalMatrix(Matrix values, double tolerance = 1e-8);

  static OrthonormalMatrix identity(Index d, Index c);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

/// Minimizer of ||X R - A||_F over R^T R = I.
///
/// Starts from R = U V^T of the thin SVD X^T A = U S V^T (each left singular
/// vector signed so its largest-magnitude component is positive). That is
/// exact when d == c; for d > c the ||X R||^2 term depends on R, so the
/// result is refined by majorization-minimization from U V^T and from the
/// polar factor of the unconstrained least-squares solution, keeping the best.
OrthonormalMatrix procrustes(const Matrix& target, const Matrix& x);

/// Procrustes step for alternating trainers: the better of U V^T and
/// `previous`, refined by at most `refine_steps` majorization steps. The
/// objective never exceeds its value at `previous`.
OrthonormalMatrix procrustes_step(const Matrix& target, const Matrix& x,
                                  const OrthonormalMatrix& previous,
                                  std::uint32_t refine_steps = 25);

/// ||B - X R||_F^2.
double quantization_loss(const BinaryCodeMatrix& b, const Matrix& x, const Matrix& r);

/// QR orthonormalization of a seeded standard Gaussian d x c matrix.
OrthonormalMatrix random_orthonormal(Index d, Index c, std::uint64_t seed);

enum class BStep {
  sign,      // B = sgn(X R)
  balanced,  // per-column sorting with ceil(n/2) positives
};

struct ItqOptions {
  std::uint32_t iters = 150;
  std::uint64_t seed = 0;
  /// Stop once the relative loss change drops below this; 0 disables.
  double rel_tol = 1e-6;
  BStep b_step = BStep::sign;
  std::optional<OrthonormalMatrix> initial_rotation;
};

struct ItqResult {
  BinaryCodeMatrix codes;  // B-step applied to the final rotation
  OrthonormalMatrix rotation;
  std::vector<double> loss_trace;  // one entry per completed iteration
};

/// Alternates B <- sgn(X R) and R <- procrustes(B, X) on centered data.
ItqResult itq_train(const DataMatrix& x, Index c, const ItqOptions& options = {});

/// Centers X, trains ITQ and packages the encoder.
HashModel itq_fit(const DataMatrix& x, Index c, const ItqOptions& options = {},
                  ItqResult* result = nullptr);

}  // namespace thpi
