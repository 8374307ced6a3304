#pragma once

#include "thpi/codes.hpp"
#include "thpi/matrix.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace thpi {

enum class ProjectionKind : std::uint8_t { identity = 0, pca = 1, cca_left = 2, cca_right = 3, lsh = 4 };

std::string_view to_string(ProjectionKind kind);

/// Linear map applied to centered data before the rotation: x -> x * matrix.
struct LinearProjection {
  Matrix matrix;  // d_in x d_out
  ProjectionKind kind = ProjectionKind::identity;

  Index d_in() const noexcept { return matrix.rows(); }
  Index d_out() const noexcept { return matrix.cols(); }

  static LinearProjection identity(Index d);

  /// d_out <= d_in; orthonormal columns (1e-8) for PCA projections.
  void validate() const;
};

enum class Method : std::uint8_t { itq = 0, itq_plus = 1, lap_itq_plus = 2, lsh = 3, cca_itq = 4 };

/// Canonical tags: "itq", "itq+", "lapitq+", "lsh", "cca-itq".
std::string_view to_string(Method method);
/// Throws ConfigError for unknown tags.
Method parse_method(std::string_view tag);

struct Hyperparams {
  double lambda1 = 0.01;
  double lambda2 = 0.01;
  std::uint32_t k_graph = 5;
  std::uint32_t iters = 150;
  std::uint64_t seed = 0;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Everything needed to encode a new point:
/// code(x) = sgn(((x - mean) * preprocessing) * rotation).
///
/// The rotation has orthonormal columns for every method except lsh, where it
/// holds the raw Gaussian projection.
struct HashModel {
  Method method = Method::itq;
  CenteringInfo centering;
  LinearProjection preprocessing;
  Matrix rotation;
  std::uint32_t bits = 0;
  Hyperparams hyper;

  Index input_dim() const noexcept { return preprocessing.d_in(); }

  /// Throws DataError when shapes or invariants disagree.
  void validate() const;
};

bool operator==(const HashModel& a, const HashModel& b);

/// Encodes raw (uncentered) rows with a trained model.
BinaryCodeMatrix encode(const HashModel& model, const DataMatrix& x);

/// Real-valued projections before the sign, ((x - mean) * P) * R.
Matrix embed(const HashModel& model, const DataMatrix& x);

}  // namespace thpi
