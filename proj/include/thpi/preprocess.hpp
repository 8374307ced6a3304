#pragma once

#include "thpi/matrix.hpp"
#include "thpi/model.hpp"

#include <optional>
#include <vector>

namespace thpi {

/// PCA on centered data keeping the smallest number of leading components
/// whose eigenvalue share reaches `energy`. Covariance uses divisor n.
/// Columns are eigenvalue-descending, each with its first nonzero component
/// positive.
LinearProjection pca_fit(const DataMatrix& x, double energy);

/// PCA keeping exactly `components` leading directions.
LinearProjection pca_fit_components(const DataMatrix& x, Index components);

/// Eigenvalues of the (divisor-n) covariance, descending.
std::vector<double> covariance_spectrum(const DataMatrix& x);

struct CcaResult {
  LinearProjection left;
  LinearProjection right;
  std::vector<double> correlations;  // descending
};

/// Ridge used when none is given: 1e-6 * trace(C) / d for autocovariance C.
double default_cca_ridge(const DataMatrix& x);

/// Top-c canonical directions of two centered, row-paired views.
///
/// Solves the generalized eigenproblem through whitening:
/// T = Caa^{-1/2} Cab Cbb^{-1/2} = U S V^T, left = Caa^{-1/2} U, right = Cbb^{-1/2} V.
/// With no ridge given, each side gets default_cca_ridge(). Signs are fixed
/// so that the largest-magnitude entry of each stacked pair [u; v] is
/// positive, which keeps the result symmetric under swapping the views.
CcaResult cca_fit(const DataMatrix& a, const DataMatrix& b, Index c,
                  std::optional<double> ridge = std::nullopt);

/// X * proj.matrix.
DataMatrix project(const DataMatrix& x, const LinearProjection& proj);

}  // namespace thpi
