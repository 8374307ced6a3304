#include "thpi/preprocess.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace thpi {
namespace {

constexpr double kSignEps = 1e-12;

// Flip columns so the first component above kSignEps in magnitude is positive.
void fix_first_nonzero_positive(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    const double scale = v.col(j).cwiseAbs().maxCoeff();
    for (Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > kSignEps * std::max(scale, 1.0)) {
        if (v(i, j) < 0) v.col(j) = -v.col(j);
        break;
      }
    }
  }
}

Matrix covariance(const Matrix& x) {
  return (x.transpose() * x) / static_cast<double>(x.rows());
}

struct SortedEigen {
  Vector values;   // descending
  Matrix vectors;  // matching columns
};

SortedEigen descending_eigen(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition failed");
  }
  const Index d = sym.rows();
  SortedEigen out{Vector(d), Matrix(d, d)};
  for (Index j = 0; j < d; ++j) {
    out.values(j) = es.eigenvalues()(d - 1 - j);
    out.vectors.col(j) = es.eigenvectors().col(d - 1 - j);
  }
  return out;
}

Matrix inverse_sqrt(const Matrix& sym, std::string_view side) {
  const SortedEigen e = descending_eigen(sym);
  const double top = e.values(0);
  const double floor = std::max(top, 1.0) * 1e-13;
  for (Index i = 0; i < e.values.size(); ++i) {
    if (!(e.values(i) > floor)) {
      throw NumericalError(fmt::format("cca: {} autocovariance is singular (eigenvalue {}); use "
                                       "a positive ridge",
                                       side, e.values(i)));
    }
  }
  Vector inv = e.values.array().rsqrt();
  return e.vectors * inv.asDiagonal() * e.vectors.transpose();
}

SortedEigen pca_eigen(const DataMatrix& x) {
  x.require_nonempty("pca_fit");
  SortedEigen e = descending_eigen(covariance(x.values()));
  // Tiny negative eigenvalues are rounding noise of a PSD matrix.
  e.values = e.values.cwiseMax(0.0);
  if (!(e.values(0) > 0.0)) {
    throw NumericalError("pca_fit: input has rank 0 (all-zero centered data)");
  }
  return e;
}

LinearProjection pca_from(const SortedEigen& e, Index k) {
  Matrix v = e.vectors.leftCols(k);
  fix_first_nonzero_positive(v);
  return {std::move(v), ProjectionKind::pca};
}

}  // namespace

std::vector<double> covariance_spectrum(const DataMatrix& x) {
  const SortedEigen e = pca_eigen(x);
  return {e.values.data(), e.values.data() + e.values.size()};
}

LinearProjection pca_fit(const DataMatrix& x, double energy) {
  if (!(energy > 0.0 && energy <= 1.0)) {
    throw ConfigError(fmt::format("pca energy must be in (0, 1], got {}", energy));
  }
  const SortedEigen e = pca_eigen(x);
  const double total = e.values.sum();
  double running = 0.0;
  Index k = e.values.size();
  for (Index i = 0; i < e.values.size(); ++i) {
    running += e.values(i);
    if (running >= energy * total - 1e-12 * total) {
      k = i + 1;
      break;
    }
  }
  return pca_from(e, k);
}

LinearProjection pca_fit_components(const DataMatrix& x, Index components) {
  if (components < 1 || components > x.cols()) {
    throw ConfigError(fmt::format("pca: {} components requested from {} columns", components,
                                  x.cols()));
  }
  return pca_from(pca_eigen(x), components);
}

double default_cca_ridge(const DataMatrix& x) {
  return 1e-6 * covariance(x.values()).trace() / static_cast<double>(x.cols());
}

CcaResult cca_fit(const DataMatrix& a, const DataMatrix& b, Index c, std::optional<double> ridge) {
  a.require_nonempty("cca_fit left view");
  b.require_nonempty("cca_fit right view");
  if (a.rows() != b.rows()) {
    throw DataError(fmt::format("cca_fit: views have {} and {} rows", a.rows(), b.rows()));
  }
  if (c < 1 || c > std::min(a.cols(), b.cols())) {
    throw ConfigError(fmt::format("cca_fit: c={} exceeds min(d_a, d_b)={}", c,
                                  std::min(a.cols(), b.cols())));
  }
  if (ridge && *ridge < 0) throw ConfigError("cca_fit: ridge must be >= 0");

  const double n = static_cast<double>(a.rows());
  const double ridge_a = ridge ? *ridge : default_cca_ridge(a);
  const double ridge_b = ridge ? *ridge : default_cca_ridge(b);
  const Matrix caa = covariance(a.values()) + ridge_a * Matrix::Identity(a.cols(), a.cols());
  const Matrix cbb = covariance(b.values()) + ridge_b * Matrix::Identity(b.cols(), b.cols());
  const Matrix cab = (a.values().transpose() * b.values()) / n;

  const Matrix wa = inverse_sqrt(caa, "left");
  const Matrix wb = inverse_sqrt(cbb, "right");
  const Matrix t = wa * cab * wb;
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU().leftCols(c);
  Matrix v = svd.matrixV().leftCols(c);
  for (Index j = 0; j < c; ++j) {
    Index iu = 0;
    Index iv = 0;
    const double mu = u.col(j).cwiseAbs().maxCoeff(&iu);
    const double mv = v.col(j).cwiseAbs().maxCoeff(&iv);
    const double pivot = mu >= mv ? u(iu, j) : v(iv, j);
    if (pivot < 0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  CcaResult out;
  out.left = {wa * u, ProjectionKind::cca_left};
  out.right = {wb * v, ProjectionKind::cca_right};
  out.correlations.assign(svd.singularValues().data(), svd.singularValues().data() + c);
  return out;
}

DataMatrix project(const DataMatrix& x, const LinearProjection& proj) {
  if (x.cols() != proj.d_in()) {
    throw DataError(fmt::format("project: data has {} columns, projection expects {}", x.cols(),
                                proj.d_in()));
  }
  return DataMatrix(x.values() * proj.matrix);
}

}  // namespace thpi
