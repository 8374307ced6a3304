#include "thpi/itq.hpp"

#include "thpi/error.hpp"
#include "thpi/itq_plus.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <limits>
#include <random>

namespace thpi {

OrthonormalMatrix::OrthonormalMatrix(Matrix values, double tolerance) : values_(std::move(values)) {
  if (values_.cols() > values_.rows()) {
    throw ConfigError(fmt::format("orthonormal matrix needs c <= d, got {}x{}", values_.rows(),
                                  values_.cols()));
  }
  const Matrix gram = values_.transpose() * values_;
  const double err = (gram - Matrix::Identity(values_.cols(), values_.cols())).norm();
  if (!(err <= tolerance)) {
    throw NumericalError(fmt::format("matrix columns are not orthonormal (||R^T R - I|| = {})",
                                     err));
  }
}

OrthonormalMatrix OrthonormalMatrix::identity(Index d, Index c) {
  return OrthonormalMatrix(Matrix::Identity(d, c));
}

namespace {

void check_procrustes_inputs(const Matrix& target, const Matrix& x) {
  if (target.rows() != x.rows()) {
    throw DataError(fmt::format("procrustes: target has {} rows, data has {}", target.rows(),
                                x.rows()));
  }
  if (x.rows() < 1) throw DataError("procrustes: no rows");
  if (target.cols() > x.cols()) {
    throw ConfigError(fmt::format("procrustes: c={} exceeds d={}", target.cols(), x.cols()));
  }
  if (!target.allFinite() || !x.allFinite()) {
    throw NumericalError("procrustes: non-finite input");
  }
}

// Orthonormal polar factor U V^T of a d x c matrix, with the sign convention.
Matrix polar_factor(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  for (Index j = 0; j < u.cols(); ++j) {
    Index at = 0;
    u.col(j).cwiseAbs().maxCoeff(&at);
    if (u(at, j) < 0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  return u * v.transpose();
}

// ||X R - A||^2 = tr(R^T G R) - 2 tr(R^T C) + ||A||^2 with G = X^T X, C = X^T A.
// Majorizing tr(R^T G R) with alpha = lambda_max(G) gives the monotone update
// R <- polar(C + (alpha I - G) R).
class ProcrustesProblem {
 public:
  ProcrustesProblem(const Matrix& target, const Matrix& x)
      : g_(x.transpose() * x), c_(x.transpose() * target) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g_, Eigen::EigenvaluesOnly);
    alpha_ = eig.eigenvalues().maxCoeff();
    spread_ = alpha_ - eig.eigenvalues().minCoeff();
  }

  const Matrix& cross() const { return c_; }
  const Matrix& gram() const { return g_; }
  bool exact() const { return c_.cols() == c_.rows() || spread_ <= 1e-12 * std::abs(alpha_); }

  double value(const Matrix& r) const {
    return (r.transpose() * g_ * r).trace() - 2.0 * r.cwiseProduct(c_).sum();
  }

  Matrix refine(Matrix r, double& f, std::uint32_t steps) const {
    for (std::uint32_t s = 0; s < steps; ++s) {
      Matrix next = polar_factor(c_ + alpha_ * r - g_ * r);
      const double f_next = value(next);
      if (!(f_next < f)) break;
      const double gain = f - f_next;
      r = std::move(next);
      f = f_next;
      if (gain <= 1e-13 * (std::abs(f) + 1.0)) break;
    }
    return r;
  }

 private:
  Matrix g_;
  Matrix c_;
  double alpha_ = 0.0;
  double spread_ = 0.0;
};

}  // namespace

OrthonormalMatrix procrustes(const Matrix& target, const Matrix& x) {
  check_procrustes_inputs(target, x);
  const ProcrustesProblem problem(target, x);
  Matrix best = polar_factor(problem.cross());
  if (problem.exact()) return OrthonormalMatrix(std::move(best));

  double f_best = problem.value(best);
  best = problem.refine(std::move(best), f_best, 2000);
  const Matrix ls = problem.gram().ldlt().solve(problem.cross());
  if (ls.allFinite()) {
    Matrix alt = polar_factor(ls);
    double f_alt = problem.value(alt);
    alt = problem.refine(std::move(alt), f_alt, 2000);
    if (f_alt < f_best) best = std::move(alt);
  }
  return OrthonormalMatrix(std::move(best));
}

OrthonormalMatrix procrustes_step(const Matrix& target, const Matrix& x,
                                  const OrthonormalMatrix& previous,
                                  std::uint32_t refine_steps) {
  check_procrustes_inputs(target, x);
  if (previous.rows() != x.cols() || previous.cols() != target.cols()) {
    throw DataError("procrustes_step: previous solution has the wrong shape");
  }
  const ProcrustesProblem problem(target, x);
  Matrix best = polar_factor(problem.cross());
  if (problem.exact()) return OrthonormalMatrix(std::move(best));

  double f_best = problem.value(best);
  const double f_prev = problem.value(previous.values());
  if (f_prev < f_best) {
    best = previous.values();
    f_best = f_prev;
  }
  return OrthonormalMatrix(problem.refine(std::move(best), f_best, refine_steps));
}

double quantization_loss(const BinaryCodeMatrix& b, const Matrix& x, const Matrix& r) {
  if (b.rows() != x.rows() || x.cols() != r.rows() || b.bits() != r.cols()) {
    throw DataError(fmt::format("quantization_loss: shapes B {}x{}, X {}x{}, R {}x{} disagree",
                                b.rows(), b.bits(), x.rows(), x.cols(), r.rows(), r.cols()));
  }
  return (b.as_real() - x * r).squaredNorm();
}

OrthonormalMatrix random_orthonormal(Index d, Index c, std::uint64_t seed) {
  if (c < 1 || c > d) {
    throw ConfigError(fmt::format("random_orthonormal: need 1 <= c <= d, got d={}, c={}", d, c));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(d, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < d; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, c);
  const Matrix r = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  // Unique QR: make diag(R) positive.
  for (Index j = 0; j < c; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return OrthonormalMatrix(std::move(q));
}

namespace {

BinaryCodeMatrix b_step(BStep kind, const Matrix& scores) {
  return kind == BStep::balanced ? update_b_balanced(scores) : sgn(scores);
}

}  // namespace

ItqResult itq_train(const DataMatrix& x, Index c, const ItqOptions& options) {
  x.require_nonempty("itq_train");
  if (c < 1 || x.cols() < c) {
    throw ConfigError(fmt::format("itq_train: {} bits need at least that many input dimensions, "
                                  "got {}",
                                  c, x.cols()));
  }
  if (options.iters < 1) throw ConfigError("itq_train: iters must be >= 1");

  const Matrix& xv = x.values();
  OrthonormalMatrix r = options.initial_rotation ? *options.initial_rotation
                                                 : random_orthonormal(x.cols(), c, options.seed);
  if (r.rows() != x.cols() || r.cols() != c) {
    throw ConfigError("itq_train: initial rotation has the wrong shape");
  }

  std::vector<double> trace;
  double previous = std::numeric_limits<double>::infinity();
  for (std::uint32_t t = 0; t < options.iters; ++t) {
    const BinaryCodeMatrix b = b_step(options.b_step, xv * r.values());
    r = procrustes_step(b.as_real(), xv, r);
    const double loss = quantization_loss(b, xv, r.values());
    trace.push_back(loss);
    if (loss == 0.0) break;
    if (options.rel_tol > 0 && std::isfinite(previous) &&
        std::abs(previous - loss) < options.rel_tol * previous) {
      break;
    }
    previous = loss;
  }
  BinaryCodeMatrix codes = b_step(options.b_step, xv * r.values());
  return {std::move(codes), std::move(r), std::move(trace)};
}

HashModel itq_fit(const DataMatrix& x, Index c, const ItqOptions& options, ItqResult* result) {
  auto [centered, info] = zero_center(x);
  ItqResult fit = itq_train(centered, c, options);
  HashModel model;
  model.method = Method::itq;
  model.centering = std::move(info);
  model.preprocessing = LinearProjection::identity(x.cols());
  model.rotation = fit.rotation.values();
  model.bits = static_cast<std::uint32_t>(c);
  model.hyper.lambda1 = 0.0;
  model.hyper.lambda2 = 0.0;
  model.hyper.k_graph = 0;
  model.hyper.iters = options.iters;
  model.hyper.seed = options.seed;
  if (result) *result = std::move(fit);
  return model;
}

}  // namespace thpi
