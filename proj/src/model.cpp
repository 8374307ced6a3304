#include "thpi/model.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>

namespace thpi {

std::string_view to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::identity: return "identity";
    case ProjectionKind::pca: return "pca";
    case ProjectionKind::cca_left: return "cca-left";
    case ProjectionKind::cca_right: return "cca-right";
    case ProjectionKind::lsh: return "lsh";
  }
  return "unknown";
}

LinearProjection LinearProjection::identity(Index d) {
  return {Matrix::Identity(d, d), ProjectionKind::identity};
}

void LinearProjection::validate() const {
  if (d_out() > d_in()) {
    throw DataError(fmt::format("projection d_out {} exceeds d_in {}", d_out(), d_in()));
  }
  if (kind == ProjectionKind::pca || kind == ProjectionKind::identity) {
    const Matrix gram = matrix.transpose() * matrix;
    if ((gram - Matrix::Identity(d_out(), d_out())).norm() > 1e-8) {
      throw DataError(fmt::format("{} projection columns are not orthonormal", to_string(kind)));
    }
  }
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::itq: return "itq";
    case Method::itq_plus: return "itq+";
    case Method::lap_itq_plus: return "lapitq+";
    case Method::lsh: return "lsh";
    case Method::cca_itq: return "cca-itq";
  }
  return "unknown";
}

Method parse_method(std::string_view tag) {
  for (Method m : {Method::itq, Method::itq_plus, Method::lap_itq_plus, Method::lsh,
                   Method::cca_itq}) {
    if (to_string(m) == tag) return m;
  }
  throw ConfigError(fmt::format("unknown method '{}' (expected itq, itq+, lapitq+, lsh, cca-itq)",
                                tag));
}

void HashModel::validate() const {
  preprocessing.validate();
  if (centering.mean.size() != preprocessing.d_in()) {
    throw DataError(fmt::format("model mean has length {}, preprocessing expects {}",
                                centering.mean.size(), preprocessing.d_in()));
  }
  if (preprocessing.d_out() != rotation.rows()) {
    throw DataError(fmt::format("preprocessing d_out {} != rotation rows {}",
                                preprocessing.d_out(), rotation.rows()));
  }
  if (static_cast<Index>(bits) != rotation.cols() || bits == 0) {
    throw DataError(fmt::format("model bits {} != rotation columns {}", bits, rotation.cols()));
  }
  if (method != Method::lsh) {
    if (rotation.cols() > rotation.rows()) {
      throw DataError("rotation has more columns than rows");
    }
    const Matrix gram = rotation.transpose() * rotation;
    if ((gram - Matrix::Identity(gram.rows(), gram.cols())).norm() > 1e-8) {
      throw DataError("model rotation columns are not orthonormal");
    }
  }
}

bool operator==(const HashModel& a, const HashModel& b) {
  auto same = [](const Matrix& x, const Matrix& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return a.method == b.method && a.bits == b.bits && a.hyper == b.hyper &&
         a.centering.mean.size() == b.centering.mean.size() &&
         a.centering.mean == b.centering.mean && a.preprocessing.kind == b.preprocessing.kind &&
         same(a.preprocessing.matrix, b.preprocessing.matrix) && same(a.rotation, b.rotation);
}

Matrix embed(const HashModel& model, const DataMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw DataError(fmt::format("encode: data has {} columns, model expects {}", x.cols(),
                                model.input_dim()));
  }
  const Matrix centered = x.values().rowwise() - model.centering.mean.transpose();
  if (model.preprocessing.kind == ProjectionKind::identity) {
    return centered * model.rotation;
  }
  return (centered * model.preprocessing.matrix) * model.rotation;
}

BinaryCodeMatrix encode(const HashModel& model, const DataMatrix& x) {
  return sgn(embed(model, x));
}

}  // namespace thpi
