#include "thpi/baselines.hpp"

#include "thpi/error.hpp"
#include "thpi/preprocess.hpp"

#include <fmt/format.h>

#include <random>

namespace thpi {

HashModel lsh_fit(Index d, Index c, std::uint64_t seed) {
  if (d < 1 || c < 1) throw ConfigError(fmt::format("lsh: need d, c >= 1 (d={}, c={})", d, c));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix w(d, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < d; ++i) w(i, j) = gauss(rng);

  HashModel model;
  model.method = Method::lsh;
  model.centering.mean = Vector::Zero(d);
  model.preprocessing = LinearProjection::identity(d);
  model.rotation = std::move(w);
  model.bits = static_cast<std::uint32_t>(c);
  model.hyper = {0.0, 0.0, 0, 0, seed};
  return model;
}

HashModel lsh_fit(const DataMatrix& x, Index c, std::uint64_t seed) {
  x.require_nonempty("lsh_fit");
  HashModel model = lsh_fit(x.cols(), c, seed);
  model.centering = zero_center(x).second;
  return model;
}

HashModel cca_itq_fit(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                      const ItqOptions& options, ItqResult* result) {
  x_t.require_nonempty("cca-itq target");
  x_sc.require_nonempty("cca-itq source");
  if (x_t.rows() != x_sc.rows()) {
    throw DataError(fmt::format("cca-itq: {} target rows vs {} source rows", x_t.rows(),
                                x_sc.rows()));
  }
  if (c < 1 || c > std::min(x_t.cols(), x_sc.cols())) {
    throw ConfigError(fmt::format("cca-itq: {} bits exceed the CCA rank bound min(d_T={}, d_S={})",
                                  c, x_t.cols(), x_sc.cols()));
  }
  auto [xt, info] = zero_center(x_t);
  auto [xs, source_info] = zero_center(x_sc);
  CcaResult cca = cca_fit(xt, xs, c);
  const DataMatrix projected = project(xt, cca.left);
  ItqResult fit = itq_train(projected, c, options);

  HashModel model;
  model.method = Method::cca_itq;
  model.centering = std::move(info);
  model.preprocessing = std::move(cca.left);
  model.rotation = fit.rotation.values();
  model.bits = static_cast<std::uint32_t>(c);
  model.hyper = {0.0, 0.0, 0, options.iters, options.seed};
  if (result) *result = std::move(fit);
  return model;
}

}  // namespace thpi
