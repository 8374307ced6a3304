#pragma once

#include "thpi/itq.hpp"
#include "thpi/model.hpp"

#include <cstdint>

namespace thpi {

/// Random-hyperplane LSH: c i.i.d. standard Gaussian directions in R^d,
/// codes are the signs of the projected centered input (zero thresholds).
/// The mean is zero; use the data overload to center on training data.
HashModel lsh_fit(Index d, Index c, std::uint64_t seed);
HashModel lsh_fit(const DataMatrix& x, Index c, std::uint64_t seed);

/// CCA-ITQ: target-side canonical directions fitted on the correspondence
/// pairs, then ITQ on the projected target data.
HashModel cca_itq_fit(const DataMatrix& x_t, const DataMatrix& x_sc, Index c,
                      const ItqOptions& options = {}, ItqResult* result = nullptr);

}  // namespace thpi
