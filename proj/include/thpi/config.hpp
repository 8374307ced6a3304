#pragma once

#include "thpi/model.hpp"
#include "thpi/retrieval.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace thpi {

/// Everything a train/eval/bench run needs. The text form is one
/// `key=value` per line with `#` comments; to_config_text() and
/// parse_config() round-trip losslessly.
struct RunConfig {
  std::vector<Method> methods{Method::itq_plus};
  std::vector<Index> bits{8, 16, 32, 64};
  double alpha = 0.5;
  double test_fraction = 0.1;
  double lambda1 = 0.01;
  double lambda2 = 0.01;
  Index k_graph = 5;
  std::uint32_t iters = 150;
  std::uint32_t inner_iters = 100;
  double rel_tol = 1e-6;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  /// Fraction of variance kept by a PCA front end; 0 disables it.
  double pca_energy = 0.0;
  /// With pca_energy == 0, project itq/itq+/lapitq+ inputs onto exactly
  /// `bits` principal components so every rotation is square.
  bool pca_to_bits = true;
  Index r_groundtruth = 50;
  std::vector<Index> ks{10, 50, 100, 200, 500};
  std::uint32_t workers = 1;
  bool rebalance = false;
  ThresholdMode threshold_mode = ThresholdMode::database;
  std::string target;
  std::string source;
  std::string source_extra;
  std::string out;
  std::string format;  // empty: decide by file extension

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Lambda grid used for tuning: {0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1, 2}.
const std::vector<double>& lambda_grid();

/// Applies one key=value pair; unknown keys are a ConfigError.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

RunConfig parse_config(std::string_view text, RunConfig base = {});
std::string to_config_text(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

template <typename T>
std::vector<T> parse_list(std::string_view text);

std::string_view to_string(ThresholdMode mode);

}  // namespace thpi
