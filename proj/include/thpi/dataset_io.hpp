#pragma once

#include "thpi/matrix.hpp"
#include "thpi/model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace thpi {

enum class MatrixFormat { csv, thpi_bin };

/// Picks csv for a ".csv" extension, thpi-bin otherwise.
MatrixFormat format_from_path(const std::filesystem::path& path);
MatrixFormat parse_format(std::string_view name);

/// Reads a matrix. Parse errors are DataError and name the offending
/// line (csv) or byte offset (thpi-bin).
DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format,
                       bool csv_header = false);
void save_matrix(const std::filesystem::path& path, const DataMatrix& x, MatrixFormat format);

DataMatrix parse_csv_matrix(std::string_view text, bool skip_header = false);
std::string to_csv(const DataMatrix& x);

std::vector<std::uint8_t> to_thpi_bin(const DataMatrix& x);
DataMatrix parse_thpi_bin(std::span<const std::uint8_t> bytes);

/// Model container: "THPI" magic, container version byte, then tagged
/// length-prefixed records terminated by an end tag.
std::vector<std::uint8_t> serialize_model(const HashModel& model);
HashModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const HashModel& model, const std::filesystem::path& path);
HashModel load_model(const std::filesystem::path& path);

/// Partial-correspondence transfer split of an index-parallel corpus.
///
/// Test rows are drawn first; correspondences are sampled from the rest and
/// the remaining training rows contribute only their source side. The target
/// side of every training row is kept separately as the retrieval database.
struct SplitBundle {
  DataMatrix target_train;    // X_T, n rows
  DataMatrix source_corr;     // X_SC, row i paired with target_train row i
  DataMatrix source_extra;    // X_SU, n_S rows, may be empty
  DataMatrix target_test;     // queries
  DataMatrix target_database; // target rows of corr + extra (retrieval only)
  std::vector<Index> corr_origin;
  std::vector<Index> extra_origin;
  std::vector<Index> test_origin;
  double alpha = 1.0;
  std::uint64_t seed = 0;

  double realized_alpha() const {
    return static_cast<double>(corr_origin.size()) /
           static_cast<double>(corr_origin.size() + extra_origin.size());
  }
};

SplitBundle make_split(const DataMatrix& target_all, const DataMatrix& source_all, double alpha,
                       double test_fraction, std::uint64_t seed);

}  // namespace thpi
